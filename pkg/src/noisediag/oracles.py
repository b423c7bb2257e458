"""Brute-force reference implementations backing the test suite.

Everything here trades speed for obviousness: direct-summation DFTs,
fsum-based reductions, a cyclic Jacobi eigensolver, and literal sign-pattern
enumeration.  Nothing in this module touches numpy.fft, numpy.linalg, or
the production kernels, so agreement between an oracle and its production
counterpart is evidence, not tautology.

The spectral oracles use the exact conventions documented in
noisediag.spectral (raw half-spectrum sums, min-folded height axis,
K = T//2 + 1 with f_k = k/(K-1), DC excluded from the temporal ratio).
Sizes are capped; these are for tests, not production work.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache

import numpy as np

ORACLE_MAX_SIZE = 64


@lru_cache(maxsize=None)
def _dft_matrix(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) matrix of exp(-2i*pi*k*t/n_in) built by direct evaluation."""
    m = np.empty((n_out, n_in), dtype=np.complex128)
    for k in range(n_out):
        for t in range(n_in):
            m[k, t] = cmath.exp(-2j * math.pi * k * t / n_in)
    return m


def dft1_power(series) -> np.ndarray:
    """Half-spectrum power of a real sequence by direct summation."""
    s = np.asarray(series, dtype=np.float64)
    if s.ndim != 1 or s.size > ORACLE_MAX_SIZE:
        raise ValueError("oracle expects a 1-D series of length <= 64")
    n = s.size
    k_bins = n // 2 + 1
    spec = _dft_matrix(n, k_bins) @ s
    return (spec.real**2 + spec.imag**2).astype(np.float64)


def dft2_power(slice2d) -> np.ndarray:
    """Half-spectrum 2-D power of a real (H, W) slice by direct summation."""
    a = np.asarray(slice2d, dtype=np.float64)
    if a.ndim != 2 or max(a.shape) > ORACLE_MAX_SIZE:
        raise ValueError("oracle expects a 2-D slice with sides <= 64")
    h, w = a.shape
    spec = _dft_matrix(h, h) @ a.astype(np.complex128) @ _dft_matrix(w, w // 2 + 1).T
    return (spec.real**2 + spec.imag**2).astype(np.float64)


def dft2_power_loops(slice2d) -> np.ndarray:
    """Quadruple-loop variant of dft2_power; used to vet the oracle itself."""
    a = np.asarray(slice2d, dtype=np.float64)
    h, w = a.shape
    out = np.empty((h, w // 2 + 1))
    for wh in range(h):
        for ww in range(w // 2 + 1):
            re = 0.0
            im = 0.0
            for i in range(h):
                for j in range(w):
                    ang = -2.0 * math.pi * (wh * i / h + ww * j / w)
                    re += a[i, j] * math.cos(ang)
                    im += a[i, j] * math.sin(ang)
            out[wh, ww] = re * re + im * im
    return out


def radial_frequency(wh: int, ww: int, height: int, width: int) -> float:
    return math.sqrt(
        (min(wh, height - wh) / (height / 2.0)) ** 2 + (ww / (width / 2.0)) ** 2
    )


def oracle_sp_hf(x, rho: float = 0.25) -> float:
    """Spatial HF ratio through the direct-summation pipeline."""
    x = np.asarray(x, dtype=np.float64)
    c, t, h, w = x.shape
    powers = [dft2_power(x[ci, ti]) for ci in range(c) for ti in range(t)]
    w_half = w // 2 + 1
    num_terms = []
    den_terms = []
    for wh in range(h):
        for ww in range(w_half):
            p_bar = math.fsum(p[wh, ww] for p in powers) / len(powers)
            den_terms.append(p_bar)
            if radial_frequency(wh, ww, h, w) >= rho:
                num_terms.append(p_bar)
    return math.fsum(num_terms) / math.fsum(den_terms)


def oracle_t_hf(x, rho_t: float = 0.25) -> float:
    """Temporal HF ratio through the direct-summation pipeline."""
    x = np.asarray(x, dtype=np.float64)
    c, t, h, w = x.shape
    k_bins = t // 2 + 1
    powers = [
        dft1_power(x[ci, :, hi, wi])
        for ci in range(c)
        for hi in range(h)
        for wi in range(w)
    ]
    q = [math.fsum(p[k] for p in powers) / len(powers) for k in range(k_bins)]
    non_dc = math.fsum(q[1:])
    num = math.fsum(q[k] for k in range(1, k_bins) if k / (k_bins - 1) >= rho_t)
    return num / non_dc


def oracle_t_diff_rel(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    diffs = [
        (x[c, t + 1, h, w] - x[c, t, h, w]) ** 2
        for c in range(x.shape[0])
        for t in range(x.shape[1] - 1)
        for h in range(x.shape[2])
        for w in range(x.shape[3])
    ]
    rms = math.sqrt(math.fsum(diffs) / len(diffs))
    sig = math.sqrt(math.fsum(v * v for v in x.ravel().tolist()) / x.size)
    return rms / sig


def fsum_dot(a, b) -> float:
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    return math.fsum(float(x) * float(y) for x, y in zip(av, bv))


def fsum_norm(a) -> float:
    return math.sqrt(fsum_dot(a, a))


def oracle_rel_disp(z, z_g) -> float:
    return fsum_norm(np.asarray(z_g) - np.asarray(z)) / fsum_norm(z)


def oracle_cos_sim(z, z_g) -> float:
    return fsum_dot(z, z_g) / (fsum_norm(z) * fsum_norm(z_g))


def oracle_dir_stab(displacements) -> float:
    """Mean pairwise cosine of unit displacements, scalar-loop arithmetic."""
    flats = [np.asarray(d, dtype=np.float64).ravel() for d in displacements]
    s = len(flats)
    units = [f / fsum_norm(f) for f in flats]
    terms = [fsum_dot(units[i], units[j]) for i in range(s) for j in range(i + 1, s)]
    return 2.0 * math.fsum(terms) / (s * (s - 1))


def oracle_cv_dnorm(displacements) -> float:
    norms = [fsum_norm(np.asarray(d).ravel()) for d in displacements]
    s = len(norms)
    mean = math.fsum(norms) / s
    var = math.fsum((n - mean) ** 2 for n in norms) / s  # population divisor
    return math.sqrt(var) / mean


def jacobi_eigvals(matrix, max_sweeps: int = 100) -> list[float]:
    """Eigenvalues of a small symmetric matrix via cyclic Jacobi rotations.

    Returns them sorted descending.  Independent of LAPACK by construction.
    """
    a = [[float(v) for v in row] for row in np.asarray(matrix, dtype=np.float64)]
    n = len(a)
    if n == 1:
        return [a[0][0]]
    scale = max(abs(a[i][j]) for i in range(n) for j in range(n)) or 1.0
    for _ in range(max_sweeps):
        off = math.sqrt(
            math.fsum(a[i][j] ** 2 for i in range(n) for j in range(n) if i != j)
        )
        if off <= 1e-15 * scale * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p][q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                theta = (a[q][q] - a[p][p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp, akq = a[k][p], a[k][q]
                    a[k][p] = c * akp - s * akq
                    a[k][q] = s * akp + c * akq
                for k in range(n):
                    apk, aqk = a[p][k], a[q][k]
                    a[p][k] = c * apk - s * aqk
                    a[q][k] = s * apk + c * aqk
    return sorted((a[i][i] for i in range(n)), reverse=True)


def oracle_gram_eigvals(displacements, centered: bool = True) -> list[float]:
    """Descending eigenvalues of the (optionally seed-centered) Gram matrix."""
    flats = [np.asarray(d, dtype=np.float64).ravel() for d in displacements]
    s = len(flats)
    if s > 16:
        raise ValueError("oracle expects at most 16 displacement vectors")
    if centered:
        dim = flats[0].size
        mean = [math.fsum(f[k] for f in flats) / s for k in range(dim)]
        flats = [f - np.asarray(mean) for f in flats]
    gram = [[fsum_dot(flats[i], flats[j]) for j in range(s)] for i in range(s)]
    return jacobi_eigvals(gram)


def oracle_evr1(displacements, eigen_floor: float = 1e-12) -> float:
    """Top explained-variance ratio with the production dust convention."""
    eig = oracle_gram_eigvals(displacements, centered=True)
    lam_max = eig[0]
    kept = [v for v in eig if v > eigen_floor * lam_max]
    return lam_max / math.fsum(kept)


def oracle_exact_signflip(deltas, sided: str = "two-sided") -> float:
    """Exact sign-flip p-value by literal 2**n enumeration (n <= 20)."""
    vals = [float(v) for v in np.asarray(deltas, dtype=np.float64).ravel()]
    n = len(vals)
    if not 1 <= n <= 20:
        raise ValueError("oracle enumerates 1 <= n <= 20 deltas")
    observed = math.fsum(vals) / n
    hits = 0
    for pattern in range(1 << n):
        s = math.fsum(vals[j] if (pattern >> j) & 1 else -vals[j] for j in range(n)) / n
        if sided == "two-sided":
            hits += abs(s) >= abs(observed)
        elif sided == "greater":
            hits += s >= observed
        else:
            hits += s <= observed
    return hits / (1 << n)
