"""Spatial and temporal frequency diagnostics for 4-D latent tensors.

All metrics apply to an arbitrary tensor x with axes (C, T, H, W) and are
typically evaluated on z, z_g, and the displacement d = z_g - z.

Conventions, fixed here and mirrored exactly by the brute-force oracles in
``noisediag.oracles``:

* Spatial: a 2-D real FFT over (H, W) per (c, t) slice; power averaged over
  slices to P(wh, ww) on the half spectrum wh in [0, H), ww in [0, W//2].
  The radial coordinate folds the full-height axis but not the half-width
  axis: r = sqrt((min(wh, H - wh) / (H/2))**2 + (ww / (W/2))**2).  The HF
  ratio is the raw half-spectrum power at r >= rho over the total including
  the DC bin; interior columns that stand for two conjugate full-spectrum
  bins are deliberately NOT double-counted.
* Temporal: a 1-D real FFT along T per (c, h, w) series; power averaged to
  Q(k), k = 0..K-1 with K = T//2 + 1.  With f_k = k / (K - 1), the HF ratio
  is the power at f_k >= rho_t over all non-DC power; DC is excluded from
  both sides.  Note f_1 = 1/(K-1), so for T <= 9 every non-DC bin clears a
  0.25 threshold; and for T = 2 the single non-DC bin has f = 1.
* Transforms are unnormalized; every power computation self-checks a
  Parseval identity (conjugate columns weighted 2) unless Python runs -O.
* Reductions run in numpy's deterministic index-order pairwise summation,
  so repeated calls reproduce results bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataio import PromptGroup, SampleRecord
from .errors import DegenerateInputError, InsufficientDataError, TensorShapeError

DEFAULT_RHO = 0.25
DEFAULT_RHO_T = 0.25

# Non-DC temporal power below this fraction of the total is indistinguishable
# from FFT round-off of a time-constant signal.
_CONSTANT_POWER_REL = 1e-24

_PARSEVAL_RTOL = 1e-9

TARGETS = ("z", "zg", "d")


@dataclass(frozen=True)
class SpectralMetrics:
    sp_hf: float
    t_hf: float
    t_diff_rms: float
    t_diff_rel: float


@dataclass(frozen=True)
class SummaryStats:
    mean: float
    p10: float
    p90: float


@dataclass(frozen=True)
class RecordSpectral:
    prompt_id: str
    seed_id: str
    values: dict[str, float]  # e.g. {"sp_hf_d": ..., "t_hf_d": ..., "delta_sp_hf": ...}


@dataclass(frozen=True)
class SpectralReport:
    n_records: int
    n_prompts: int
    aggregation: str  # "records" or "prompt_means"
    rho: float
    rho_t: float
    targets: tuple[str, ...]
    summary: dict[str, dict[str, SummaryStats]]  # summary[target][metric]
    delta_sp_hf: SummaryStats | None
    per_record: tuple[RecordSpectral, ...]


def _as_latent(x: np.ndarray) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 4:
        raise TensorShapeError(f"expected a 4-D (C, T, H, W) tensor, got ndim={arr.ndim}")
    if not np.isfinite(arr).all():
        raise DegenerateInputError("tensor contains non-finite values")
    return arr


def radial_frequencies(height: int, width: int) -> np.ndarray:
    """Normalized radial frequency for every rFFT2 half-spectrum bin."""
    w_half = width // 2 + 1
    wh = np.arange(height, dtype=np.float64)
    fh = np.minimum(wh, height - wh) / (height / 2.0)
    fw = np.arange(w_half, dtype=np.float64) / (width / 2.0)
    return np.sqrt(fh[:, None] ** 2 + fw[None, :] ** 2)


def temporal_frequencies(n_frames: int) -> np.ndarray:
    """Normalized frequency f_k = k/(K-1) for k = 0..K-1; f_0 is defined as 0."""
    k_bins = n_frames // 2 + 1
    if k_bins < 2:
        raise DegenerateInputError("temporal spectrum needs at least 2 frames")
    f = np.arange(k_bins, dtype=np.float64) / (k_bins - 1)
    f[0] = 0.0
    return f


def spatial_power(x: np.ndarray) -> np.ndarray:
    """Half-spectrum 2-D power averaged over (c, t); shape (H, W//2 + 1)."""
    x = _as_latent(x)
    h, w = x.shape[2], x.shape[3]
    spec = np.fft.rfft2(x, axes=(2, 3))
    power = spec.real**2 + spec.imag**2
    if __debug__:
        weights = np.full(power.shape[3], 2.0)
        weights[0] = 1.0
        if w % 2 == 0:
            weights[-1] = 1.0
        lhs = float((power * weights).sum())
        rhs = float(h * w * np.sum(x * x))
        assert abs(lhs - rhs) <= _PARSEVAL_RTOL * max(abs(rhs), 1e-300), (
            f"spatial Parseval self-test failed: {lhs} vs {rhs}"
        )
    return power.mean(axis=(0, 1))


def temporal_power(x: np.ndarray) -> np.ndarray:
    """Temporal power spectrum averaged over (c, h, w); shape (T//2 + 1,)."""
    x = _as_latent(x)
    t = x.shape[1]
    spec = np.fft.rfft(x, axis=1)
    power = spec.real**2 + spec.imag**2
    if __debug__:
        weights = np.full(power.shape[1], 2.0)
        weights[0] = 1.0
        if t % 2 == 0:
            weights[-1] = 1.0
        lhs = float((power * weights[None, :, None, None]).sum())
        rhs = float(t * np.sum(x * x))
        assert abs(lhs - rhs) <= _PARSEVAL_RTOL * max(abs(rhs), 1e-300), (
            f"temporal Parseval self-test failed: {lhs} vs {rhs}"
        )
    return power.mean(axis=(0, 2, 3))


def sp_hf(x: np.ndarray, rho: float = DEFAULT_RHO) -> float:
    """Fraction of mean 2-D spectral power at radial frequency >= rho."""
    x = _as_latent(x)
    if x.shape[2] < 2 and x.shape[3] < 2:
        raise DegenerateInputError("spatial spectrum needs H >= 2 or W >= 2")
    p_bar = spatial_power(x)
    total = float(p_bar.sum())
    if total == 0.0:
        raise DegenerateInputError("all-zero tensor: spatial HF ratio is 0/0")
    r = radial_frequencies(x.shape[2], x.shape[3])
    val = float(p_bar[r >= rho].sum()) / total
    assert -1e-12 <= val <= 1.0 + 1e-12
    return min(1.0, max(0.0, val))


def t_hf(x: np.ndarray, rho_t: float = DEFAULT_RHO_T) -> float:
    """Fraction of non-DC temporal power at normalized frequency >= rho_t."""
    x = _as_latent(x)
    q = temporal_power(x)
    if q.size < 2:
        raise DegenerateInputError("temporal HF ratio needs at least 2 frames")
    total = float(q.sum())
    non_dc = float(q[1:].sum())
    if total == 0.0:
        raise DegenerateInputError("all-zero tensor: temporal HF ratio is 0/0")
    if non_dc <= _CONSTANT_POWER_REL * total:
        raise DegenerateInputError(
            "tensor is constant along time: no non-DC power to form a ratio"
        )
    f = temporal_frequencies(x.shape[1])
    val = float(q[1:][f[1:] >= rho_t].sum()) / non_dc
    assert -1e-12 <= val <= 1.0 + 1e-12
    return min(1.0, max(0.0, val))


def t_diff_rms(x: np.ndarray) -> float:
    """RMS of first-order differences along the time axis."""
    x = _as_latent(x)
    if x.shape[1] < 2:
        raise DegenerateInputError("temporal differences need at least 2 frames")
    dx = x[:, 1:] - x[:, :-1]
    return float(np.sqrt(np.mean(dx * dx)))


def t_diff_rel(x: np.ndarray) -> float:
    """Temporal-difference RMS relative to the signal RMS."""
    x = _as_latent(x)
    denom_sq = float(np.mean(x * x))
    if denom_sq == 0.0:
        raise DegenerateInputError("all-zero tensor: relative temporal difference is 0/0")
    return t_diff_rms(x) / float(np.sqrt(denom_sq))


def spectral_metrics(
    x: np.ndarray, rho: float = DEFAULT_RHO, rho_t: float = DEFAULT_RHO_T
) -> SpectralMetrics:
    return SpectralMetrics(
        sp_hf=sp_hf(x, rho),
        t_hf=t_hf(x, rho_t),
        t_diff_rms=t_diff_rms(x),
        t_diff_rel=t_diff_rel(x),
    )


_METRIC_FNS = {
    "sp_hf": sp_hf,
    "t_hf": t_hf,
    "t_diff_rms": lambda x, rho, rho_t: t_diff_rms(x),
    "t_diff_rel": lambda x, rho, rho_t: t_diff_rel(x),
}


def _record_values(
    rec: SampleRecord, targets: Sequence[str], rho: float, rho_t: float
) -> dict[str, float]:
    tensors = {"z": rec.z, "zg": rec.z_g}
    if "d" in targets:
        tensors["d"] = rec.z_g - rec.z
    out: dict[str, float] = {}
    for target in targets:
        x = tensors[target]
        try:
            out[f"sp_hf_{target}"] = sp_hf(x, rho)
            out[f"t_hf_{target}"] = t_hf(x, rho_t)
            out[f"t_diff_rms_{target}"] = t_diff_rms(x)
            out[f"t_diff_rel_{target}"] = t_diff_rel(x)
        except DegenerateInputError as exc:
            raise DegenerateInputError(
                f"record ({rec.prompt_id}, {rec.seed_id}), target {target!r}: {exc}"
            ) from None
    if "z" in targets and "zg" in targets:
        out["delta_sp_hf"] = out["sp_hf_zg"] - out["sp_hf_z"]
    return out


def _summarize(values: Sequence[float]) -> SummaryStats:
    arr = np.asarray(values, dtype=np.float64)
    p10, p90 = np.percentile(arr, [10.0, 90.0])  # linear interpolation
    assert p10 <= p90
    return SummaryStats(mean=float(np.mean(arr)), p10=float(p10), p90=float(p90))


def spectral_report(
    groups: Sequence[PromptGroup],
    targets: Sequence[str] = TARGETS,
    rho: float = DEFAULT_RHO,
    rho_t: float = DEFAULT_RHO_T,
    prompt_averaged: bool = False,
    jobs: int = 1,
) -> SpectralReport:
    """Frequency summary (mean / P10 / P90 per metric and target).

    By default the population summarized is the individual records; with
    ``prompt_averaged`` each metric is first averaged over the seeds of a
    prompt and the summary runs across prompts.  Degenerate records raise
    (with the offending prompt/seed named) rather than being dropped.
    """
    groups = list(groups)
    targets = tuple(targets)
    unknown = [t for t in targets if t not in TARGETS]
    if unknown:
        raise ValueError(f"unknown spectral targets {unknown}; expected subset of {TARGETS}")
    if not targets:
        raise ValueError("need at least one spectral target")
    records = [rec for g in groups for rec in g.records]
    if not records:
        raise InsufficientDataError("no records to analyze")

    def work(rec: SampleRecord) -> RecordSpectral:
        return RecordSpectral(rec.prompt_id, rec.seed_id, _record_values(rec, targets, rho, rho_t))

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_record = list(pool.map(work, records))
    else:
        per_record = [work(rec) for rec in records]

    metric_keys = list(per_record[0].values.keys())
    if prompt_averaged:
        population: dict[str, list[float]] = {k: [] for k in metric_keys}
        for g in groups:
            rows = [r for r in per_record if r.prompt_id == g.prompt_id]
            for k in metric_keys:
                population[k].append(float(np.mean([r.values[k] for r in rows])))
    else:
        population = {k: [r.values[k] for r in per_record] for k in metric_keys}

    summary: dict[str, dict[str, SummaryStats]] = {}
    for target in targets:
        summary[target] = {
            name: _summarize(population[f"{name}_{target}"])
            for name in ("sp_hf", "t_hf", "t_diff_rms", "t_diff_rel")
        }
    delta = _summarize(population["delta_sp_hf"]) if "delta_sp_hf" in population else None

    return SpectralReport(
        n_records=len(per_record),
        n_prompts=len(groups),
        aggregation="prompt_means" if prompt_averaged else "records",
        rho=rho,
        rho_t=rho_t,
        targets=targets,
        summary=summary,
        delta_sp_hf=delta,
        per_record=tuple(per_record),
    )
