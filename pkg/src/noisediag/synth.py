"""Synthetic (z, z_g) dataset generation with analytically known structure.

Stands in, at desk scale, for a learned noise mapper: every prompt gets a
fixed unit direction and every seed a fresh Gaussian draw, so directional
stability, norm dispersion, low-rank structure, and spectral content of the
displacement are all controlled by a handful of scalars.

Generative model, per prompt p and seed s::

    z        ~ N(0, I)
    z_g      = z + alpha * v_p + rank1_scale * xi_s * w_p + epsilon * eta_hat

* ``v_p``: unit direction, fixed per prompt, optionally spectrally shaped.
* ``w_p``: second unit direction orthogonal to v_p (same shaping); its
  per-seed coefficient ``xi_s ~ N(0, 1)`` plants cross-seed low-rank
  structure, lifting the top explained-variance ratio above the isotropic
  floor of 1/(S-1).
* ``eta_hat``: per-seed isotropic Gaussian draw normalized to unit length.
  The normalization is what makes the expected directional stability equal
  alpha**2 / (alpha**2 + epsilon**2) (for rank1_scale = 0) with no
  dimension factor.

Spectral shaping zeroes frequency bins of the direction's Gaussian draw
and renormalizes: ``spatial_lowpass(c)`` keeps radial bins r < c,
``spatial_highpass(c)`` keeps r >= c, ``temporal_lowpass(c)`` keeps
f_k < c (including DC), ``temporal_highpass(c)`` keeps f_k >= c (zeroing
DC).  Ops compose, and spatial/temporal masks act on separate axes, so a
spatially-lowpassed, temporally-highpassed direction has sp_hf = 0 and
t_hf = 1 up to FFT round-trip dust.

Determinism: all draws come from Philox streams keyed (rng_seed, stream)
with the layout below, so generation is byte-identical run to run and safe
to parallelize per prompt.

    prompt-level  stream = (p << 24) | tag      tag 2: v, 3: w, 4: xi
    record-level  stream = (p << 24) | (s << 8) | tag    tag 0: z, 1: eta
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng
from .dataio import (
    DatasetManifest,
    ScoreRow,
    ScoreTable,
    load_manifest,
    save_tensor,
)
from .errors import RegimeSpecError
from .spectral import radial_frequencies, temporal_frequencies

SHAPING_KINDS = (
    "spatial_lowpass",
    "spatial_highpass",
    "temporal_lowpass",
    "temporal_highpass",
)

DEFAULT_SHAPE = (4, 16, 40, 64)

_TAG_Z = 0
_TAG_ETA = 1
_TAG_V = 2
_TAG_W = 3
_TAG_XI = 4


def _prompt_stream(p: int, tag: int) -> int:
    return (p << 24) | tag


def _record_stream(p: int, s: int, tag: int) -> int:
    return (p << 24) | (s << 8) | tag


@dataclass(frozen=True)
class ShapingOp:
    kind: str
    cutoff: float


@dataclass(frozen=True)
class RegimeSpec:
    """Knobs for one synthetic regime; see the module docstring for the model."""

    n_prompts: int
    n_seeds: int
    alpha: float
    epsilon: float
    shape: tuple[int, int, int, int] = DEFAULT_SHAPE
    rank1_scale: float = 0.0
    spectral_shaping: tuple[ShapingOp, ...] = field(default_factory=tuple)
    rng_seed: int = 0
    identity: bool = False

    @classmethod
    def from_json(cls, doc: dict) -> "RegimeSpec":
        if not isinstance(doc, dict):
            raise RegimeSpecError("regime spec must be a JSON object")
        known = {
            "n_prompts",
            "n_seeds",
            "alpha",
            "epsilon",
            "shape",
            "rank1_scale",
            "spectral_shaping",
            "rng_seed",
            "identity",
        }
        unknown = set(doc) - known
        if unknown:
            raise RegimeSpecError(f"unknown regime spec fields: {sorted(unknown)}")
        try:
            shaping_raw = doc.get("spectral_shaping", [])
            if isinstance(shaping_raw, dict):
                shaping_raw = [shaping_raw]
            shaping = tuple(
                ShapingOp(kind=str(op["kind"]), cutoff=float(op["cutoff"]))
                for op in shaping_raw
            )
            spec = cls(
                n_prompts=int(doc["n_prompts"]),
                n_seeds=int(doc["n_seeds"]),
                alpha=float(doc["alpha"]),
                epsilon=float(doc["epsilon"]),
                shape=tuple(int(v) for v in doc.get("shape", DEFAULT_SHAPE)),
                rank1_scale=float(doc.get("rank1_scale", 0.0)),
                spectral_shaping=shaping,
                rng_seed=int(doc.get("rng_seed", 0)),
                identity=bool(doc.get("identity", False)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise RegimeSpecError(f"malformed regime spec: {exc}") from exc
        validate_regime(spec)
        return spec

    @classmethod
    def from_json_file(cls, path: str | Path) -> "RegimeSpec":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise RegimeSpecError(f"{path}: cannot parse regime spec ({exc})") from exc
        return cls.from_json(doc)

    def to_json(self) -> dict:
        return {
            "n_prompts": self.n_prompts,
            "n_seeds": self.n_seeds,
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "shape": list(self.shape),
            "rank1_scale": self.rank1_scale,
            "spectral_shaping": [
                {"kind": op.kind, "cutoff": op.cutoff} for op in self.spectral_shaping
            ],
            "rng_seed": self.rng_seed,
            "identity": self.identity,
        }


def validate_regime(spec: RegimeSpec) -> None:
    if len(spec.shape) != 4 or any(int(v) < 1 for v in spec.shape):
        raise RegimeSpecError(f"shape must be 4 positive dims, got {spec.shape}")
    if spec.n_prompts < 1 or spec.n_seeds < 1:
        raise RegimeSpecError("n_prompts and n_seeds must be >= 1")
    if spec.n_prompts >= (1 << 32) or spec.n_seeds >= (1 << 16):
        raise RegimeSpecError("prompt/seed counts exceed the stream-id layout")
    for name in ("alpha", "epsilon", "rank1_scale"):
        if getattr(spec, name) < 0:
            raise RegimeSpecError(f"{name} must be >= 0")
    magnitudes_zero = spec.alpha == spec.epsilon == spec.rank1_scale == 0.0
    if not spec.identity and magnitudes_zero:
        raise RegimeSpecError(
            "alpha, epsilon, and rank1_scale are all zero; "
            "request an identity regime explicitly if z_g = z is intended"
        )
    if spec.identity and not magnitudes_zero:
        raise RegimeSpecError("an identity regime must have all magnitudes zero")
    _, t, h, w = spec.shape
    r_max = float(radial_frequencies(h, w).max())
    for op in spec.spectral_shaping:
        if op.kind not in SHAPING_KINDS:
            raise RegimeSpecError(f"unknown shaping kind {op.kind!r}")
        if not math.isfinite(op.cutoff) or op.cutoff <= 0.0:
            raise RegimeSpecError(f"{op.kind}: cutoff must be > 0, got {op.cutoff}")
        if op.kind.startswith("temporal"):
            if t < 2:
                raise RegimeSpecError(f"{op.kind}: temporal shaping needs T >= 2")
            if op.kind == "temporal_highpass" and op.cutoff > 1.0:
                raise RegimeSpecError(
                    f"temporal_highpass: cutoff {op.cutoff} exceeds the Nyquist-normalized "
                    "maximum of 1.0; no bins would survive"
                )
        elif op.kind == "spatial_highpass" and op.cutoff > r_max:
            raise RegimeSpecError(
                f"spatial_highpass: cutoff {op.cutoff} exceeds the maximum radial "
                f"frequency {r_max:.6f} for shape {spec.shape}; no bins would survive"
            )


def apply_shaping(x: np.ndarray, ops) -> np.ndarray:
    """Zero the frequency bins excluded by each op, in order."""
    out = np.asarray(x, dtype=np.float64)
    _, t, h, w = out.shape
    for op in ops:
        if op.kind.startswith("spatial"):
            r = radial_frequencies(h, w)
            keep = r < op.cutoff if op.kind == "spatial_lowpass" else r >= op.cutoff
            spec = np.fft.rfft2(out, axes=(2, 3))
            spec *= keep
            out = np.fft.irfft2(spec, s=(h, w), axes=(2, 3))
        else:
            f = temporal_frequencies(t)
            keep = f < op.cutoff if op.kind == "temporal_lowpass" else f >= op.cutoff
            spec = np.fft.rfft(out, axis=1)
            spec *= keep[None, :, None, None]
            out = np.fft.irfft(spec, n=t, axis=1)
    return out


def _unit_direction(spec: RegimeSpec, stream: int) -> np.ndarray:
    size = int(np.prod(spec.shape))
    draw = rng.standard_normals(spec.rng_seed, stream, size).reshape(spec.shape)
    shaped = apply_shaping(draw, spec.spectral_shaping)
    norm = float(np.linalg.norm(shaped))
    if norm == 0.0:
        raise RegimeSpecError(
            "spectral shaping removed all frequency content; relax the cutoffs"
        )
    return shaped / norm


def generate_dataset(spec: RegimeSpec, out_dir: str | Path) -> DatasetManifest:
    """Write the regime's tensors plus manifest.json; returns the parsed manifest.

    Byte-identical for identical specs: every tensor is a pure function of
    (rng_seed, prompt index, seed index) through the documented streams.
    """
    validate_regime(spec)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    size = int(np.prod(spec.shape))

    entries = []
    for p in range(spec.n_prompts):
        prompt_id = f"p{p:04d}"
        v = w = None
        xi = None
        if not spec.identity:
            v = _unit_direction(spec, _prompt_stream(p, _TAG_V))
            if spec.rank1_scale > 0.0:
                w_raw = _unit_direction(spec, _prompt_stream(p, _TAG_W))
                w_raw = w_raw - float(np.vdot(w_raw, v)) * v
                w_norm = float(np.linalg.norm(w_raw))
                if w_norm == 0.0:
                    raise RegimeSpecError(
                        "secondary direction collinear with the primary; "
                        "shaping leaves too few degrees of freedom"
                    )
                w = w_raw / w_norm
                xi = rng.standard_normals(
                    spec.rng_seed, _prompt_stream(p, _TAG_XI), spec.n_seeds
                )
        for s in range(spec.n_seeds):
            seed_id = f"s{s:02d}"
            z = rng.standard_normals(
                spec.rng_seed, _record_stream(p, s, _TAG_Z), size
            ).reshape(spec.shape)
            if spec.identity:
                z_g = z.copy()
            else:
                z_g = z + spec.alpha * v
                if w is not None:
                    z_g = z_g + (spec.rank1_scale * float(xi[s])) * w
                if spec.epsilon > 0.0:
                    eta = rng.standard_normals(
                        spec.rng_seed, _record_stream(p, s, _TAG_ETA), size
                    ).reshape(spec.shape)
                    eta /= float(np.linalg.norm(eta))
                    z_g = z_g + spec.epsilon * eta
            path_z = f"{prompt_id}_{seed_id}_z.npy"
            path_zg = f"{prompt_id}_{seed_id}_zg.npy"
            save_tensor(out / path_z, z)
            save_tensor(out / path_zg, z_g)
            entries.append(
                {
                    "prompt_id": prompt_id,
                    "seed_id": seed_id,
                    "path_z": path_z,
                    "path_zg": path_zg,
                }
            )

    manifest_doc = {"declared_shape": list(spec.shape), "entries": entries}
    manifest_path = out / "manifest.json"
    manifest_path.write_text(
        json.dumps(manifest_doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return load_manifest(manifest_path)


def make_paired_scores(
    n_prompts: int,
    n_seeds: int,
    mean_delta: float,
    delta_sd: float,
    metric: str = "temporal_style",
    baseline_arm: str = "baseline",
    treatment_arm: str = "treatment",
    base_level: float = 0.0,
    seed_noise_sd: float = 0.01,
    rng_seed: int = 0,
) -> ScoreTable:
    """Two-arm score fixture whose seed-averaged deltas have an exact sample
    mean and (ddof=1) standard deviation.

    The per-prompt effect is constant across seeds, so seed averaging
    recovers it exactly up to float rounding; per-seed noise is shared by
    both arms to keep the pairing clean.  Needs n_prompts >= 2 so the
    standardization is defined.
    """
    if n_prompts < 2:
        raise ValueError("need at least 2 prompts to plant a delta distribution")
    raw = rng.standard_normals(rng_seed, 10, n_prompts)
    centered = raw - raw.mean()
    sd = float(np.std(centered, ddof=1))
    if sd == 0.0:
        raise ValueError("degenerate draw; change rng_seed")
    deltas = mean_delta + delta_sd * (centered / sd)

    base_noise = rng.standard_normals(rng_seed, 11, n_prompts * n_seeds) * seed_noise_sd
    rows = []
    for p in range(n_prompts):
        prompt_id = f"p{p:04d}"
        for s in range(n_seeds):
            seed_id = f"s{s:02d}"
            base = base_level + float(base_noise[p * n_seeds + s])
            rows.append(ScoreRow(prompt_id, seed_id, metric, base, baseline_arm))
            rows.append(ScoreRow(prompt_id, seed_id, metric, base + float(deltas[p]), treatment_arm))
    return ScoreTable(rows)
