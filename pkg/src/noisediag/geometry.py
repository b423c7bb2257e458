"""Displacement geometry.

Record-level metrics compare a baseline draw z with its transformed
counterpart z_g on flattened tensors: relative displacement |d|/|z| and
cosine similarity cos(z, z_g), where d = z_g - z.  Group-level metrics look
across the seeds of one prompt: mean pairwise cosine of unit displacements
(directional stability), coefficient of variation of displacement norms,
and the top explained-variance ratio of the seed-centered displacements.

Conventions fixed here:

* the CV uses the population standard deviation (divisor S);
* explained variance is computed from the S x S Gram matrix of the
  centered, flattened displacements (the feature dimension is huge and S is
  tiny); eigenvalues below 1e-12 of the largest are treated as numerical
  dust and excluded from the denominator;
* zero-norm displacements raise rather than being skipped, since skipping
  a seed would silently bias the directional statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dataio import PromptGroup, SampleRecord
from .errors import DegenerateInputError, InsufficientDataError, TensorShapeError

# Eigenvalue dust cutoff, relative to the top eigenvalue.
EVR_EIGEN_FLOOR = 1e-12
# Centered-to-raw energy ratio below (this)**2 counts as rank 0 after centering.
CENTERED_RANK0_REL = 1e-12

_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class GeometryRecordMetrics:
    rel_disp: float
    cos_sim: float
    d_norm: float


@dataclass(frozen=True)
class PromptDirectionMetrics:
    dir_stab: float
    cv_dnorm: float
    evr1: float
    n_seeds: int


@dataclass(frozen=True)
class PromptGeometry:
    """Per-prompt row for reports: direction metrics plus seed-mean record metrics."""

    prompt_id: str
    n_seeds: int
    dir_stab: float
    cv_dnorm: float
    evr1: float
    rel_disp_mean: float
    cos_sim_mean: float


@dataclass(frozen=True)
class RecordGeometry:
    prompt_id: str
    seed_id: str
    rel_disp: float
    cos_sim: float
    d_norm: float


@dataclass(frozen=True)
class GeometryReport:
    """Aggregate in the shape of the geometry summary table.

    ``record_level`` averages rel_disp/cos_sim over all records;
    ``prompt_level`` first averages within each prompt (rel_disp/cos_sim)
    or computes the per-prompt direction metrics, then aggregates across
    prompts.  Both variants are emitted because either reading of
    "aggregate over 100 prompts x 5 seeds" is defensible.
    """

    n_prompts: int
    n_records: int
    record_level: dict[str, dict[str, float]]
    prompt_level: dict[str, dict[str, float]]
    per_prompt: tuple[PromptGeometry, ...]
    per_record: tuple[RecordGeometry, ...]


def displacement(record: SampleRecord) -> np.ndarray:
    """Elementwise z_g - z."""
    if record.z.shape != record.z_g.shape:
        raise TensorShapeError(
            f"record ({record.prompt_id}, {record.seed_id}): z shape {record.z.shape} "
            f"!= z_g shape {record.z_g.shape}"
        )
    return record.z_g - record.z


def geometry_metrics(record: SampleRecord) -> GeometryRecordMetrics:
    """Relative displacement and cosine similarity on flattened tensors."""
    z = record.z.ravel()
    z_g = record.z_g.ravel()
    if z.shape != z_g.shape:
        raise TensorShapeError(
            f"record ({record.prompt_id}, {record.seed_id}): mismatched shapes"
        )
    nz = float(np.linalg.norm(z))
    nzg = float(np.linalg.norm(z_g))
    if nz == 0.0:
        raise DegenerateInputError(
            f"record ({record.prompt_id}, {record.seed_id}): zero-norm z"
        )
    if nzg == 0.0:
        raise DegenerateInputError(
            f"record ({record.prompt_id}, {record.seed_id}): zero-norm z_g"
        )
    d_norm = float(np.linalg.norm(z_g - z))
    rel_disp = d_norm / nz
    cos = float(np.dot(z, z_g)) / (nz * nzg)
    assert -1.0 - _BOUND_SLACK <= cos <= 1.0 + _BOUND_SLACK
    cos = min(1.0, max(-1.0, cos))
    return GeometryRecordMetrics(rel_disp=rel_disp, cos_sim=cos, d_norm=d_norm)


def _flat_displacements(group: PromptGroup) -> tuple[np.ndarray, np.ndarray]:
    """(S, D) displacement matrix and the per-seed norms, in record order."""
    if group.n_seeds < 2:
        raise InsufficientDataError(
            f"prompt {group.prompt_id!r}: directional metrics need >= 2 seeds, "
            f"got {group.n_seeds}"
        )
    flats = [displacement(rec).ravel() for rec in group.records]
    mat = np.stack(flats)
    norms = np.array([float(np.linalg.norm(f)) for f in flats])
    return mat, norms


def dir_stab(group: PromptGroup) -> float:
    """Mean pairwise inner product of unit displacements across seeds.

    Pairs are enumerated i < j in the group's sorted-seed order.
    """
    mat, norms = _flat_displacements(group)
    for rec, n in zip(group.records, norms):
        if n == 0.0:
            raise DegenerateInputError(
                f"prompt {group.prompt_id!r}: zero-norm displacement for seed {rec.seed_id!r}"
            )
    units = mat / norms[:, None]
    s = group.n_seeds
    acc = 0.0
    for i in range(s):
        for j in range(i + 1, s):
            acc += float(np.dot(units[i], units[j]))
    val = 2.0 * acc / (s * (s - 1))
    lower = -1.0 / (s - 1)
    assert lower - _BOUND_SLACK <= val <= 1.0 + _BOUND_SLACK
    return min(1.0, max(lower, val))


def cv_dnorm(group: PromptGroup) -> float:
    """Coefficient of variation of displacement norms (population std / mean)."""
    _, norms = _flat_displacements(group)
    mean = float(np.mean(norms))
    if mean == 0.0:
        raise DegenerateInputError(
            f"prompt {group.prompt_id!r}: all displacements are zero"
        )
    std = float(np.sqrt(np.mean((norms - mean) ** 2)))
    val = std / mean
    assert val >= -_BOUND_SLACK
    return max(0.0, val)


def evr1(group: PromptGroup) -> float:
    """Top explained-variance ratio of seed-centered flattened displacements.

    Eigenvalues are the squared singular values of the centered (S, D)
    matrix, obtained from its S x S Gram matrix.  Raises when the centered
    matrix is (numerically) rank 0, i.e. all displacements coincide.
    """
    mat, _ = _flat_displacements(group)
    raw_energy = float(np.sum(mat * mat))
    centered = mat - mat.mean(axis=0)
    s = centered.shape[0]
    gram = np.empty((s, s))
    for i in range(s):
        for j in range(i, s):
            gram[i, j] = gram[j, i] = float(np.dot(centered[i], centered[j]))
    centered_energy = float(np.trace(gram))
    if raw_energy == 0.0 or centered_energy <= (CENTERED_RANK0_REL**2) * raw_energy:
        raise DegenerateInputError(
            f"prompt {group.prompt_id!r}: displacements identical across seeds "
            "(rank 0 after centering)"
        )
    eigvals = np.linalg.eigvalsh(gram)  # ascending
    lam_max = float(eigvals[-1])
    kept = eigvals[eigvals > EVR_EIGEN_FLOOR * lam_max]
    val = lam_max / float(np.sum(kept))
    rank = kept.size
    assert 1.0 / rank - _BOUND_SLACK <= val <= 1.0 + _BOUND_SLACK
    return min(1.0, val)


def prompt_direction_metrics(group: PromptGroup) -> PromptDirectionMetrics:
    return PromptDirectionMetrics(
        dir_stab=dir_stab(group),
        cv_dnorm=cv_dnorm(group),
        evr1=evr1(group),
        n_seeds=group.n_seeds,
    )


def _prompt_geometry(group: PromptGroup) -> tuple[PromptGeometry, list[RecordGeometry]]:
    recs = []
    for rec in group.records:
        m = geometry_metrics(rec)
        recs.append(RecordGeometry(rec.prompt_id, rec.seed_id, m.rel_disp, m.cos_sim, m.d_norm))
    dm = prompt_direction_metrics(group)
    row = PromptGeometry(
        prompt_id=group.prompt_id,
        n_seeds=group.n_seeds,
        dir_stab=dm.dir_stab,
        cv_dnorm=dm.cv_dnorm,
        evr1=dm.evr1,
        rel_disp_mean=float(np.mean([r.rel_disp for r in recs])),
        cos_sim_mean=float(np.mean([r.cos_sim for r in recs])),
    )
    return row, recs


def aggregate_geometry(groups: Sequence[PromptGroup], jobs: int = 1) -> GeometryReport:
    """Per-prompt metrics plus mean/median aggregation across prompts.

    ``jobs`` > 1 evaluates prompts in a thread pool; results are reduced in
    sorted prompt order either way, so the output does not depend on it.
    """
    groups = list(groups)
    if not groups:
        raise InsufficientDataError("no prompt groups to aggregate")

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            computed = list(pool.map(_prompt_geometry, groups))
    else:
        computed = [_prompt_geometry(g) for g in groups]

    per_prompt = [row for row, _ in computed]
    per_record = [r for _, recs in computed for r in recs]

    def stats(vals: Iterable[float]) -> dict[str, float]:
        arr = np.asarray(list(vals), dtype=np.float64)
        return {"mean": float(np.mean(arr)), "median": float(np.median(arr))}

    record_level = {
        "rel_disp": {"mean": float(np.mean([r.rel_disp for r in per_record]))},
        "cos_sim": {"mean": float(np.mean([r.cos_sim for r in per_record]))},
    }
    prompt_level = {
        "rel_disp": {"mean": float(np.mean([p.rel_disp_mean for p in per_prompt]))},
        "cos_sim": {"mean": float(np.mean([p.cos_sim_mean for p in per_prompt]))},
        "dir_stab": stats(p.dir_stab for p in per_prompt),
        "cv_dnorm": stats(p.cv_dnorm for p in per_prompt),
        "evr1": stats(p.evr1 for p in per_prompt),
    }
    return GeometryReport(
        n_prompts=len(per_prompt),
        n_records=len(per_record),
        record_level=record_level,
        prompt_level=prompt_level,
        per_prompt=tuple(per_prompt),
        per_record=tuple(per_record),
    )
