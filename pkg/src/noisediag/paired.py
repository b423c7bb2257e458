"""Prompt-level paired evaluation.

The statistical unit is the prompt: each arm's scores are first averaged
over the seeds of a prompt, the per-prompt means are differenced (treatment
minus baseline), and the resulting delta vector feeds a percentile
bootstrap CI for the mean difference and a sign-flip permutation test of
the zero-mean null.

Conventions, surfaced in result metadata rather than chosen silently:

* the bootstrap CI is the percentile method (linear-interpolated order
  statistics) over means of with-replacement resamples;
* the permutation test is two-sided by default via the |mean| statistic; a
  ``sided`` flag exposes the one-sided variants;
* all 2**n sign patterns are enumerated exactly when n <= 20, otherwise
  Monte Carlo with the add-one correction p = (1 + hits) / (n_perms + 1),
  so a Monte Carlo p-value is never 0;
* ties count as hits (>= comparison), matching the add-one convention;
* randomness comes from the counter-based streams in noisediag.rng, keyed
  by the caller's rng_seed, and is recorded in every result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from ._kernels import bootstrap_means, signflip_enum_means, signflip_means
from .dataio import ScoreTable
from .errors import InsufficientDataError, ScoreTableError

EXACT_ENUMERATION_LIMIT = 20

SIDES = ("two-sided", "greater", "less")


@dataclass(frozen=True)
class PairedSample:
    prompt_id: str
    baseline: float
    treatment: float
    delta: float


@dataclass(frozen=True)
class BootstrapCI:
    low: float
    high: float
    mean: float
    level: float
    n_resamples: int
    rng_seed: int


@dataclass(frozen=True)
class SignFlipResult:
    p_value: float
    mode: str  # "exact" or "monte_carlo"
    n_permutations: int  # 2**n in exact mode
    sided: str
    rng_seed: int | None  # None in exact mode


@dataclass(frozen=True)
class PairedTestResult:
    metric: str
    baseline_arm: str
    treatment_arm: str
    n_prompts: int
    baseline_mean: float
    treatment_mean: float
    mean_delta: float
    ci_low: float
    ci_high: float
    ci_level: float
    n_bootstrap: int
    p_value: float
    permutation_mode: str
    n_permutations: int
    sided: str
    rng_seed: int


@dataclass(frozen=True)
class PairedReport:
    result: PairedTestResult
    samples: tuple[PairedSample, ...]


def _seq_mean(values: np.ndarray) -> float:
    # Sequential left-to-right accumulation: matches the kernels' arithmetic
    # for the identity sign pattern, so exact ties stay exact.
    acc = 0.0
    for v in values:
        acc += float(v)
    return acc / len(values)


def seed_average(table: ScoreTable, metric: str, arm: str | None = None) -> dict[str, float]:
    """Per-prompt means of one metric over available seeds.

    Seeds are averaged in sorted seed_id order so results are independent
    of row order in the input file.
    """
    nested = table.by_prompt(metric, arm)
    if not nested:
        where = f" (arm {arm!r})" if arm is not None else ""
        raise ScoreTableError(f"no rows for metric {metric!r}{where}")
    out: dict[str, float] = {}
    for prompt_id, seeds in nested.items():
        vals = np.array([seeds[sid] for sid in sorted(seeds)], dtype=np.float64)
        out[prompt_id] = _seq_mean(vals)
    return out


def paired_deltas(baseline: dict[str, float], treatment: dict[str, float]) -> list[PairedSample]:
    """Pair per-prompt means; every prompt must exist in both arms."""
    missing_t = sorted(set(baseline) - set(treatment))
    missing_b = sorted(set(treatment) - set(baseline))
    problems = []
    if missing_t:
        problems.append(f"missing from treatment arm: {', '.join(missing_t)}")
    if missing_b:
        problems.append(f"missing from baseline arm: {', '.join(missing_b)}")
    if problems:
        raise ScoreTableError("; ".join(problems))
    return [
        PairedSample(pid, baseline[pid], treatment[pid], treatment[pid] - baseline[pid])
        for pid in sorted(baseline)
    ]


def bootstrap_ci(
    deltas,
    n_resamples: int = 10000,
    level: float = 0.95,
    rng_seed: int = 0,
) -> BootstrapCI:
    """Percentile bootstrap CI for the mean of a delta vector.

    Deterministic given rng_seed: resample indices derive from the
    (rng_seed, STREAM_BOOTSTRAP) Philox stream, row-major, one word per
    drawn element.
    """
    arr = np.ascontiguousarray(deltas, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("deltas must be one-dimensional")
    n = arr.shape[0]
    if n < 2:
        raise InsufficientDataError(f"bootstrap needs >= 2 paired deltas, got {n}")
    if n_resamples < 100:
        raise ValueError(f"n_resamples must be >= 100, got {n_resamples}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    words = rng.raw_words(rng_seed, rng.STREAM_BOOTSTRAP, n_resamples * n).reshape(n_resamples, n)
    means = bootstrap_means(arr, words)
    tail = 100.0 * (1.0 - level) / 2.0
    low, high = np.percentile(means, [tail, 100.0 - tail])
    if __debug__:
        center = float(np.mean(means))
        slack = 1e-12 * max(1.0, abs(center))  # ulp room: exact in real arithmetic
        assert low - slack <= center <= high + slack
    return BootstrapCI(
        low=float(low),
        high=float(high),
        mean=_seq_mean(arr),
        level=level,
        n_resamples=n_resamples,
        rng_seed=rng_seed,
    )


def sign_flip_test(
    deltas,
    n_permutations: int = 100000,
    rng_seed: int = 0,
    method: str = "auto",
    sided: str = "two-sided",
) -> SignFlipResult:
    """Sign-flip permutation test of the zero-mean null.

    ``method``: "auto" enumerates exactly when n <= 20 and samples
    otherwise; "exact" / "monte_carlo" force a mode (exact still capped at
    the kernel's enumeration limit).
    """
    arr = np.ascontiguousarray(deltas, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("deltas must be one-dimensional")
    n = arr.shape[0]
    if n < 1:
        raise InsufficientDataError("sign-flip test needs at least one delta")
    if sided not in SIDES:
        raise ValueError(f"sided must be one of {SIDES}, got {sided!r}")
    if method not in ("auto", "exact", "monte_carlo"):
        raise ValueError(f"method must be auto, exact, or monte_carlo, got {method!r}")
    exact = method == "exact" or (method == "auto" and n <= EXACT_ENUMERATION_LIMIT)

    if exact:
        stats = signflip_enum_means(arr)
        observed = float(stats[-1])  # all-bits-set pattern is the identity
        hits = _count_hits(stats, observed, sided)
        return SignFlipResult(
            p_value=hits / stats.size,
            mode="exact",
            n_permutations=int(stats.size),
            sided=sided,
            rng_seed=None,
        )

    if n_permutations < 1:
        raise ValueError(f"n_permutations must be >= 1, got {n_permutations}")
    n_words = (n + 63) >> 6
    words = rng.raw_words(rng_seed, rng.STREAM_SIGNFLIP, n_permutations * n_words)
    stats = signflip_means(arr, words.reshape(n_permutations, n_words))
    observed = _seq_mean(arr)
    hits = _count_hits(stats, observed, sided)
    p_value = (1 + hits) / (n_permutations + 1)
    assert 1.0 / (n_permutations + 1) <= p_value <= 1.0
    return SignFlipResult(
        p_value=p_value,
        mode="monte_carlo",
        n_permutations=n_permutations,
        sided=sided,
        rng_seed=rng_seed,
    )


def _count_hits(stats: np.ndarray, observed: float, sided: str) -> int:
    if sided == "two-sided":
        return int(np.count_nonzero(np.abs(stats) >= abs(observed)))
    if sided == "greater":
        return int(np.count_nonzero(stats >= observed))
    return int(np.count_nonzero(stats <= observed))


def paired_report(
    baseline_scores: ScoreTable,
    treatment_scores: ScoreTable,
    metric: str,
    baseline_arm: str = "baseline",
    treatment_arm: str = "treatment",
    n_bootstrap: int = 10000,
    n_permutations: int = 100000,
    ci_level: float = 0.95,
    rng_seed: int = 0,
    method: str = "auto",
    sided: str = "two-sided",
) -> PairedReport:
    """Full paired analysis of one metric: seed-average, CI, permutation p.

    The two tables may come from separate per-arm files or from one file
    split by its arm column (see split_arms).
    """
    base = seed_average(baseline_scores, metric)
    treat = seed_average(treatment_scores, metric)
    samples = paired_deltas(base, treat)
    deltas = np.array([s.delta for s in samples], dtype=np.float64)

    ci = bootstrap_ci(deltas, n_resamples=n_bootstrap, level=ci_level, rng_seed=rng_seed)
    flip = sign_flip_test(
        deltas, n_permutations=n_permutations, rng_seed=rng_seed, method=method, sided=sided
    )
    result = PairedTestResult(
        metric=metric,
        baseline_arm=baseline_arm,
        treatment_arm=treatment_arm,
        n_prompts=len(samples),
        baseline_mean=float(np.mean([s.baseline for s in samples])),
        treatment_mean=float(np.mean([s.treatment for s in samples])),
        mean_delta=ci.mean,
        ci_low=ci.low,
        ci_high=ci.high,
        ci_level=ci_level,
        n_bootstrap=n_bootstrap,
        p_value=flip.p_value,
        permutation_mode=flip.mode,
        n_permutations=flip.n_permutations,
        sided=sided,
        rng_seed=rng_seed,
    )
    return PairedReport(result=result, samples=tuple(samples))


def split_arms(table: ScoreTable, baseline_arm: str, treatment_arm: str) -> tuple[ScoreTable, ScoreTable]:
    """Split a single arm-labelled table into (baseline, treatment) tables."""
    arms = table.arm_names()
    for label in (baseline_arm, treatment_arm):
        if label not in arms:
            raise ScoreTableError(
                f"arm {label!r} not present in table (available: {list(arms) or 'none'})"
            )
    return table.filter(arm=baseline_arm), table.filter(arm=treatment_arm)
