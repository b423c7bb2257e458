#!/usr/bin/env python3
"""Benchmark the compiled resampling kernels against the pure-numpy fallback.

Checks bit-identical agreement on every case before timing.  Sizes default
to the shipped statistical defaults (10k bootstrap resamples, 100k sign
flips, n = 100 prompts; exact enumeration at n = 20).

Run after building the extension:

    pip install -e .            # or: python setup.py build_ext --inplace
    python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from noisediag import rng
from noisediag._kernels import pure

try:
    from noisediag._kernels import _speedups
except ImportError:
    _speedups = None


def timeit(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--n", type=int, default=100, help="paired sample size")
    ap.add_argument("--n-bootstrap", type=int, default=10000)
    ap.add_argument("--n-permutations", type=int, default=100000)
    ap.add_argument("--enum-n", type=int, default=20)
    args = ap.parse_args()

    if _speedups is None:
        print("compiled kernels unavailable; build the extension first")
        return 1

    deltas = rng.standard_normals(7, 99, args.n)
    boot_words = rng.raw_words(7, rng.STREAM_BOOTSTRAP, args.n_bootstrap * args.n).reshape(
        args.n_bootstrap, args.n
    )
    n_words = (args.n + 63) >> 6
    flip_words = rng.raw_words(7, rng.STREAM_SIGNFLIP, args.n_permutations * n_words).reshape(
        args.n_permutations, n_words
    )
    enum_deltas = deltas[: args.enum_n]

    cases = [
        (
            f"bootstrap_means  ({args.n_bootstrap} x {args.n})",
            lambda impl: impl.bootstrap_means(deltas, boot_words),
        ),
        (
            f"signflip_means   ({args.n_permutations} x {args.n})",
            lambda impl: impl.signflip_means(deltas, flip_words),
        ),
        (
            f"signflip_enum    (2**{args.enum_n})",
            lambda impl: impl.signflip_enum_means(enum_deltas),
        ),
    ]

    print(f"{'kernel':<34} {'pure':>10} {'compiled':>10} {'speedup':>9}   identical")
    for name, call in cases:
        ref = call(pure)
        fast = call(_speedups)
        same = bool(np.array_equal(ref, fast))
        t_pure = timeit(lambda: call(pure), args.repeats)
        t_fast = timeit(lambda: call(_speedups), args.repeats)
        print(
            f"{name:<34} {t_pure * 1e3:>8.2f}ms {t_fast * 1e3:>8.2f}ms "
            f"{t_pure / t_fast:>8.1f}x   {same}"
        )
        if not same:
            raise SystemExit(f"backend mismatch in {name}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
