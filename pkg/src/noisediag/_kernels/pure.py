"""Pure-numpy resampling kernels.

These mirror ``noisediag._kernels._speedups`` operation for operation.  The
contract both backends honour: randomness arrives as pre-drawn raw uint64
words, and within each resample the elements accumulate in ascending index
order with one IEEE-754 addition apiece.  The column loops below realize
exactly that order (elementwise numpy ops round identically to a C scalar
loop), so the two backends return bit-identical arrays.  Tests assert exact
equality; do not reorder the accumulations.

Index derivation for bootstrap draws: ``u = (word >> 11) * 2**-53`` and
``index = min(int(u * n), n - 1)``.  The multiply-then-truncate carries a
selection bias of order n / 2**53, which is irrelevant at any feasible n.
"""

from __future__ import annotations

import numpy as np

_U53 = 2.0**-53

# Beyond 24 the enumeration array alone is > 128 MiB; the statistical code
# switches to Monte Carlo long before this.
ENUM_MAX = 24


def bootstrap_means(values: np.ndarray, words: np.ndarray) -> np.ndarray:
    """Means of with-replacement resamples; words[r, j] picks element j of resample r."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    n = values.shape[0]
    if words.ndim != 2 or words.shape[1] != n:
        raise ValueError("words must be 2-D with one column per value")
    u = (words >> np.uint64(11)).astype(np.float64) * _U53
    idx = (u * n).astype(np.int64)
    np.minimum(idx, n - 1, out=idx)
    acc = np.zeros(words.shape[0], dtype=np.float64)
    for j in range(n):
        acc += values[idx[:, j]]
    return acc / n


def signflip_means(values: np.ndarray, words: np.ndarray) -> np.ndarray:
    """Means under random sign flips; bit j of words[r, j // 64] keeps +values[j]."""
    values = np.ascontiguousarray(values, dtype=np.float64)
    n = values.shape[0]
    if words.ndim != 2 or words.shape[1] < (n + 63) >> 6:
        raise ValueError("words must carry at least ceil(n / 64) columns")
    acc = np.zeros(words.shape[0], dtype=np.float64)
    for j in range(n):
        bit = (words[:, j >> 6] >> np.uint64(j & 63)) & np.uint64(1)
        acc += np.where(bit.astype(bool), values[j], -values[j])
    return acc / n


def signflip_enum_means(values: np.ndarray) -> np.ndarray:
    """Means for all 2**n sign patterns; bit j of the pattern index keeps +values[j].

    The all-bits-set pattern (last entry) reproduces the observed mean with
    the same additions, which is what makes tie handling exact.
    """
    values = np.ascontiguousarray(values, dtype=np.float64)
    n = values.shape[0]
    if n > ENUM_MAX:
        raise ValueError(f"exact enumeration limited to n <= {ENUM_MAX}, got {n}")
    if n == 0:
        raise ValueError("need at least one value")
    total = 1 << n
    m = np.arange(total, dtype=np.uint64)
    acc = np.zeros(total, dtype=np.float64)
    for j in range(n):
        bit = (m >> np.uint64(j)) & np.uint64(1)
        acc += np.where(bit.astype(bool), values[j], -values[j])
    return acc / n
