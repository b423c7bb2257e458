"""Deterministic random streams.

Every random draw in this package comes from a Philox-4x64 counter-based
generator keyed with two 64-bit words: a user seed and a stream id.
Distinct stream ids give statistically independent streams, so work can be
split across prompts, seeds, or workers without any draw depending on
execution order.

The derived quantities are fixed conventions, not implementation accidents:

* uniforms take the top 53 bits of a raw word: ``u = (w >> 11) * 2**-53``,
  giving values on ``[0, 1)``;
* standard normals apply the Box-Muller transform to uniform pairs
  ``(u1, u2)`` consumed in draw order: ``r = sqrt(-2 * log(1 - u1))``,
  ``theta = 2 * pi * u2``, yielding ``r*cos(theta)`` then ``r*sin(theta)``.

Given the same seed and stream id, the raw word stream is identical on any
platform numpy supports; derived floats are bit-identical on a fixed
platform and agree up to libm rounding of log/cos/sin across platforms.
The stream-id layout used by each subsystem is documented in FORMATS.md.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Philox

_MASK64 = (1 << 64) - 1
_U53 = 2.0**-53

# Stream ids claimed by the paired-statistics module.
STREAM_BOOTSTRAP = 1
STREAM_SIGNFLIP = 2


def raw_words(seed: int, stream: int, n: int) -> np.ndarray:
    """Return ``n`` raw uint64 words from the (seed, stream) Philox stream."""
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return Philox(key=key).random_raw(n)


def uniforms_from_words(words: np.ndarray) -> np.ndarray:
    """Map raw words to float64 uniforms on [0, 1) using the top 53 bits."""
    return (words >> np.uint64(11)).astype(np.float64) * _U53


def normals_from_words(words: np.ndarray) -> np.ndarray:
    """Box-Muller transform of an even-length word array; one normal per word."""
    if words.size % 2:
        raise ValueError("Box-Muller consumes words in pairs; pass an even count")
    u = uniforms_from_words(words)
    u1, u2 = u[0::2], u[1::2]
    r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1], so the log is finite
    theta = (2.0 * np.pi) * u2
    out = np.empty(u.size, dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out


def standard_normals(seed: int, stream: int, n: int) -> np.ndarray:
    """Return ``n`` standard normals from the (seed, stream) stream."""
    z = normals_from_words(raw_words(seed, stream, n + (n % 2)))
    return z[:n] if n % 2 else z
