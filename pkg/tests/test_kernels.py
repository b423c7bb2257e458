"""Backend parity: the compiled kernels and the numpy fallback must agree
bit for bit, which is what makes the import-time selection invisible."""

import numpy as np
import pytest

from noisediag import rng
from noisediag._kernels import BACKEND, pure

try:
    from noisediag._kernels import _speedups
except ImportError:
    _speedups = None

needs_ext = pytest.mark.skipif(_speedups is None, reason="compiled kernels not built")


def _deltas(n, seed=5):
    return rng.standard_normals(seed, 77, n)


@needs_ext
@pytest.mark.parametrize("n,n_res", [(1, 50), (7, 200), (64, 128), (100, 500), (130, 64)])
def test_bootstrap_means_bit_identical(n, n_res):
    d = _deltas(n)
    words = rng.raw_words(3, rng.STREAM_BOOTSTRAP, n_res * n).reshape(n_res, n)
    assert np.array_equal(pure.bootstrap_means(d, words), _speedups.bootstrap_means(d, words))


@needs_ext
@pytest.mark.parametrize("n,n_res", [(1, 100), (63, 100), (64, 100), (65, 100), (100, 1000)])
def test_signflip_means_bit_identical(n, n_res):
    d = _deltas(n)
    n_words = (n + 63) >> 6
    words = rng.raw_words(4, rng.STREAM_SIGNFLIP, n_res * n_words).reshape(n_res, n_words)
    assert np.array_equal(pure.signflip_means(d, words), _speedups.signflip_means(d, words))


@needs_ext
@pytest.mark.parametrize("n", [1, 2, 5, 10, 16, 20])
def test_signflip_enum_bit_identical(n):
    d = _deltas(n)
    assert np.array_equal(pure.signflip_enum_means(d), _speedups.signflip_enum_means(d))


def test_enum_identity_pattern_is_last():
    d = np.array([0.25, -1.5, 3.0])
    stats = pure.signflip_enum_means(d)
    assert stats.size == 8
    acc = 0.0
    for v in d:
        acc += v
    assert stats[-1] == acc / 3  # all-bits-set pattern reproduces the observed mean
    assert stats[0] == -stats[-1]  # all-flipped pattern is its exact negation


def test_bootstrap_constant_values_give_constant_means():
    d = np.full(10, 0.3)
    words = rng.raw_words(8, 1, 40 * 10).reshape(40, 10)
    means = pure.bootstrap_means(d, words)
    assert np.all(means == means[0])


def test_enum_size_guard():
    with pytest.raises(ValueError):
        pure.signflip_enum_means(np.zeros(25))
    with pytest.raises(ValueError):
        pure.signflip_enum_means(np.zeros(0))


def test_word_shape_guards():
    d = np.zeros(5)
    with pytest.raises(ValueError):
        pure.bootstrap_means(d, rng.raw_words(0, 1, 12).reshape(4, 3))
    with pytest.raises(ValueError):
        pure.signflip_means(np.zeros(65), rng.raw_words(0, 2, 4).reshape(4, 1))


def test_backend_reported():
    assert BACKEND in ("pure", "compiled")
