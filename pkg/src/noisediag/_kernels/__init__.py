"""Resampling kernels with a compiled fast path.

``_speedups`` is a Cython extension built at install time when a toolchain
is available; ``pure`` is a numpy implementation of the same operations.
Both honour one arithmetic contract (see pure.py), so swapping backends
never changes a single output bit.  The active backend is chosen at import:
the compiled module when importable, unless NOISEDIAG_PURE=1 forces the
fallback (used by the benchmark and the parity tests).
"""

from __future__ import annotations

import os

from . import pure

BACKEND = "pure"
_impl = pure

if os.environ.get("NOISEDIAG_PURE") != "1":
    try:
        from . import _speedups as _ext
    except ImportError:
        pass
    else:
        BACKEND = "compiled"
        _impl = _ext

bootstrap_means = _impl.bootstrap_means
signflip_means = _impl.signflip_means
signflip_enum_means = _impl.signflip_enum_means

__all__ = ["BACKEND", "bootstrap_means", "signflip_means", "signflip_enum_means", "pure"]
