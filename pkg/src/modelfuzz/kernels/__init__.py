"""Kernel path selection.

The hot inner loops (convolutions and pools) ship in two builds: numba
``@njit`` kernels and a pure-numpy fallback with identical accumulation
semantics. ``MODELFUZZ_KERNELS`` picks the path at import time:

    auto   use numba when importable, else numpy (default)
    numba  require the numba build
    numpy  force the fallback

``benchmarks/bench_kernels.py`` compares the two paths for speed and checks
their outputs agree bitwise.
"""

from __future__ import annotations

import os

from . import numpy_impl

_MODE = os.environ.get("MODELFUZZ_KERNELS", "auto").lower()

if _MODE not in ("auto", "numba", "numpy"):
    raise RuntimeError(f"MODELFUZZ_KERNELS must be auto, numba, or numpy; got {_MODE!r}")

if _MODE == "numpy":
    _impl = numpy_impl
    _ACTIVE = "numpy"
else:
    try:
        from . import numba_impl as _impl

        _ACTIVE = "numba"
    except ImportError:
        if _MODE == "numba":
            raise
        _impl = numpy_impl
        _ACTIVE = "numpy"


def active_backend() -> str:
    """Which kernel build is live: "numba" or "numpy"."""
    return _ACTIVE


conv2d_forward_f64 = _impl.conv2d_forward_f64
conv2d_pairwise_f32 = _impl.conv2d_pairwise_f32
depthwise_forward_f64 = _impl.depthwise_forward_f64
depthwise_pairwise_f32 = _impl.depthwise_pairwise_f32
maxpool_f64 = _impl.maxpool_f64
maxpool_f32 = _impl.maxpool_f32
avgpool_forward_f64 = _impl.avgpool_forward_f64
avgpool_pairwise_f32 = _impl.avgpool_pairwise_f32
