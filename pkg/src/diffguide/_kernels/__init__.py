"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The numba path is the default. Set DIFFGUIDE_DISABLE_NUMBA=1 (or install
without numba) to force the numpy path; both implement the same contract
and are compared in benchmarks/bench_kernels.py.
"""

import os

from . import _numpy_impl

_disable = os.environ.get("DIFFGUIDE_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

if not _disable:
    try:
        from . import _numba_impl as _impl

        HAS_NUMBA = True
    except ImportError:
        _impl = _numpy_impl
        HAS_NUMBA = False
else:
    _impl = _numpy_impl
    HAS_NUMBA = False

conv2d = _impl.conv2d
conv2d_input_grad = _impl.conv2d_input_grad
conv2d_weight_grad = _impl.conv2d_weight_grad

__all__ = ["conv2d", "conv2d_input_grad", "conv2d_weight_grad", "HAS_NUMBA"]
