"""Kernel backend selection.

The hot spatial kernels exist twice: compiled with numba and as pure numpy.
Which set runs is decided once at import time from the ``CAMKIT_BACKEND``
environment variable:

    CAMKIT_BACKEND=numba   use the jitted kernels (default when numba imports)
    CAMKIT_BACKEND=numpy   force the pure-numpy fallback

``benchmarks/bench_backends.py`` times both sets side by side.
"""

import os

from . import _kernels_numpy

_requested = os.environ.get("CAMKIT_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ValueError(f"CAMKIT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numba":
    try:
        from . import _kernels_numba as _active
        BACKEND = "numba"
    except ImportError:
        _active = _kernels_numpy
        BACKEND = "numpy"
else:
    _active = _kernels_numpy
    BACKEND = "numpy"

conv2d_forward = _active.conv2d_forward
conv2d_input_grad = _active.conv2d_input_grad
maxpool_forward = _active.maxpool_forward
maxpool_scatter = _active.maxpool_scatter
avgpool_forward = _active.avgpool_forward
avgpool_scatter = _active.avgpool_scatter
