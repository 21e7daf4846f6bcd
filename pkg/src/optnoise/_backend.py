"""Select the kernel implementation at import time.

The compiled extension is preferred.  Set ``OPTNOISE_PURE_PYTHON=1`` to
force the pure-Python fallback (used by the test suite and benchmarks to
exercise both paths).
"""
import os

from . import _pykernels

if os.environ.get("OPTNOISE_PURE_PYTHON") == "1":
    kernels = _pykernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _pykernels

BACKEND = "python" if kernels is _pykernels else "cython"
