"""Pick the kernel implementation at import time.

The compiled module is used when it was built; ``MMFFC_BACKEND=python``
forces the NumPy fallback (useful for benchmarking and equivalence tests).
"""
import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if os.environ.get("MMFFC_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as kernels  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass
