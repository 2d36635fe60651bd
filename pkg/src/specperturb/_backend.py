"""Pick the kernel implementation once, at import time.

The compiled extension is used when it imports; otherwise, or when
``SPECPERTURB_PURE_PYTHON`` is set to a non-empty value, the numpy
fallback is used.
"""
import os

from . import _fallback

if os.environ.get("SPECPERTURB_PURE_PYTHON"):
    kernels = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        kernels = _fallback
        BACKEND = "python"

jacobi_eigh = kernels.jacobi_eigh
jacobi_svd = kernels.jacobi_svd
pairwise_sqdist = kernels.pairwise_sqdist
lloyd = kernels.lloyd
masked_dot = kernels.masked_dot
