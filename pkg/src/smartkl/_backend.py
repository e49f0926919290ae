"""Pick the compiled kernels when importable, otherwise the NumPy fallback.

Set ``SMARTKL_PURE=1`` to force the fallback.
"""

import os

from . import _fallback

try:
    if os.environ.get("SMARTKL_PURE"):
        raise ImportError("pure backend requested")
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _fallback
    BACKEND = "numpy"

csr_matvec = _impl.csr_matvec
csr_rmatvec = _impl.csr_rmatvec
kl_sum = _impl.kl_sum

__all__ = ["BACKEND", "csr_matvec", "csr_rmatvec", "kl_sum"]
