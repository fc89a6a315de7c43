"""Kernel backend selection.

The compiled extension ``fracinv._ckernels`` is used when it imports; set
``FRACINV_PURE=1`` to force the numpy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("FRACINV_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py
else:
    _impl = _kernels_py

lag_weights = _impl.lag_weights
toeplitz_matvec = _impl.toeplitz_matvec
toeplitz_dense = _impl.toeplitz_dense
solve_small_batched = _impl.solve_small_batched
vandermonde_products = _impl.vandermonde_products

__all__ = [
    "BACKEND",
    "lag_weights",
    "toeplitz_matvec",
    "toeplitz_dense",
    "solve_small_batched",
    "vandermonde_products",
]
