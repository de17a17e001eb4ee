"""Kernel dispatch.

Two implementations of the sparse graded-product and merge kernels exist:
``_numba`` (compiled, int64 only) and ``_numpy`` (vectorised, any integer
dtype). Object-dtype numerators always take the numpy path.
"""
import importlib
import logging

import numpy as np

from .._config import requested_backend
from . import _numpy

log = logging.getLogger(__name__)

_numba = None
BACKEND = requested_backend()
if BACKEND == "numba":
    try:
        _numba = importlib.import_module(f"{__name__}._numba")
    except ImportError:  # pragma: no cover - numba is a declared dependency
        log.warning("numba unavailable, falling back to numpy kernels")
        BACKEND = "numpy"


def _use_numba(*arrays):
    return _numba is not None and all(a.dtype == np.int64 for a in arrays)


def block_product(mono1, mask1, num1, mono2, mask2, num2, guard):
    if _use_numba(num1, num2):
        return _numba.block_product(mono1, mask1, num1, mono2, mask2, num2, guard)
    return _numpy.block_product(mono1, mask1, num1, mono2, mask2, num2, guard)


def reduce_terms(hdr, mono, num):
    if _use_numba(num):
        return _numba.reduce_terms(hdr, mono, num)
    return _numpy.reduce_terms(hdr, mono, num)


swap_parity = _numpy.swap_parity

__all__ = ["BACKEND", "block_product", "reduce_terms", "swap_parity"]
