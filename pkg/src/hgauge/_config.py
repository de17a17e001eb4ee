"""Runtime configuration.

``HGAUGE_BACKEND`` selects the kernel implementation: ``numba`` (default when
numba imports cleanly) or ``numpy``. Both produce identical exact results.
"""
import os

BACKEND_ENV = "HGAUGE_BACKEND"

# Field holding the grassmann mask inside a term header; comp index sits above.
MASK_BITS = 16
MASK_LIMIT = 1 << MASK_BITS

# Numerators stay in int64 while every intermediate provably fits below this.
INT64_SAFE = float(2**62)


def requested_backend():
    value = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    return value
