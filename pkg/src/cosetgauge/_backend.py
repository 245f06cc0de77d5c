"""Kernel backend selection.

Hot kernels are written once in a numba-compatible subset of numpy. When numba
is importable they are compiled with ``@njit``; setting ``COSETGAUGE_NO_NUMBA=1``
forces the plain numpy path (useful for debugging and for the benchmark).
"""

import os

_DISABLED = os.environ.get("COSETGAUGE_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False
    _njit = None

BACKEND = "numba" if HAS_NUMBA else "numpy"


def jit(fn):
    """Compile ``fn`` with numba when enabled, otherwise return it unchanged."""
    if HAS_NUMBA:
        return _njit(cache=True, nogil=True)(fn)
    return fn
