"""Kernel backend selection.

The hot batch kernels in :mod:`topkorders.kernels` exist in two forms: an
explicit-loop version compiled with numba, and a vectorized pure-numpy
version. Set ``TOPKORDERS_BACKEND=numpy`` to force the numpy path (useful
for debugging or on platforms without numba); any other value, or leaving
it unset, uses numba when importable.
"""

import os

_requested = os.environ.get("TOPKORDERS_BACKEND", "numba").strip().lower()

if _requested == "numpy":
    HAS_NUMBA = False
    njit = None
else:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is an optional extra
        HAS_NUMBA = False
        njit = None

USE_NUMBA = HAS_NUMBA


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def maybe_jit(func):
    """Compile ``func`` with numba when the numba backend is active."""
    if USE_NUMBA:
        return njit(cache=True)(func)
    return func
