"""Backend selection for the compiled kernels.

``FINSLERKIT_BACKEND=numpy`` forces the pure-numpy code paths even when numba
is importable; ``numba`` (the default) uses the jitted kernels when available.
"""
from __future__ import annotations

import os

_requested = os.environ.get("FINSLERKIT_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(
        f"FINSLERKIT_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba

    HAVE_NUMBA = True
    # an old system TBB only produces a warning before numba falls back; skip it
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _requested == "numba"


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity otherwise.

    Kernels are always compiled lazily, so importing this package under the
    numpy backend costs nothing.
    """
    if HAVE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


prange = numba.prange if HAVE_NUMBA else range


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
