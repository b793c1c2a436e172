"""Kernel backend selection.

The hot inner loops (event-driven n-particle simulation) exist twice: a
numba-jitted kernel and a pure numpy/Python reference implementation with
identical semantics.  Selection order:

  1. MFGRAPH_BACKEND=numpy|numba environment variable, if set;
  2. numba if it imports, else numpy.

Both backends consume the same counter-based streams, so outputs agree
bit-for-bit; the numpy path is the correctness reference and the fallback
for installs without a working numba.
"""

from __future__ import annotations

import os

_FORCED = os.environ.get("MFGRAPH_BACKEND", "").strip().lower()

try:
    import numba  # noqa: F401

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

if _FORCED == "numpy":
    BACKEND = "numpy"
elif _FORCED == "numba":
    if not HAS_NUMBA:
        raise ImportError("MFGRAPH_BACKEND=numba but numba is not importable")
    BACKEND = "numba"
elif _FORCED:
    raise ValueError(f"unknown MFGRAPH_BACKEND={_FORCED!r} (use 'numpy' or 'numba')")
else:
    BACKEND = "numba" if HAS_NUMBA else "numpy"


def active_backend() -> str:
    return BACKEND


def get_kernels():
    """Return the kernel module for the active backend."""
    if BACKEND == "numba":
        from . import kernels_numba as mod
    else:
        from . import kernels_numpy as mod
    return mod
