"""Kernel backend selection.

Hot inner loops (helix distance scans, CSR matvec, ILU(0) triangular solves,
point location) exist twice: a numba @njit version and a vectorized pure-numpy
version with identical call signatures. The numba path is used when numba
imports cleanly; set ``RSBRIDGE_DISABLE_NUMBA=1`` to force the numpy path.

``benchmarks/bench_kernels.py`` times both implementations side by side.
"""

from __future__ import annotations

import os


def _numba_wanted() -> bool:
    flag = os.environ.get("RSBRIDGE_DISABLE_NUMBA", "")
    return flag.strip().lower() not in {"1", "true", "yes", "on"}


NUMBA_ENABLED = False
if _numba_wanted():
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False

if NUMBA_ENABLED:
    from rsbridge import _kernels_numba as kernels

    BACKEND = "numba"
else:
    from rsbridge import _kernels_numpy as kernels

    BACKEND = "numpy"

__all__ = ["kernels", "BACKEND", "NUMBA_ENABLED"]
