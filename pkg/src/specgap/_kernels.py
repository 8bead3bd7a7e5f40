"""Kernel backend selection.

The enumeration, fold, and walk inner loops have two interchangeable
implementations: numba-compiled (default) and pure numpy.  Set
SPECGAP_NUMBA=0 before import to force the numpy path; the numpy path is
also chosen automatically when numba cannot be imported.
"""

from __future__ import annotations

import os

BACKEND = "numpy"

if os.environ.get("SPECGAP_NUMBA", "1") != "0":
    try:
        from . import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:  # pragma: no cover - depends on environment
        from . import _kernels_numpy as _impl
else:
    from . import _kernels_numpy as _impl

pairwise_products = _impl.pairwise_products
apply_walk = _impl.apply_walk
gather_any = _impl.gather_any


def backend() -> str:
    return BACKEND


def set_threads(k: int) -> None:
    """Thread-count hint; only the numba backend's parallel loops use it."""
    if BACKEND == "numba":
        import numba

        try:
            numba.set_num_threads(max(1, int(k)))
        except ValueError:
            pass
