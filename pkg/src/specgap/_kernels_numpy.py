"""Pure-numpy implementations of the hot loops.

Same contracts as :mod:`specgap._kernels_numba`; selected when numba is
unavailable or disabled via SPECGAP_NUMBA=0.
"""

from __future__ import annotations

import numpy as np


def pairwise_products(x, y, m):
    """All products x[i] @ y[j] mod m, x-major order: shape (K*L, n, n)."""
    k = x.shape[0]
    L = y.shape[0]
    n = x.shape[1]
    out = np.einsum("xij,yjk->xyik", x, y, dtype=np.int64) % m
    return out.reshape(k * L, n, n)


def apply_walk(x, perms):
    """y[i] = mean over rows r of x[perms[r, i]]."""
    return x[perms].mean(axis=0)


def gather_any(mask, maps):
    """out[t] = 1 if mask[maps[s, t]] for any s; mask is uint8."""
    out = np.zeros_like(mask)
    for s in range(maps.shape[0]):
        np.logical_or(out, mask[maps[s]], out=out)
    return out.astype(np.uint8)
