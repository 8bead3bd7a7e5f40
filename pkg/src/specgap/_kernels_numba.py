"""Numba-compiled hot loops.

Each function mirrors the numpy fallback in _kernels_numpy bit for bit on
integer outputs; float outputs (apply_walk) use a fixed summation order per
element so results are reproducible run to run on a given backend.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_jit = nb.njit(cache=True, fastmath=False)


@_jit
def pairwise_products(x, y, m):
    K = x.shape[0]
    L = y.shape[0]
    n = x.shape[1]
    out = np.empty((K * L, n, n), dtype=np.int64)
    for a in range(K):
        base = a * L
        for b in range(L):
            r = base + b
            for i in range(n):
                for j in range(n):
                    acc = 0
                    for t in range(n):
                        acc += x[a, i, t] * y[b, t, j]
                    out[r, i, j] = acc % m
    return out


@nb.njit(cache=True, parallel=True)
def apply_walk(x, perms):
    k = perms.shape[0]
    g = perms.shape[1]
    out = np.empty(g, dtype=np.float64)
    inv = 1.0 / k
    for i in nb.prange(g):
        acc = 0.0
        for r in range(k):
            acc += x[perms[r, i]]
        out[i] = acc * inv
    return out


@nb.njit(cache=True, parallel=True)
def gather_any(mask, maps):
    s = maps.shape[0]
    g = maps.shape[1]
    out = np.zeros(g, dtype=np.uint8)
    for t in nb.prange(g):
        for r in range(s):
            if mask[maps[r, t]]:
                out[t] = 1
                break
    return out
