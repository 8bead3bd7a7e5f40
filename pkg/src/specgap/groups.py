"""Finite matrix group enumeration over ℤ/m with canonical element ids.

A ``GroupTable`` assigns dense integer ids to the elements of ⟨generators⟩
inside GL_n(ℤ/m), discovered by breadth-first closure.  Ids are stable for a
given generator list: identity gets id 0, then elements in discovery order
(level by level, frontier-major, generator-minor).  The canonical byte
encoding of an element (row-major, fixed-width big-endian entries) is the
identity used for deduplication and for the on-disk cache.

Subset algebra (masks over ids), congruence kernels, and C-fold subset
products live here as well; they are the set-theoretic substrate for the
coverage certificates.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import BadModulus, BudgetExceeded, CorruptCache
from .exact import ResidueMatrix, encode_width, invert_mod

DEFAULT_BUDGET = 2_000_000

_HEADER = struct.Struct("!5sBQQI")
_MAGIC = b"SGGT1"


def prime_power(m: int):
    """(p, e) with m = p^e, or BadModulus."""
    if m < 2:
        raise BadModulus(f"modulus {m} is not a prime power")
    x = m
    p = None
    d = 2
    while d * d <= x:
        if x % d == 0:
            p = d
            break
        d += 1 if d == 2 else 2
    if p is None:
        p = x
    e = 0
    while x % p == 0:
        x //= p
        e += 1
    if x != 1:
        raise BadModulus(f"modulus {m} is not a prime power")
    return p, e


def _totient(m: int) -> int:
    x = m
    out = m
    d = 2
    while d * d <= x:
        if x % d == 0:
            out = out // d * (d - 1)
            while x % d == 0:
                x //= d
        d += 1 if d == 2 else 2
    if x > 1:
        out = out // x * (x - 1)
    return out


def _radix_weights(n: int, m: int):
    """int64 packing weights for n*n entries mod m, or None if they overflow."""
    total_bits = (n * n) * math.log2(m) if m > 1 else 1
    if total_bits >= 62:
        return None
    w = np.empty(n * n, dtype=np.int64)
    acc = 1
    for i in range(n * n - 1, -1, -1):
        w[i] = acc
        acc *= m
    return w


def pack_keys(mats: np.ndarray, weights: np.ndarray) -> np.ndarray:
    flat = mats.reshape(mats.shape[0], -1)
    return flat @ weights


def _modinv_vec(x: np.ndarray, m: int) -> np.ndarray:
    """Vectorized modular inverse of unit residues via Euler's theorem."""
    e = _totient(m) - 1
    out = np.ones_like(x)
    base = x % m
    while e:
        if e & 1:
            out = (out * base) % m
        base = (base * base) % m
        e >>= 1
    return out


def _batch_inverse(mats: np.ndarray, m: int) -> np.ndarray:
    """Inverses of a batch of unit-determinant-mod-m matrices, n <= 3."""
    n = mats.shape[1]
    a = mats.astype(np.int64)
    if n == 1:
        det = a[:, 0, 0]
        return _modinv_vec(det, m).reshape(-1, 1, 1)
    if n == 2:
        det = (a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]) % m
        dinv = _modinv_vec(det, m)
        out = np.empty_like(a)
        out[:, 0, 0] = a[:, 1, 1]
        out[:, 1, 1] = a[:, 0, 0]
        out[:, 0, 1] = (-a[:, 0, 1]) % m
        out[:, 1, 0] = (-a[:, 1, 0]) % m
        return (out * dinv[:, None, None]) % m
    if n == 3:
        c = np.empty_like(a)
        for i in range(3):
            for j in range(3):
                i1, i2 = (i + 1) % 3, (i + 2) % 3
                j1, j2 = (j + 1) % 3, (j + 2) % 3
                c[:, j, i] = (a[:, i1, j1] * a[:, i2, j2] - a[:, i1, j2] * a[:, i2, j1]) % m
        det = (
            a[:, 0, 0] * c[:, 0, 0] + a[:, 0, 1] * c[:, 1, 0] + a[:, 0, 2] * c[:, 2, 0]
        ) % m
        dinv = _modinv_vec(det, m)
        return (c * dinv[:, None, None]) % m
    # sizes above 3 fall back to exact per-element inversion
    out = np.empty_like(a)
    for i in range(a.shape[0]):
        g = ResidueMatrix(a[i].tolist(), m)
        out[i] = np.array(invert_mod(g).to_rows(), dtype=np.int64)
    return out


class GroupTable:
    """Dense-id table of a finite matrix group over ℤ/m."""

    def __init__(self, n, m, mats, gen_ids):
        self.n = int(n)
        self.m = int(m)
        self.mats = mats  # (G, n, n) int64, canonical residues
        self.gen_ids = tuple(int(g) for g in gen_ids)
        self.size = mats.shape[0]
        self._weights = _radix_weights(self.n, self.m)
        if self._weights is not None:
            keys = pack_keys(mats, self._weights)
            order = np.argsort(keys, kind="stable")
            self._keys_sorted = keys[order]
            self._sorted_to_id = order.astype(np.int64)
            self._byte_index = None
        else:
            self._keys_sorted = None
            self._sorted_to_id = None
            self._byte_index = {self.encode_element(i): i for i in range(self.size)}
        self._inv_ids = None

    # -- identity/lookup ------------------------------------------------

    def encode_element(self, i: int) -> bytes:
        w = encode_width(self.m)
        return b"".join(
            int(x).to_bytes(w, "big") for x in self.mats[i].reshape(-1)
        )

    def matrix(self, i: int) -> ResidueMatrix:
        return ResidueMatrix(self.mats[i].tolist(), self.m)

    def ids_of(self, mats: np.ndarray) -> np.ndarray:
        """Ids of a batch of canonical-residue matrices; -1 where absent."""
        if mats.ndim == 2:
            mats = mats[None]
        if self._weights is not None:
            keys = pack_keys(mats.astype(np.int64) % self.m, self._weights)
            pos = np.searchsorted(self._keys_sorted, keys)
            pos = np.minimum(pos, self.size - 1)
            hit = self._keys_sorted[pos] == keys
            out = np.where(hit, self._sorted_to_id[pos], -1)
            return out
        w = encode_width(self.m)
        out = np.empty(mats.shape[0], dtype=np.int64)
        for i in range(mats.shape[0]):
            enc = b"".join(int(x).to_bytes(w, "big") for x in (mats[i] % self.m).reshape(-1))
            out[i] = self._byte_index.get(enc, -1)
        return out

    def id_of(self, g: ResidueMatrix) -> int:
        if g.m != self.m:
            raise BadModulus("modulus mismatch")
        return int(self.ids_of(np.array(g.to_rows(), dtype=np.int64))[0])

    # -- translations ----------------------------------------------------

    def right_translation(self, gamma: np.ndarray) -> np.ndarray:
        """int32 map t -> id(g_t @ gamma); raises if any product leaves the group."""
        prod = np.matmul(self.mats, gamma.astype(np.int64)) % self.m
        ids = self.ids_of(prod)
        if (ids < 0).any():
            raise ValueError("right translation leaves the enumerated set")
        return ids.astype(np.int32)

    def left_translation(self, gamma: np.ndarray) -> np.ndarray:
        prod = np.matmul(gamma.astype(np.int64), self.mats) % self.m
        ids = self.ids_of(prod)
        if (ids < 0).any():
            raise ValueError("left translation leaves the enumerated set")
        return ids.astype(np.int32)

    def inverse_ids(self) -> np.ndarray:
        if self._inv_ids is None:
            inv = _batch_inverse(self.mats, self.m)
            ids = self.ids_of(inv)
            if (ids < 0).any():
                raise ValueError("inverse map leaves the enumerated set")
            self._inv_ids = ids.astype(np.int32)
        return self._inv_ids

    def conjugation_map(self, gamma: np.ndarray, gamma_inv: np.ndarray) -> np.ndarray:
        """int32 map t -> id(gamma @ g_t @ gamma^-1)."""
        prod = np.matmul(np.matmul(gamma.astype(np.int64), self.mats) % self.m, gamma_inv) % self.m
        ids = self.ids_of(prod)
        if (ids < 0).any():
            raise ValueError("conjugation leaves the enumerated set")
        return ids.astype(np.int32)

    # -- closure in id space ----------------------------------------------

    def closure_mask(self, seed_ids) -> np.ndarray:
        """Mask of the subgroup generated by the given element ids."""
        seed_ids = [int(s) for s in seed_ids]
        maps = [self.right_translation(self.mats[s]) for s in seed_ids]
        mask = np.zeros(self.size, dtype=bool)
        mask[0] = True
        frontier = np.array([0], dtype=np.int64)
        while frontier.size:
            nxt = []
            for mp in maps:
                cand = mp[frontier]
                fresh = cand[~mask[cand]]
                if fresh.size:
                    mask[fresh] = True
                    nxt.append(np.unique(fresh))
            frontier = np.unique(np.concatenate(nxt)) if nxt else np.empty(0, dtype=np.int64)
        return mask


def enumerate_group(gens, budget: int = DEFAULT_BUDGET) -> GroupTable:
    """BFS closure of a generator list inside matrices over ℤ/m.

    Generators should be closed under inverse if downstream spectral use is
    intended; enumeration itself only needs them to generate (every element
    of a finite group has its inverse in the positive-word closure).
    Raises BudgetExceeded before materializing more than ``budget`` elements.
    """
    if not gens:
        raise ValueError("need at least one generator")
    n, m = gens[0].n, gens[0].m
    if any(g.n != n or g.m != m for g in gens):
        raise ValueError("generators must share shape and modulus")
    weights = _radix_weights(n, m)
    safe_int64 = n * (m - 1) ** 2 < 2**62
    gen_mats = np.array([g.to_rows() for g in gens], dtype=np.int64) % m
    # dedupe generator matrices, preserving first occurrence
    seen = set()
    uniq = []
    for i in range(gen_mats.shape[0]):
        key = gen_mats[i].tobytes()
        if key not in seen:
            seen.add(key)
            uniq.append(gen_mats[i])
    gen_mats = np.stack(uniq)

    if weights is None or not safe_int64:
        return _enumerate_python(gens, n, m, budget)

    ident = np.eye(n, dtype=np.int64) % m
    mats = [ident]
    keys_sorted = pack_keys(ident[None], weights)
    total = 1
    all_mats = ident[None]
    frontier = ident[None]
    chunk_rows = max(1, 1_500_000 // max(1, gen_mats.shape[0]))
    while frontier.shape[0]:
        new_level = []
        for lo in range(0, frontier.shape[0], chunk_rows):
            chunk = frontier[lo : lo + chunk_rows]
            prod = _kernels.pairwise_products(chunk, gen_mats, m)
            keys = pack_keys(prod, weights)
            uk, first = np.unique(keys, return_index=True)
            order = np.sort(first)
            skeys = keys[order]
            pos = np.searchsorted(keys_sorted, skeys)
            pos = np.minimum(pos, keys_sorted.size - 1)
            fresh = keys_sorted[pos] != skeys
            if not fresh.any():
                continue
            new_mats = prod[order][fresh]
            new_keys = skeys[fresh]
            if total + new_mats.shape[0] > budget:
                raise BudgetExceeded(
                    f"group exceeds element budget {budget} at {total + new_mats.shape[0]}"
                )
            total += new_mats.shape[0]
            all_mats = np.concatenate([all_mats, new_mats])
            keys_sorted = np.sort(np.concatenate([keys_sorted, new_keys]), kind="stable")
            new_level.append(new_mats)
        frontier = np.concatenate(new_level) if new_level else np.empty((0, n, n), dtype=np.int64)
    table = GroupTable(n, m, all_mats, [])
    gen_ids = table.ids_of(gen_mats)
    table.gen_ids = tuple(int(i) for i in gen_ids)
    return table


def _enumerate_python(gens, n, m, budget):
    """Dict-based closure; slow path for moduli whose keys don't pack."""
    ident = ResidueMatrix.identity(n, m)
    index = {ident.encode(): 0}
    elems = [ident]
    frontier = [ident]
    gen_list = []
    seen = set()
    for g in gens:
        e = g.encode()
        if e not in seen:
            seen.add(e)
            gen_list.append(g)
    while frontier:
        nxt = []
        for a in frontier:
            for g in gen_list:
                h = a @ g
                e = h.encode()
                if e not in index:
                    if len(elems) + 1 > budget:
                        raise BudgetExceeded(
                            f"group exceeds element budget {budget}"
                        )
                    index[e] = len(elems)
                    elems.append(h)
                    nxt.append(h)
        frontier = nxt
    mats = np.array([e.to_rows() for e in elems], dtype=np.int64)
    table = GroupTable(n, m, mats, [])
    table.gen_ids = tuple(index[g.encode()] for g in gen_list)
    return table


# -- subsets -------------------------------------------------------------


class SubsetHandle:
    """Bit-mask view of a subset of a GroupTable's elements."""

    def __init__(self, table: GroupTable, mask: np.ndarray):
        if mask.shape != (table.size,):
            raise ValueError("mask shape mismatch")
        self.table = table
        self.mask = mask.astype(bool)

    @classmethod
    def from_ids(cls, table: GroupTable, ids) -> "SubsetHandle":
        mask = np.zeros(table.size, dtype=bool)
        mask[np.asarray(list(ids), dtype=np.int64)] = True
        return cls(table, mask)

    @classmethod
    def full(cls, table: GroupTable) -> "SubsetHandle":
        return cls(table, np.ones(table.size, dtype=bool))

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def ids(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def is_full(self) -> bool:
        return bool(self.mask.all())

    def contains_id(self, i: int) -> bool:
        return bool(self.mask[i])

    def inverse_set(self) -> "SubsetHandle":
        inv = self.table.inverse_ids()
        mask = np.zeros_like(self.mask)
        mask[inv[self.mask]] = True
        return SubsetHandle(self.table, mask)

    def verify_subgroup(self, full_limit: int = 2048, samples: int = 256):
        """'full' or 'sampled' when closure checks pass, False otherwise."""
        if not self.mask[0]:
            return False
        inv_ok = np.array_equal(self.inverse_set().mask, self.mask)
        if not inv_ok:
            return False
        ids = self.ids()
        k = ids.size
        if k <= full_limit:
            for s in ids:
                mp = self.table.right_translation(self.table.mats[s])
                if not self.mask[mp[ids]].all():
                    return False
            return "full"
        rng = np.random.default_rng(0)
        for s in rng.choice(ids, size=min(samples, k), replace=False):
            mp = self.table.right_translation(self.table.mats[int(s)])
            if not self.mask[mp[ids]].all():
                return False
        return "sampled"


def make_right_inverse_maps(table: GroupTable, s_ids: np.ndarray) -> np.ndarray:
    """Stack of maps t -> id(g_t @ s^-1) for each s in s_ids (int32, (S, G)).

    These realize membership t ∈ X·S as a gather: X[maps[s, t]] for some s.
    """
    inv = table.inverse_ids()
    maps = np.empty((len(s_ids), table.size), dtype=np.int32)
    for i, s in enumerate(s_ids):
        maps[i] = table.right_translation(table.mats[inv[int(s)]])
    return maps


def subset_mul(X: SubsetHandle, S: SubsetHandle, maps: np.ndarray | None = None) -> SubsetHandle:
    """Product set X·S inside the shared ambient table."""
    table = X.table
    if table is not S.table:
        raise ValueError("subsets live in different tables")
    if maps is None:
        maps = make_right_inverse_maps(table, S.ids())
    out = _kernels.gather_any(X.mask.astype(np.uint8), maps)
    return SubsetHandle(table, out.astype(bool))


def product_fold(S: SubsetHandle, C: int) -> SubsetHandle:
    """C-fold product set S·S·…·S (C factors).

    Early exit applies only in the monotone case (identity in S), where the
    product can't shrink once it stabilizes or fills the group.
    """
    if C < 1:
        raise ValueError("fold count must be >= 1")
    monotone = S.contains_id(0)
    maps = make_right_inverse_maps(S.table, S.ids())
    X = S
    for _ in range(C - 1):
        nxt = subset_mul(X, S, maps=maps)
        if monotone and (nxt.is_full() or np.array_equal(nxt.mask, X.mask)):
            return nxt
        X = nxt
    return X


# -- congruence layers -----------------------------------------------------


@dataclass
class CongruenceLayer:
    """Elements ≡ I mod p^k inside a table at modulus p^j, j >= k+1."""

    table: GroupTable
    p: int
    k: int
    handle: SubsetHandle

    @property
    def order(self) -> int:
        return self.handle.size

    def verify_normal(self) -> bool:
        ids = self.handle.ids()
        inv = self.table.inverse_ids()
        for g in self.table.gen_ids:
            lt = self.table.left_translation(self.table.mats[g])
            rt = self.table.right_translation(self.table.mats[inv[g]])
            conj = rt[lt[ids]]
            if not self.handle.mask[conj].all():
                return False
        return True


def congruence_kernel(table: GroupTable, k: int) -> CongruenceLayer:
    """Kernel of reduction mod p^k as a layer of a table at modulus p^j."""
    p, j = prime_power(table.m)
    if j < k + 1:
        raise BadModulus(f"need modulus p^(k+1) or deeper, got {p}^{j} for k={k}")
    pk = p**k
    ident = np.eye(table.n, dtype=np.int64)
    diff = (table.mats - ident) % pk
    mask = (diff == 0).all(axis=(1, 2))
    layer = CongruenceLayer(table, p, k, SubsetHandle(table, mask))
    o = layer.order
    while o % p == 0:
        o //= p
    if o != 1:
        raise BadModulus(f"kernel order {layer.order} is not a power of {p}")
    return layer


def kernel_table_from_basis(basis_rows, p: int, k: int, depth: int,
                            budget: int = DEFAULT_BUDGET) -> GroupTable:
    """Table of ⟨I + p^k·b⟩ at modulus p^(k+1) for mod-p basis vectors b.

    Valid only one level deep: mod p^(k+1) the generators have determinant
    1 + p^k·tr(b), so trace-zero bases land in the group kernel, which tests
    cross-check against table-derived kernels.  Deeper windows must use the
    chart exponential instead (the pipeline's window tables do).
    """
    if depth != k + 1:
        raise BadModulus("layer tables are only valid at depth k+1")
    d = len(basis_rows)
    n = int(round(math.isqrt(len(basis_rows[0]))))
    if n * n != len(basis_rows[0]):
        raise ValueError("basis rows must have n^2 entries")
    q = p**depth
    gens = []
    for b in basis_rows:
        rows = [
            [(int(b[i * n + j]) * p**k + (1 if i == j else 0)) % q for j in range(n)]
            for i in range(n)
        ]
        g = ResidueMatrix(rows, q)
        gens.append(g)
        gens.append(invert_mod(g))
    return enumerate_group(gens, budget=budget)


# -- cache ------------------------------------------------------------------


def save_table(table: GroupTable, path) -> None:
    """SGGT1 cache: header, canonical element encodings in id order, gen ids."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, table.n, table.m, table.size, len(table.gen_ids)))
        w = encode_width(table.m)
        flat = table.mats.reshape(table.size, -1)
        bqueue = bytearray()
        for i in range(table.size):
            for x in flat[i]:
                bqueue += int(x).to_bytes(w, "big")
        fh.write(bytes(bqueue))
        fh.write(struct.pack(f"!{len(table.gen_ids)}I", *table.gen_ids))


def load_table(path) -> GroupTable:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise CorruptCache("truncated header")
        magic, n, m, count, gcount = _HEADER.unpack(head)
        if magic != _MAGIC:
            raise CorruptCache(f"bad magic {magic!r}")
        w = encode_width(m)
        body = fh.read(count * n * n * w)
        if len(body) != count * n * n * w:
            raise CorruptCache("truncated element block")
        tail = fh.read(gcount * 4)
        if len(tail) != gcount * 4:
            raise CorruptCache("truncated generator block")
        gen_ids = struct.unpack(f"!{gcount}I", tail) if gcount else ()
    raw = np.frombuffer(body, dtype=np.uint8).reshape(count, n * n, w)
    vals = np.zeros((count, n * n), dtype=np.int64)
    for b in range(w):
        vals = (vals << 8) | raw[:, :, b].astype(np.int64)
    if vals.max(initial=0) >= m:
        raise CorruptCache("entry exceeds modulus")
    mats = vals.reshape(count, n, n)
    if count == 0 or not np.array_equal(mats[0], np.eye(n, dtype=np.int64) % m):
        raise CorruptCache("identity must be element 0")
    if any(g >= count for g in gen_ids):
        raise CorruptCache("generator id out of range")
    return GroupTable(n, m, mats, gen_ids)


def cache_key(gens, budget: int = DEFAULT_BUDGET) -> str:
    """Stable digest identifying an enumeration request."""
    h = hashlib.sha256()
    h.update(f"{gens[0].n}:{gens[0].m}:{budget}:".encode())
    for g in gens:
        h.update(g.encode())
    return h.hexdigest()[:20]
