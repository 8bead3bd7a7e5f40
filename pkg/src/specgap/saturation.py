"""Lie lattices of congruence layers and their saturation under conjugation.

A congruence layer {g ≡ I mod p^c} maps through the truncated logarithm to a
sublattice of the n x n matrices over ℤ/p^N.  Two constructions produce such
lattices:

* from an explicitly enumerated group table, by logging every element of the
  layer (exhaustive, budget-bound);
* from a deterministic word stream, by raising words to the order of their
  mod-p image and then to p-th powers until they sit at the requested level
  (budget-free, works when the full group is far too large to enumerate).

Saturating a lattice under Ad(γ) for chosen conjugators γ is the linear
shadow of conjugating the corresponding subgroup, and the greedy conjugator
selection here picks, per round, the first candidate word whose adjoint image
strictly increases the running rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .charts import ChartConfig, grade_map, trunc_log
from .errors import BadModulus, EmptyChartLayer
from .exact import PadicTruncMatrix, RationalMatrix, ResidueMatrix, invert_mod, reduce_mod
from .groups import GroupTable, prime_power
from .modring import (
    howell_contains,
    howell_form,
    rref_mod_p,
    smith_exponents,
)
from .words import Word, word_stream


@dataclass(frozen=True)
class SpanLattice:
    """Canonical row span over ℤ/p^N: Howell basis plus invariant factors."""

    p: int
    N: int
    dim: int
    basis: tuple
    pivots: tuple
    rank: int
    divisor_exponents: tuple

    @classmethod
    def from_vectors(cls, vectors, p: int, N: int, dim: int) -> "SpanLattice":
        vecs = [list(v) for v in vectors]
        if any(len(v) != dim for v in vecs):
            raise ValueError("vector length does not match ambient dimension")
        if vecs:
            basis, pivots = howell_form(vecs, p, N)
            exps = smith_exponents(vecs, p, N)
        else:
            basis, pivots, exps = [], [], []
        return cls(
            p=p,
            N=N,
            dim=dim,
            basis=tuple(tuple(r) for r in basis),
            pivots=tuple(pivots),
            rank=len(exps),
            divisor_exponents=tuple(exps),
        )

    @property
    def divisors(self) -> tuple:
        return tuple(self.p**e for e in self.divisor_exponents)

    def contains(self, vec) -> bool:
        return howell_contains(
            [list(r) for r in self.basis], list(self.pivots), vec, self.p, self.N
        )

    def union_with(self, vectors) -> "SpanLattice":
        return SpanLattice.from_vectors(
            [list(r) for r in self.basis] + [list(v) for v in vectors],
            self.p,
            self.N,
            self.dim,
        )

    def is_sublattice_of(self, other: "SpanLattice") -> bool:
        return all(other.contains(list(b)) for b in self.basis)


def conjugation_pair(gamma: RationalMatrix, p: int, N: int):
    """(γ, γ⁻¹) reduced mod p^N, ready for adjoint application."""
    q = p**N
    r = reduce_mod(gamma, q)
    ri = reduce_mod(gamma.inverse(), q)
    return (
        PadicTruncMatrix(r.rows, p, N),
        PadicTruncMatrix(ri.rows, p, N),
    )


def ad_apply(pair, flat, n: int, p: int, N: int):
    """Flat coordinates of γ X γ⁻¹ for flat coordinates of X."""
    x = PadicTruncMatrix(
        [list(flat[i * n : (i + 1) * n]) for i in range(n)], p, N
    )
    return list((pair[0] @ x @ pair[1]).flat())


def residue_order(u: ResidueMatrix, cap: int = 20000) -> int:
    """Multiplicative order of u; the groups in play keep this tiny."""
    acc = u
    k = 1
    while not acc.is_identity():
        acc = acc @ u
        k += 1
        if k > cap:
            raise ValueError("element order exceeded the cap")
    return k


def _level(h: ResidueMatrix, p: int, depth: int) -> int:
    m = PadicTruncMatrix(h.rows, p, depth)
    return (m - PadicTruncMatrix.identity(h.n, p, depth)).valuation()


def sample_congruence_elements(
    omega,
    p: int,
    k: int,
    depth: int,
    word_budget: int = 512,
    max_len: int = 4,
    want: int = 96,
    conj_spread: int = 4,
):
    """Deterministic congruence-layer samples at level >= k, mod p^depth.

    Each word w over omega is raised to the order of its mod-p image, landing
    at level >= 1, then to p-th powers until it reaches level k; a p-th power
    always climbs at least one level (for p = 2 the square's cross term sits
    one level up once v >= 1).  Samples are spread by conjugation with early
    word matrices, and commutators of pre-powered elements are kept when they
    reach the level; those supply the directions p-th powers cannot (the
    p = 2 lattices need them).
    """
    if depth <= k:
        raise ValueError("depth must exceed the congruence level")
    q = p**depth
    out = []
    seen = set()
    pre_pool = []
    spread = []

    def push(h: ResidueMatrix) -> bool:
        key = h.encode()
        if key in seen or h.is_identity():
            return False
        if _level(h, p, depth) < k:
            return False
        seen.add(key)
        out.append(PadicTruncMatrix(h.rows, p, depth))
        return True

    for w in word_stream(omega, max_len, include_identity=False, max_words=word_budget):
        if len(out) >= want:
            break
        r = reduce_mod(w.matrix, q)
        if len(spread) < conj_spread:
            spread.append((r, invert_mod(r)))
        e = residue_order(reduce_mod(w.matrix, p))
        h = r**e
        if h.is_identity():
            continue
        pre = h
        guard = 0
        while not h.is_identity() and _level(h, p, depth) < k:
            h = h**p
            guard += 1
            if guard > depth:  # pragma: no cover - levels climb monotonically
                break
        if not push(h):
            continue
        for g, ginv in spread:
            push(g @ h @ ginv)
        for other in pre_pool[-conj_spread:]:
            comm = pre @ other @ invert_mod(pre) @ invert_mod(other)
            push(comm)
        pre_pool.append(pre)
    return out


def lie_lattice_from_words(
    omega,
    cfg: ChartConfig,
    word_budget: int = 512,
    max_len: int = 4,
    want: int = 96,
) -> SpanLattice:
    """Lattice of truncated logs of sampled level-c elements of <omega>."""
    n = omega[0].n
    elements = sample_congruence_elements(
        omega, cfg.p, cfg.c, cfg.N, word_budget=word_budget, max_len=max_len, want=want
    )
    if not elements:
        raise EmptyChartLayer(
            "no words reached the chart layer; the group meets it only at the identity"
        )
    flats = [trunc_log(m, cfg).flat() for m in elements]
    return SpanLattice.from_vectors(flats, cfg.p, cfg.N, n * n)


def grade_basis_from_words(
    omega,
    p: int,
    k: int,
    word_budget: int = 512,
    max_len: int = 4,
    want: int = 96,
):
    """Mod-p basis of the level-k grade values attained by <omega>.

    Returns (basis_rows, pivot_columns); both empty when the level-k layer
    is trivial.
    """
    elements = sample_congruence_elements(
        omega, p, k, k + 1, word_budget=word_budget, max_len=max_len, want=want
    )
    vals = [grade_map(m, k).flat() for m in elements]
    if not vals:
        return [], []
    return rref_mod_p(vals, p)


def lie_lattice_from_group(
    table: GroupTable, cfg: ChartConfig, sample_budget: int | None = None
) -> SpanLattice:
    """Lattice of logs of the full enumerated chart layer of a group table."""
    p, j = prime_power(table.m)
    if p != cfg.p or j != cfg.N:
        raise BadModulus(
            f"table modulus {table.m} is not {cfg.p}^{cfg.N}"
        )
    n = table.n
    pk = p**cfg.c
    eye = np.eye(n, dtype=np.int64)
    mask = (((table.mats - eye) % pk) == 0).all(axis=(1, 2))
    ids = np.flatnonzero(mask)
    ids = ids[ids != 0]
    if ids.size == 0:
        raise EmptyChartLayer("the chart layer of this table is only the identity")
    if sample_budget is not None:
        ids = ids[:sample_budget]
    flats = []
    for i in ids:
        m = PadicTruncMatrix(table.mats[int(i)].tolist(), p, cfg.N)
        flats.append(trunc_log(m, cfg).flat())
    return SpanLattice.from_vectors(flats, p, cfg.N, n * n)


def adjoint_saturate(
    m0: SpanLattice, conjugators, max_rounds: int | None = None
):
    """Least Ad-invariant overlattice: iterate M ← M + Σ Ad(γ_i)(M).

    Returns (lattice, rounds).  The chain is strictly increasing until it
    stabilizes, so it ends within dim * N rounds.
    """
    n = int(m0.dim**0.5)
    pairs = [conjugation_pair(g, m0.p, m0.N) for g in conjugators]
    cap = max_rounds if max_rounds is not None else m0.dim * m0.N + 2
    current = m0
    for rounds in range(1, cap + 1):
        new_vecs = [
            ad_apply(pair, list(b), n, m0.p, m0.N)
            for pair in pairs
            for b in current.basis
        ]
        nxt = current.union_with(new_vecs)
        if nxt == current:
            return current, rounds
        current = nxt
    raise RuntimeError("saturation failed to stabilize within its bound")


@dataclass(frozen=True)
class ConjugatorCertificate:
    labels: tuple
    matrices: tuple
    rank_trail: tuple
    achieved_rank: int
    target_rank: int
    stalled: bool
    inside_ambient: bool
    closure_rank: int
    closure_divisor_exponents: tuple


def select_conjugators(
    m0: SpanLattice,
    ambient: SpanLattice,
    candidates,
    max_conjugators: int = 16,
) -> ConjugatorCertificate:
    """Greedy conjugator selection for rank saturation.

    Scans the candidate words in stream order each round and keeps the first
    whose adjoint image of the base lattice strictly increases the rank of
    the running sum; stops at full ambient rank, at the conjugator budget,
    or stalled when a full scan finds no improvement.  The running sum
    starts at the base lattice, so the identity conjugator is implicit.
    """
    n = int(m0.dim**0.5)
    p, N = m0.p, m0.N
    cands = []
    for w in candidates:
        cands.append((w, conjugation_pair(w.matrix, p, N)))
    running = m0
    chosen: list[Word] = []
    trail = [m0.rank]
    stalled = False
    while running.rank < ambient.rank and len(chosen) < max_conjugators:
        for w, pair in cands:
            test = running.union_with(
                [ad_apply(pair, list(b), n, p, N) for b in m0.basis]
            )
            if test.rank > running.rank:
                chosen.append(w)
                running = test
                trail.append(test.rank)
                break
        else:
            stalled = True
            break
    if running.rank < ambient.rank and not stalled and len(chosen) >= max_conjugators:
        stalled = True
    if chosen:
        closure, _ = adjoint_saturate(running, [w.matrix for w in chosen])
    else:
        closure = running
    return ConjugatorCertificate(
        labels=tuple(w.label for w in chosen),
        matrices=tuple(w.matrix for w in chosen),
        rank_trail=tuple(trail),
        achieved_rank=running.rank,
        target_rank=ambient.rank,
        stalled=stalled,
        inside_ambient=running.is_sublattice_of(ambient),
        closure_rank=closure.rank,
        closure_divisor_exponents=closure.divisor_exponents,
    )
