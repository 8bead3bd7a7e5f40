"""Coverage certificates: conjugated-copy products at the mod-p and
congruence-layer levels.

Everything here manipulates subsets of an enumerated group through
translation maps, so a product with a conjugated subgroup copy costs one
permutation build plus one gather per subgroup element:

    X · γHγ⁻¹ = ((X·γ) · H) · γ⁻¹        γHγ⁻¹ · X = γ · (H · (γ⁻¹X))

with X·γ and γ⁻¹X realized by scatter/gather through the right/left
translation permutation of γ.  The H products reuse one fixed stack of
translation maps per side.

The greedy cover search keeps a product of conjugated copies as a factor
list.  Its tripling move S ← S·S⁻¹·S triples the factor list (palindromic
merge keeps adjacent duplicates single); when tripling stops growing the
set, S is a subgroup and only a fresh conjugator can enlarge it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact import reduce_mod
from .groups import (
    GroupTable,
    SubsetHandle,
    make_right_inverse_maps,
    prime_power,
)
from .modring import rref_mod_p
from .saturation import ad_apply, conjugation_pair


class CopyAlgebra:
    """Products with conjugated copies of one fixed subgroup H."""

    def __init__(self, table: GroupTable, h_ids: np.ndarray):
        self.table = table
        self.h_ids = np.asarray(h_ids, dtype=np.int64)
        inv = table.inverse_ids()
        self.right_maps = make_right_inverse_maps(table, self.h_ids)
        left = np.empty((self.h_ids.size, table.size), dtype=np.int32)
        for i, h in enumerate(self.h_ids):
            left[i] = table.left_translation(table.mats[inv[int(h)]])
        self.left_maps = left
        self._rt_cache: dict[int, np.ndarray] = {}
        self._lt_cache: dict[int, np.ndarray] = {}

    def _rt(self, cid: int) -> np.ndarray:
        mp = self._rt_cache.get(cid)
        if mp is None:
            mp = self.table.right_translation(self.table.mats[cid])
            self._rt_cache[cid] = mp
        return mp

    def _lt(self, cid: int) -> np.ndarray:
        mp = self._lt_cache.get(cid)
        if mp is None:
            mp = self.table.left_translation(self.table.mats[cid])
            self._lt_cache[cid] = mp
        return mp

    def _h_mul(self, mask: np.ndarray, maps: np.ndarray) -> np.ndarray:
        from . import _kernels

        return _kernels.gather_any(mask.astype(np.uint8), maps).astype(bool)

    def right_mul_copy(self, mask: np.ndarray, cid: int, keep_cache: bool = True) -> np.ndarray:
        """mask of X · γHγ⁻¹ for X given as a mask, γ the element with id cid."""
        rt = self._rt(cid)
        shifted = np.empty_like(mask)
        shifted[rt] = mask  # t·γ picks up X[t]
        prod = self._h_mul(shifted, self.right_maps)
        out = prod[rt]  # t ∈ Yγ⁻¹ iff t·γ ∈ Y
        if not keep_cache:
            self._rt_cache.pop(cid, None)
        return out

    def left_mul_copy(self, mask: np.ndarray, cid: int, keep_cache: bool = True) -> np.ndarray:
        """mask of γHγ⁻¹ · X."""
        lt = self._lt(cid)
        shifted = mask[lt]  # t ∈ γ⁻¹X iff γ·t ∈ X
        prod = self._h_mul(shifted, self.left_maps)
        out = np.empty_like(mask)
        out[lt] = prod  # γ·t lands where prod had t
        if not keep_cache:
            self._lt_cache.pop(cid, None)
        return out


@dataclass
class CoverCertificate:
    covered: bool
    stalled: bool
    factor_ids: tuple
    conjugator_ids: tuple
    sizes: tuple
    moves: tuple
    h_size: int
    group_size: int


def greedy_conjugators_modp(
    table: GroupTable,
    h_handle: SubsetHandle,
    candidate_ids,
    max_factors: int = 96,
    max_rounds: int = 64,
) -> CoverCertificate:
    """Greedy growth of a product of conjugated copies of H until it covers.

    Each round prefers the tripling move S ← S·S⁻¹·S when it strictly grows
    the set.  Otherwise every candidate conjugator γ is scored by
    |γHγ⁻¹·S|; the best strictly-improving candidate (first on ties) is
    prepended.  When neither move grows the set the search stalls, which is
    a finding, not an error: a proper subgroup that absorbs all candidate
    conjugates (e.g. a central subgroup) stalls immediately.
    """
    if not h_handle.contains_id(0):
        raise ValueError("H must contain the identity")
    alg = CopyAlgebra(table, h_handle.ids())
    x = h_handle.mask.copy()
    factors = [0]
    sizes = [int(x.sum())]
    moves = ["seed"]
    conj_order = [0]
    cands = [int(c) for c in candidate_ids]
    stalled = False
    for _ in range(max_rounds):
        if x.all():
            break
        grew = False
        if len(factors) > 1 and 3 * len(factors) - 2 <= max_factors:
            y = x.copy()
            tail = factors[-2::-1] + factors[1:]
            for cid in tail:
                y = alg.right_mul_copy(y, cid)
            if int(y.sum()) > sizes[-1]:
                x = y
                factors = factors + factors[-2::-1] + factors[1:]
                sizes.append(int(x.sum()))
                moves.append("triple")
                grew = True
        if not grew:
            best_cid = None
            best_mask = None
            best_size = sizes[-1]
            for cid in cands:
                y = alg.left_mul_copy(x, cid, keep_cache=cid in factors)
                s = int(y.sum())
                if s > best_size:
                    best_cid, best_mask, best_size = cid, y, s
            if best_cid is None:
                stalled = True
                break
            x = best_mask
            factors = [best_cid] + factors
            if best_cid not in conj_order:
                conj_order.append(best_cid)
            sizes.append(best_size)
            moves.append(f"conj:{best_cid}")
        if len(factors) > max_factors:
            stalled = True
            break
    covered = bool(x.all())
    if not covered and not stalled:
        stalled = True  # round budget ran out
    return CoverCertificate(
        covered=covered,
        stalled=stalled,
        factor_ids=tuple(factors),
        conjugator_ids=tuple(conj_order),
        sizes=tuple(sizes),
        moves=tuple(moves),
        h_size=h_handle.size,
        group_size=table.size,
    )


@dataclass
class FoldReport:
    c: int | None
    c_max: int
    sizes: tuple
    union_size: int


def fold_cover_check(
    table: GroupTable,
    h_handle: SubsetHandle,
    conjugator_ids,
    c_max: int,
) -> FoldReport:
    """Minimal C with (∪_i γ_i H γ_i⁻¹)^C = G, or None past c_max.

    The union contains the identity, so the fold is monotone and the first
    full fold is the minimal one.
    """
    alg = CopyAlgebra(table, h_handle.ids())
    cids = [int(c) for c in conjugator_ids]
    union = np.zeros(table.size, dtype=bool)
    ident = np.zeros(table.size, dtype=bool)
    ident[0] = True
    for cid in cids:
        union |= alg.right_mul_copy(ident, cid)
    usize = int(union.sum())
    x = union.copy()
    sizes = [usize]
    for c in range(1, c_max + 1):
        if x.all():
            return FoldReport(c=c, c_max=c_max, sizes=tuple(sizes), union_size=usize)
        if c == c_max:
            break
        # X·(∪ copies) = ∪ X·copy; monotone because every copy contains e
        acc = np.zeros_like(x)
        for cid in cids:
            acc |= alg.right_mul_copy(x, cid)
        if int(acc.sum()) == sizes[-1]:
            break  # stabilized below the full group; no fold count works
        x = acc
        sizes.append(int(x.sum()))
    return FoldReport(c=None, c_max=c_max, sizes=tuple(sizes), union_size=usize)


def level_mask(table: GroupTable, level: int) -> np.ndarray:
    """Mask of elements ≡ I mod p^level inside a prime-power table."""
    p, j = prime_power(table.m)
    if level > j:
        raise ValueError(f"level {level} deeper than table modulus {p}^{j}")
    pl = p**level
    eye = np.eye(table.n, dtype=np.int64)
    return (((table.mats - eye) % pl) == 0).all(axis=(1, 2))


def copy_product(
    table: GroupTable,
    k_ids: np.ndarray,
    conjugators,
    map_budget: int = 1 << 26,
) -> np.ndarray:
    """Mask of Π_i γ_i K γ_i⁻¹ for K given by ids, γ by rational matrices.

    The conjugators need not belong to the table (it is typically a
    congruence layer they normalize); conjugation that leaves the table
    raises, which callers surface as a finding.  Translation maps are built
    in chunks of at most map_budget entries, since |K|·|table| can dwarf the
    table itself; the union over chunks is the union over all of K.
    """
    from . import _kernels

    m = table.m
    x = np.zeros(table.size, dtype=bool)
    x[0] = True
    kid_arr = np.asarray(k_ids, dtype=np.int64)
    chunk = max(1, int(map_budget) // max(1, table.size))
    for gamma in conjugators:
        r = np.array(reduce_mod(gamma, m).to_rows(), dtype=np.int64)
        ri = np.array(reduce_mod(gamma.inverse(), m).to_rows(), dtype=np.int64)
        cmap = table.conjugation_map(r, ri)
        copy_ids = cmap[kid_arr]
        x8 = x.astype(np.uint8)
        acc = np.zeros_like(x8)
        for s in range(0, len(copy_ids), chunk):
            maps = make_right_inverse_maps(table, copy_ids[s : s + chunk])
            np.logical_or(acc, _kernels.gather_any(x8, maps), out=acc)
            if acc.all():
                break
        x = acc.astype(bool)
    return x


@dataclass
class CongruenceCoverReport:
    covered: bool
    check_level: int
    product_size: int
    level_sizes: dict
    level_covered: dict


def congruence_cover_check(
    table: GroupTable,
    k2_ids: np.ndarray,
    conjugators,
    check_level: int,
) -> CongruenceCoverReport:
    """Does Π γ_i K₂ γ_i⁻¹ cover the level-``check_level`` layer of the table?

    The table is a congruence layer of the ambient group at some modulus
    p^(N+M); covering its deeper layers with products of conjugated copies
    of the subgroup's layer is the congruence-level shadow of the cover.
    Per-level coverage is reported for every level the table resolves.
    """
    _, j = prime_power(table.m)
    x = copy_product(table, k2_ids, conjugators)
    level_sizes = {}
    level_cov = {}
    for lvl in range(1, j):
        lm = level_mask(table, lvl)
        level_sizes[lvl] = int(lm.sum())
        level_cov[lvl] = bool((x | ~lm).all())
    covered = level_cov.get(check_level, False)
    return CongruenceCoverReport(
        covered=covered,
        check_level=check_level,
        product_size=int(x.sum()),
        level_sizes=level_sizes,
        level_covered=level_cov,
    )


@dataclass
class GradeReport:
    set_covered: bool
    span_covered: bool
    agree: bool
    level: int
    layer_order: int
    product_order: int
    span_rank: int
    target_rank: int
    witness: str


def grade_generation_check(
    g1_table: GroupTable,
    k2_ids: np.ndarray,
    conjugators,
    g2_basis_rows,
    g1_rank: int,
    k: int,
) -> GradeReport:
    """Two routes to one claim at grade level k, compared for agreement.

    Set route: inside the level-k layer table at modulus p^(k+1), the product
    of conjugated copies of the subgroup layer either is or is not the whole
    layer (the layer is abelian, so one product pass settles it).  Span
    route: the grade values of the subgroup layer, pushed through the
    adjoint action of the same conjugators mod p, either do or do not span
    the full grade space.  The grade map turns one into the other, so any
    disagreement is a bug in one of the computations; both verdicts and a
    witness travel in the report.
    """
    p, _ = prime_power(g1_table.m)
    x = copy_product(g1_table, k2_ids, conjugators)
    set_covered = bool(x.all())

    rows = []
    for gamma in conjugators:
        pair = conjugation_pair(gamma, p, 1)
        n = gamma.n
        for b in g2_basis_rows:
            rows.append(ad_apply(pair, list(b), n, p, 1))
    if rows:
        basis, _ = rref_mod_p(rows, p)
        span_rank = len(basis)
    else:
        span_rank = 0
    span_covered = span_rank == g1_rank

    witness = ""
    if set_covered != span_covered:
        if not set_covered:
            missing = int(np.flatnonzero(~x)[0])
            witness = f"uncovered layer element id {missing}"
        else:
            witness = "adjoint span misses a grade direction"
    return GradeReport(
        set_covered=set_covered,
        span_covered=span_covered,
        agree=set_covered == span_covered,
        level=k,
        layer_order=g1_table.size,
        product_order=int(x.sum()),
        span_rank=span_rank,
        target_rank=g1_rank,
        witness=witness,
    )


@dataclass
class OpenImageReport:
    exponent: int | None
    tried: tuple
    fractions: dict
    product_size: int


def open_image_exponent(
    table: GroupTable,
    k2_ids: np.ndarray,
    conjugators,
    start_level: int,
    l_max: int,
) -> OpenImageReport:
    """Least l with the level-l layer inside Π γ_i K₂ γ_i⁻¹, or None.

    Containment is monotone in l (deeper layers are smaller), so the first
    success is least.  A None exponent is a value: the report carries the
    per-level covered fractions so a near miss is visible.
    """
    _, j = prime_power(table.m)
    x = copy_product(table, k2_ids, conjugators)
    tried = []
    fractions = {}
    found = None
    for lvl in range(start_level, min(l_max, j - 1) + 1):
        lm = level_mask(table, lvl)
        tried.append(lvl)
        inside = int((x & lm).sum())
        total = int(lm.sum())
        fractions[lvl] = inside / total if total else 1.0
        if found is None and inside == total:
            found = lvl
    return OpenImageReport(
        exponent=found,
        tried=tuple(tried),
        fractions=fractions,
        product_size=int(x.sum()),
    )
