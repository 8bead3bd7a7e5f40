"""Averaging operators of symmetric walks on group tables, and their gap.

For a finite group table and a symmetric multiset Ω of element ids, the
operator averages a function over left translates: (Tf)(g) = mean over ω of
f(ω⁻¹ g).  Restricted to the mean-zero subspace its largest absolute
eigenvalue is the walk's lambda; 1 - lambda is the spectral gap.  Two
evaluation paths are kept deliberately distinct so they can cross-check each
other: a dense symmetric eigendecomposition for small tables, and power
iteration on T² with the constant vector deflated after every application.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import CoverageFailed, NotSymmetric
from .groups import GroupTable, SubsetHandle, enumerate_group, subset_mul

DENSE_LIMIT = 4000


@dataclass
class SpectralReport:
    lam: float
    method: str
    size: int
    omega_size: int
    generates: bool
    bipartite: bool
    converged: bool = True
    iterations: int = 0
    residual: float = 0.0
    second_eigenvalue: float | None = None
    least_eigenvalue: float | None = None
    top_multiplicity: int = 1

    @property
    def gap(self) -> float:
        return 1.0 - self.lam


class AveragingOperator:
    """T f(g) = (1/|Ω|) Σ_ω f(ω⁻¹ g) in the table's id coordinates."""

    def __init__(self, table: GroupTable, omega_ids):
        self.table = table
        self.omega_ids = tuple(int(w) for w in omega_ids)
        if not self.omega_ids:
            raise ValueError("omega must be nonempty")
        inv = table.inverse_ids()
        if Counter(self.omega_ids) != Counter(int(inv[w]) for w in self.omega_ids):
            raise NotSymmetric("omega multiset is not closed under inverses")
        perms = np.empty((len(self.omega_ids), table.size), dtype=np.int32)
        for r, w in enumerate(self.omega_ids):
            perms[r] = table.left_translation(table.mats[inv[w]])
        self.perms = perms

    @property
    def size(self) -> int:
        return self.table.size

    def apply(self, x: np.ndarray) -> np.ndarray:
        return _kernels.apply_walk(x, self.perms)

    def dense_matrix(self) -> np.ndarray:
        g = self.size
        m = np.zeros((g, g), dtype=np.float64)
        w = 1.0 / len(self.omega_ids)
        rows = np.arange(g)
        for r in range(self.perms.shape[0]):
            np.add.at(m, (rows, self.perms[r]), w)
        return m

    def generates(self) -> bool:
        return bool(self.table.closure_mask(set(self.omega_ids)).all())

    def bipartite(self) -> bool:
        """Two-colorability of the walk graph's identity component."""
        g = self.size
        color = np.full(g, -1, dtype=np.int8)
        color[0] = 0
        frontier = np.array([0], dtype=np.int64)
        while frontier.size:
            nxt = []
            for r in range(self.perms.shape[0]):
                nb = self.perms[r][frontier]
                newcol = (1 - color[frontier]).astype(np.int8)
                fresh = color[nb] == -1
                if fresh.any():
                    color[nb[fresh]] = newcol[fresh]
                    nxt.append(nb[fresh])
                if (color[nb[~fresh]] != newcol[~fresh]).any():
                    return False
            frontier = np.unique(np.concatenate(nxt)) if nxt else np.empty(0, dtype=np.int64)
        return True


def _lambda_dense(op: AveragingOperator) -> SpectralReport:
    w = np.linalg.eigvalsh(op.dense_matrix())
    g = op.size
    if g == 1:
        lam, second, least = 0.0, None, None
    else:
        lam = float(max(abs(w[0]), abs(w[-2])))
        second = float(w[-2])
        least = float(w[0])
    return SpectralReport(
        lam=min(lam, 1.0),
        method="dense",
        size=g,
        omega_size=len(op.omega_ids),
        generates=op.generates(),
        bipartite=op.bipartite(),
        second_eigenvalue=second,
        least_eigenvalue=least,
        top_multiplicity=int((w > 1 - 1e-9).sum()),
    )


def _lambda_iterative(op: AveragingOperator, tol: float, max_iter: int, seed: int) -> SpectralReport:
    g = op.size
    if g == 1:
        return SpectralReport(
            lam=0.0, method="iterative", size=1, omega_size=len(op.omega_ids),
            generates=True, bipartite=True,
        )
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(g)
    x -= x.mean()
    nrm = np.linalg.norm(x)
    x /= nrm
    rho = 0.0
    residual = np.inf
    iters = 0
    converged = False
    while iters < max_iter:
        y = op.apply(x)
        y -= y.mean()  # deflate constants after every application
        y = op.apply(y)
        y -= y.mean()
        iters += 1
        rho = float(x @ y)
        residual = float(np.linalg.norm(y - rho * x))
        if residual <= tol:
            converged = True
            break
        ny = np.linalg.norm(y)
        if ny == 0.0:  # T² annihilates the mean-zero part: lambda is 0
            rho = 0.0
            converged = True
            residual = 0.0
            break
        x = y / ny
    lam = float(np.sqrt(max(rho, 0.0)))
    return SpectralReport(
        lam=min(lam, 1.0),
        method="iterative",
        size=g,
        omega_size=len(op.omega_ids),
        generates=op.generates(),
        bipartite=op.bipartite(),
        converged=converged,
        iterations=iters,
        residual=residual,
    )


def lambda_of(
    op: AveragingOperator,
    tol: float = 1e-11,
    policy: str = "auto",
    dense_limit: int = DENSE_LIMIT,
    max_iter: int = 300_000,
    seed: int = 20260819,
) -> SpectralReport:
    """Walk lambda: largest |eigenvalue| on the mean-zero subspace.

    policy 'auto' takes the dense path up to dense_limit elements and power
    iteration beyond.  When the walk does not generate (the report's
    ``generates`` flag), the restricted top eigenvalue is genuinely 1 and the
    returned lambda reflects that.
    """
    if policy not in ("auto", "dense", "iterative"):
        raise ValueError(f"unknown policy {policy!r}")
    if policy == "dense" or (policy == "auto" and op.size <= dense_limit):
        return _lambda_dense(op)
    return _lambda_iterative(op, tol=tol, max_iter=max_iter, seed=seed)


def expansion_lower_bound(report: SpectralReport) -> float:
    """Crude edge-expansion bound from the gap: (1 - lambda)/2 · |Ω|."""
    return (1.0 - report.lam) / 2.0 * report.omega_size


@dataclass
class CombineRecord:
    """Outcome of transferring a subgroup gap to the ambient group."""

    covered: bool
    factors_used: int
    image_sizes: list[int] = field(default_factory=list)
    omega_prime_ids: tuple = ()
    lam_sub: SpectralReport | None = None
    lam_combined: SpectralReport | None = None
    consistent: bool | None = None


def combine_empirical(
    G: GroupTable,
    H: SubsetHandle,
    omega_H,
    conjugators,
    tol: float = 1e-6,
    strict: bool = True,
    lambda_kwargs: dict | None = None,
) -> CombineRecord:
    """Empirical instance of the subgroup-to-group gap transfer.

    Checks the product of conjugated copies γHγ⁻¹ (in the given order)
    saturates G, forms Ω' = ∪ γ Ω_H γ⁻¹, and evaluates both walks.  The
    combined walk must have lambda < 1 whenever coverage holds and the Ω'
    graph is connected and non-bipartite; ``consistent`` records that check.
    With strict=True a coverage failure raises CoverageFailed instead of
    returning a record.
    """
    lk = dict(lambda_kwargs or {})
    omega_H = [int(w) for w in omega_H]
    conj_ids = [int(c) for c in conjugators]
    if not H.mask[omega_H].all():
        raise ValueError("omega_H must lie inside H")

    # subgroup walk runs in H's own table, enumerated standalone
    sub_gens = [G.matrix(w) for w in omega_H]
    H_table = enumerate_group(sub_gens)
    if H_table.size != H.size:
        raise ValueError("H handle does not match the closure of omega_H")
    sub_ids = [H_table.id_of(g) for g in sub_gens]
    lam_sub = lambda_of(AveragingOperator(H_table, sub_ids), **lk)

    inv = G.inverse_ids()
    omega_prime: set[int] = set()
    X = None
    sizes = []
    covered = False
    used = 0
    for c in conj_ids:
        cmap = G.conjugation_map(G.mats[c], G.mats[inv[c]])
        copy_mask = np.zeros(G.size, dtype=bool)
        copy_mask[cmap[H.ids()]] = True
        copy = SubsetHandle(G, copy_mask)
        omega_prime.update(int(cmap[w]) for w in omega_H)
        X = copy if X is None else subset_mul(X, copy)
        used += 1
        sizes.append(X.size)
        if X.is_full():
            covered = True
            break
    if not covered and strict:
        raise CoverageFailed(
            f"conjugated copies cover {sizes[-1] if sizes else 0} of {G.size} elements"
        )
    op_prime = AveragingOperator(G, sorted(omega_prime))
    lam_comb = lambda_of(op_prime, **lk)
    consistent = None
    if covered:
        consistent = bool(
            lam_comb.bipartite or not lam_comb.generates or lam_comb.lam < 1 - tol
        )
    return CombineRecord(
        covered=covered,
        factors_used=used,
        image_sizes=sizes,
        omega_prime_ids=tuple(sorted(omega_prime)),
        lam_sub=lam_sub,
        lam_combined=lam_comb,
        consistent=consistent,
    )
