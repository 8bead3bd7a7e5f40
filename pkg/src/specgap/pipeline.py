"""Study configuration, the per-prime induction pipeline, and its archive.

A study names two generating sets Ω₂ ⊆ Ω₁ of integral (or p-integral)
matrices and a list of primes.  For each prime the pipeline reduces both
sets, enumerates the ambient group and the subgroup closure, measures both
walk spectra, builds Lie lattices of the congruence layers from word
samples, selects conjugators that saturate the subgroup lattice, certifies
set-level coverage (greedy conjugated copies, fold count, congruence window,
open-image exponent, grade generation in two independent forms), and finally
measures the conjugated-union walk.  Failures along the way are recorded in
the per-prime record, never raised out of the run: a stalled cover or an
empty chart layer is a finding.

Archives are JSONL ("SGIC1"): a header line, one line per prime, one summary
line, each a canonical JSON object (sorted keys, no whitespace, no
timestamps), so identical runs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import _kernels
from .charts import ChartConfig, chart_floor, trunc_exp, word_map
from .coverage import (
    congruence_cover_check,
    fold_cover_check,
    grade_generation_check,
    greedy_conjugators_modp,
    open_image_exponent,
)
from .errors import (
    CorruptRecord,
    EmptyChartLayer,
    FormatVersionMismatch,
)
from .exact import (
    PadicTruncMatrix,
    RationalMatrix,
    ResidueMatrix,
    invert_mod,
    reduce_mod,
)
from .groups import (
    DEFAULT_BUDGET,
    GroupTable,
    SubsetHandle,
    cache_key,
    enumerate_group,
    kernel_table_from_basis,
    load_table,
    save_table,
)
from .modring import in_span_mod_p
from .saturation import (
    SpanLattice,
    grade_basis_from_words,
    lie_lattice_from_words,
    select_conjugators,
)
from .spectral import AveragingOperator, combine_empirical, lambda_of
from .words import word_stream

SCHEMA = "SGIC1"
FORMAT = 1

# Cap on translation-map entries (int32) a single cover pass may gather
# through; 2^26 entries is 256 MiB, which leaves room for the tables.
_MAP_BUDGET = 1 << 26


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    f = 3
    while f * f <= p:
        if p % f == 0:
            return False
        f += 2
    return True


def _unit_scale(basis, p: int, c: int) -> list[list[int]]:
    """Divide the chart scale p^c out of log-lattice basis rows, exactly."""
    scale = p**c
    out = []
    for row in basis:
        vals = []
        for x in row:
            q, r = divmod(int(x), scale)
            if r:
                raise RuntimeError("lattice basis entry below the chart scale")
            vals.append(q)
        out.append(vals)
    return out


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class NamedMatrix:
    name: str
    matrix: RationalMatrix


def _parse_matrix(spec, n: int) -> NamedMatrix:
    name = spec["name"]
    denom = Fraction(spec.get("denom", 1))
    rows = spec["rows"]
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"matrix {name!r} is not {n}x{n}")
    mat = RationalMatrix([[Fraction(x) / denom for x in r] for r in rows])
    return NamedMatrix(name=name, matrix=mat)


def _close_under_inverse(mats: list[NamedMatrix]) -> list[NamedMatrix]:
    have = {nm.matrix for nm in mats}
    out = list(mats)
    for nm in mats:
        inv = nm.matrix.inverse()
        if inv not in have:
            have.add(inv)
            out.append(NamedMatrix(name=f"{nm.name}_inv", matrix=inv))
    return out


@dataclass
class StudyConfig:
    study: str
    n: int
    omega1: tuple
    omega2: tuple
    primes: tuple
    chart_c: int = 1
    chart_n: int = 3
    grade_k: int = 1
    cong_level: int = 1
    cong_extra: int = 1
    l_max: int = 3
    max_elements: int = DEFAULT_BUDGET
    word_length: int = 3
    word_budget: int = 512
    max_conjugators: int = 12
    candidate_cap: int = 64
    fold_cmax: int = 24
    max_factors: int = 96
    lattice_want: int = 96
    tolerance: float = 1e-6
    assertions: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        n = int(data["n"])
        omega1 = _close_under_inverse([_parse_matrix(s, n) for s in data["omega1"]])
        omega2 = _close_under_inverse([_parse_matrix(s, n) for s in data["omega2"]])
        o1_set = {nm.matrix for nm in omega1}
        for nm in omega2:
            if nm.matrix not in o1_set:
                raise ValueError(
                    f"omega2 element {nm.name!r} is not in omega1; the subgroup "
                    "generators must be a subset of the ambient ones"
                )
        primes = tuple(int(p) for p in data["primes"])
        for p in primes:
            if not _is_prime(p):
                raise ValueError(f"configured prime {p} is not prime")
        depths = data.get("depths", {})
        budgets = data.get("budgets", {})
        return cls(
            study=str(data["study"]),
            n=n,
            omega1=tuple(omega1),
            omega2=tuple(omega2),
            primes=primes,
            chart_c=int(depths.get("chart_c", 1)),
            chart_n=int(depths.get("chart_n", 3)),
            grade_k=int(depths.get("grade_k", 1)),
            cong_level=int(depths.get("cong_level", 1)),
            cong_extra=int(depths.get("cong_extra", 1)),
            l_max=int(depths.get("l_max", 3)),
            max_elements=int(budgets.get("max_elements", DEFAULT_BUDGET)),
            word_length=int(budgets.get("word_length", 3)),
            word_budget=int(budgets.get("word_budget", 512)),
            max_conjugators=int(budgets.get("max_conjugators", 12)),
            candidate_cap=int(budgets.get("candidate_cap", 64)),
            fold_cmax=int(budgets.get("fold_cmax", 24)),
            max_factors=int(budgets.get("max_factors", 96)),
            lattice_want=int(budgets.get("lattice_want", 96)),
            tolerance=float(data.get("tolerance", 1e-6)),
            assertions=dict(data.get("assertions", {})),
        )

    @classmethod
    def from_yaml(cls, path) -> "StudyConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    @classmethod
    def from_catalog(cls, name: str) -> "StudyConfig":
        from importlib.resources import files

        res = files("specgap").joinpath("catalog", f"{name}.yaml")
        return cls.from_dict(yaml.safe_load(res.read_text(encoding="utf-8")))

    @property
    def q0(self) -> int:
        """lcm of all generator denominators; primes dividing it are skipped."""
        q = 1
        for nm in self.omega1 + self.omega2:
            for r in nm.matrix.rows:
                for x in r:
                    q = math.lcm(q, x.denominator)
        return q

    def canonical(self) -> dict:
        def mat(nm: NamedMatrix):
            return {
                "name": nm.name,
                "rows": [[str(x) for x in r] for r in nm.matrix.rows],
            }

        return {
            "study": self.study,
            "n": self.n,
            "omega1": [mat(x) for x in self.omega1],
            "omega2": [mat(x) for x in self.omega2],
            "primes": list(self.primes),
            "depths": {
                "chart_c": self.chart_c,
                "chart_n": self.chart_n,
                "grade_k": self.grade_k,
                "cong_level": self.cong_level,
                "cong_extra": self.cong_extra,
                "l_max": self.l_max,
            },
            "budgets": {
                "max_elements": self.max_elements,
                "word_length": self.word_length,
                "word_budget": self.word_budget,
                "max_conjugators": self.max_conjugators,
                "candidate_cap": self.candidate_cap,
                "fold_cmax": self.fold_cmax,
                "max_factors": self.max_factors,
                "lattice_want": self.lattice_want,
            },
            "tolerance": self.tolerance,
            "assertions": dict(sorted(self.assertions.items())),
        }

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- shared per-prime preparation -------------------------------------------


@dataclass
class PrimeContext:
    p: int
    omega1_res: list
    omega2_res: list
    g1: GroupTable
    o1_ids: list
    o2_ids: list
    h_handle: SubsetHandle


def _cached_enumerate(gens, budget: int, cache_dir) -> GroupTable:
    if cache_dir is None:
        return enumerate_group(gens, budget=budget)
    cache_dir = Path(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"sggt-{cache_key(gens, budget)}.bin"
    if path.exists():
        return load_table(path)
    table = enumerate_group(gens, budget=budget)
    save_table(table, path)
    return table


def prepare_prime(cfg: StudyConfig, p: int, budget: int, cache_dir=None) -> PrimeContext:
    o1 = [reduce_mod(nm.matrix, p) for nm in cfg.omega1]
    o2 = [reduce_mod(nm.matrix, p) for nm in cfg.omega2]
    g1 = _cached_enumerate(o1, budget, cache_dir)
    o1_ids = sorted({g1.id_of(r) for r in o1})
    o2_ids = sorted({g1.id_of(r) for r in o2})
    h_handle = SubsetHandle(g1, g1.closure_mask(o2_ids))
    return PrimeContext(
        p=p,
        omega1_res=o1,
        omega2_res=o2,
        g1=g1,
        o1_ids=o1_ids,
        o2_ids=o2_ids,
        h_handle=h_handle,
    )


def _zero_lattice(p: int, N: int, n: int) -> SpanLattice:
    return SpanLattice.from_vectors([], p, N, n * n)


def _layer_table(basis_rows, p: int, k: int, depth: int, budget: int, n: int) -> GroupTable:
    """Group generated by I + p^k·(basis) at modulus p^depth; {I} when empty."""
    if basis_rows:
        return kernel_table_from_basis(basis_rows, p, k, depth, budget=budget)
    return enumerate_group([ResidueMatrix.identity(n, p**depth)], budget=budget)


def _window_table(lat: SpanLattice, c: int, depth: int, budget: int, n: int) -> GroupTable:
    """Congruence-layer table generated by exp of a lattice basis.

    The lattice is known mod p^N, so the window depth must not exceed N;
    callers clamp it.  An empty lattice windows to the trivial group.
    """
    if lat.rank == 0:
        return enumerate_group([ResidueMatrix.identity(n, lat.p**depth)], budget=budget)
    if depth > lat.N:
        raise ValueError("window depth exceeds the lattice precision")
    cfgw = ChartConfig(lat.p, depth, c)
    gens = []
    for row in lat.basis:
        x = PadicTruncMatrix(
            [list(row[i * n : (i + 1) * n]) for i in range(n)], lat.p, lat.N
        ).reduce_to(depth)
        if x.valuation() < c:
            raise ValueError("lattice basis row below the window level")
        g = trunc_exp(x, cfgw).to_residue()
        gens.append(g)
        gens.append(invert_mod(g))
    return enumerate_group(gens, budget=budget)


# -- record helpers -----------------------------------------------------------


def _spectral_dict(rep) -> dict:
    return {
        "lam": float(rep.lam),
        "second_eigenvalue": None if rep.second_eigenvalue is None else float(rep.second_eigenvalue),
        "method": rep.method,
        "size": rep.size,
        "omega_size": rep.omega_size,
        "generates": bool(rep.generates),
        "bipartite": bool(rep.bipartite),
        "converged": bool(rep.converged),
        "iterations": rep.iterations,
    }


def _lattice_dict(lat: SpanLattice) -> dict:
    return {
        "rank": lat.rank,
        "divisor_exponents": list(lat.divisor_exponents),
        "pivots": [[c, e] for c, e in lat.pivots],
    }


def _matrix_entries(m: RationalMatrix):
    return [[str(x) for x in r] for r in m.rows]


# -- the per-prime pipeline ---------------------------------------------------


def _run_prime(cfg: StudyConfig, p: int, cache_dir, tol: float, budget: int, logf) -> dict:
    rec: dict = {"schema": SCHEMA, "kind": "prime", "p": p, "status": "ok"}
    if not _is_prime(p):
        # reachable through --primes overrides; the chart and lattice math
        # is prime-only, so this must not flow through silently
        rec["status"] = "failed"
        rec["error"] = f"validate: {p} is not prime"
        logf(f"p={p}: failed (not prime)")
        return rec
    if cfg.q0 % p == 0:
        rec["status"] = "skipped"
        rec["notice"] = (
            f"prime {p} divides the denominator support {cfg.q0} of the generators"
        )
        logf(f"p={p}: skipped ({rec['notice']})")
        return rec

    checks: dict = {}
    notes: list[str] = []
    step = "reduce"
    try:
        ctx = prepare_prime(cfg, p, budget, cache_dir)
        g1 = ctx.g1
        rec["g1_order"] = g1.size
        rec["h_order"] = ctx.h_handle.size
        logf(f"p={p}: |G1|={g1.size} |H|={ctx.h_handle.size}")

        step = "spectral-sub"
        h_gens = [g1.matrix(i) for i in ctx.o2_ids]
        h_table = enumerate_group(h_gens, budget=budget)
        h_own_ids = sorted({h_table.id_of(g) for g in h_gens})
        lam_sub = lambda_of(AveragingOperator(h_table, h_own_ids))
        rec["spectral_sub"] = _spectral_dict(lam_sub)
        checks["subgroup_gap"] = bool(
            lam_sub.generates and not lam_sub.bipartite and lam_sub.lam < 1 - tol
        )

        step = "spectral-ambient"
        lam_amb = lambda_of(AveragingOperator(g1, ctx.o1_ids))
        rec["spectral_ambient"] = _spectral_dict(lam_amb)

        step = "grades"
        o1_rat = [nm.matrix for nm in cfg.omega1]
        o2_rat = [nm.matrix for nm in cfg.omega2]
        g1_gb, g1_piv = grade_basis_from_words(
            o1_rat, p, cfg.grade_k, word_budget=cfg.word_budget, max_len=cfg.word_length
        )
        g2_gb, _ = grade_basis_from_words(
            o2_rat, p, cfg.grade_k, word_budget=cfg.word_budget, max_len=cfg.word_length
        )
        rec["grade_dims"] = {"ambient": len(g1_gb), "sub": len(g2_gb)}
        embedded = all(in_span_mod_p(g1_gb, g1_piv, row, p) for row in g2_gb)
        if not embedded:
            notes.append("subgroup grade span escapes the ambient grade span")
        checks["grade_embedded"] = embedded

        step = "charts"
        c_p = max(cfg.chart_c, chart_floor(p))
        n_p = max(cfg.chart_n, c_p + 1)
        chart = ChartConfig(p, n_p, c_p)
        rec["chart"] = {"c": c_p, "N": n_p}

        step = "lattice-sub"
        try:
            m0 = lie_lattice_from_words(
                o2_rat,
                chart,
                word_budget=cfg.word_budget,
                max_len=cfg.word_length,
                want=cfg.lattice_want,
            )
        except EmptyChartLayer:
            m0 = _zero_lattice(p, n_p, cfg.n)
            notes.append("subgroup chart layer holds only the identity")
        rec["lattice_sub"] = _lattice_dict(m0)

        step = "lattice-ambient"
        ambient = lie_lattice_from_words(
            o1_rat,
            chart,
            word_budget=cfg.word_budget,
            max_len=cfg.word_length,
            want=cfg.lattice_want,
        )
        rec["lattice_ambient"] = _lattice_dict(ambient)

        step = "saturate"
        sat_candidates = word_stream(
            o1_rat, cfg.word_length, include_identity=False, max_words=cfg.candidate_cap
        )
        sat = select_conjugators(m0, ambient, sat_candidates, cfg.max_conjugators)
        rec["saturation"] = {
            "labels": list(sat.labels),
            "rank_trail": list(sat.rank_trail),
            "achieved_rank": sat.achieved_rank,
            "target_rank": sat.target_rank,
            "stalled": sat.stalled,
            "inside_ambient": sat.inside_ambient,
            "closure_rank": sat.closure_rank,
        }
        checks["saturation"] = not sat.stalled
        conjugators = [RationalMatrix.identity(cfg.n)] + [m for m in sat.matrices]
        rec["conjugators"] = [_matrix_entries(m) for m in conjugators]

        step = "word-map"
        if m0.rank > 0:
            xs = [
                PadicTruncMatrix(
                    [list(m0.basis[0][i * cfg.n : (i + 1) * cfg.n]) for i in range(cfg.n)],
                    p,
                    n_p,
                )
                for _ in conjugators
            ]
            # minors are judged on unit-scale algebra directions; the chart
            # lattice carries a uniform p^c factor that must be divided out,
            # and the quotient is only canonical mod p^(N-c)
            wm = word_map(
                xs,
                conjugators,
                chart,
                sub_basis=_unit_scale(m0.basis, p, c_p),
                target_dim=ambient.rank,
                sub_basis_precision=n_p - c_p,
            )
            rec["word_map"] = {
                "head_ok": wm.head_ok,
                "head_margin": wm.head_margin,
                "minor_exponent": wm.minor_exponent,
                "minor_value": wm.minor_value,
            }
            checks["word_map_head"] = bool(wm.head_ok)
            checks["minor_nonvanishing"] = wm.minor_exponent is not None
        else:
            notes.append("word map skipped: subgroup lattice is zero")
            checks["word_map_head"] = False
            checks["minor_nonvanishing"] = False

        step = "cover"
        cand_ids: list[int] = []
        seen_cand = set()
        for w in word_stream(
            o1_rat, cfg.word_length, include_identity=False, max_words=4 * cfg.candidate_cap
        ):
            cid = g1.id_of(reduce_mod(w.matrix, p))
            if cid > 0 and cid not in seen_cand:
                seen_cand.add(cid)
                cand_ids.append(cid)
            if len(cand_ids) >= cfg.candidate_cap:
                break
        cover = greedy_conjugators_modp(
            g1, ctx.h_handle, cand_ids, max_factors=cfg.max_factors
        )
        rec["cover"] = {
            "covered": cover.covered,
            "stalled": cover.stalled,
            "factor_count": len(cover.factor_ids),
            "conjugator_ids": list(cover.conjugator_ids),
            "sizes": list(cover.sizes),
            "moves": list(cover.moves),
        }
        checks["cover"] = cover.covered

        step = "fold"
        fold = fold_cover_check(g1, ctx.h_handle, cover.conjugator_ids, cfg.fold_cmax)
        rec["fold"] = {
            "c": fold.c,
            "c_max": fold.c_max,
            "union_size": fold.union_size,
            "sizes": list(fold.sizes),
        }
        checks["fold"] = fold.c is not None

        step = "grade-check"
        k1 = _layer_table(g1_gb, p, cfg.grade_k, cfg.grade_k + 1, budget, cfg.n)
        k2 = _layer_table(g2_gb, p, cfg.grade_k, cfg.grade_k + 1, budget, cfg.n)
        k2_ids = k1.ids_of(k2.mats)
        if (k2_ids < 0).any():
            notes.append("subgroup grade layer escapes the ambient grade layer")
            checks["grade_agreement"] = False
            checks["grade_generation"] = False
        else:
            grade = grade_generation_check(
                k1, k2_ids, conjugators, g2_gb, len(g1_gb), cfg.grade_k
            )
            rec["grade"] = {
                "set_covered": grade.set_covered,
                "span_covered": grade.span_covered,
                "agree": grade.agree,
                "layer_order": grade.layer_order,
                "product_order": grade.product_order,
                "span_rank": grade.span_rank,
                "target_rank": grade.target_rank,
                "witness": grade.witness,
            }
            checks["grade_agreement"] = grade.agree
            checks["grade_generation"] = grade.set_covered
        step = "window"
        # Window depth is bound by the subset-product cost, not just the
        # element count: each cover pass gathers through |K2 window| maps of
        # length |K1 window|, so the pair of ranks governs how many levels
        # fit under the map budget.
        pair_rank = max(1, m0.rank + ambient.rank)
        w_levels = max(1, int(math.log(_MAP_BUDGET, p) // pair_rank))
        depth = min(n_p, cfg.l_max + 1, c_p + w_levels)
        depth = max(depth, c_p + 1)
        rec["window_depth"] = depth
        k1w = _window_table(ambient, c_p, depth, budget, cfg.n)
        k2w = _window_table(m0, c_p, depth, budget, cfg.n)
        k2w_ids = k1w.ids_of(k2w.mats)
        if (k2w_ids < 0).any():
            notes.append("subgroup window layer escapes the ambient window")
            checks["congruence_cover"] = False
            checks["open_image"] = False
        else:
            cong = congruence_cover_check(
                k1w, k2w_ids, conjugators, check_level=max(cfg.cong_level, c_p)
            )
            rec["congruence"] = {
                "covered": cong.covered,
                "check_level": cong.check_level,
                "product_size": cong.product_size,
                "layer_sizes": {str(k): v for k, v in cong.level_sizes.items()},
                "level_covered": {str(k): v for k, v in cong.level_covered.items()},
            }
            checks["congruence_cover"] = cong.covered
            oi = open_image_exponent(k1w, k2w_ids, conjugators, c_p, cfg.l_max)
            rec["open_image"] = {
                "exponent": oi.exponent,
                "tried": list(oi.tried),
                "fractions": {str(k): v for k, v in oi.fractions.items()},
            }
            checks["open_image"] = oi.exponent is not None

        step = "combine"
        comb = combine_empirical(
            g1,
            ctx.h_handle,
            ctx.o2_ids,
            cover.factor_ids,
            tol=tol,
            strict=False,
        )
        rec["combined"] = {
            "covered": comb.covered,
            "factors_used": comb.factors_used,
            "omega_prime_size": len(comb.omega_prime_ids),
            "lam": float(comb.lam_combined.lam),
            "spectral": _spectral_dict(comb.lam_combined),
            "consistent": comb.consistent,
        }
        checks["combined_gap"] = bool(comb.lam_combined.lam < 1 - tol)
        checks["consistency"] = comb.consistent is not False
    except Exception as exc:  # recorded, never fatal to the study
        rec["status"] = "failed"
        rec["error"] = f"{step}: {type(exc).__name__}: {exc}"
        logf(f"p={p}: failed at {step}: {exc}")

    rec["checks"] = {k: bool(v) for k, v in sorted(checks.items())}
    rec["notes"] = notes
    rec["induced"] = rec["status"] == "ok" and all(checks.values()) and bool(checks)
    rec["failed_checks"] = sorted(k for k, v in checks.items() if not v)
    if rec["status"] == "ok":
        logf(
            f"p={p}: induced={rec['induced']}"
            + (f" (failed: {', '.join(rec['failed_checks'])})" if rec["failed_checks"] else "")
        )
    return rec


# -- certificates and persistence --------------------------------------------


@dataclass
class InductionCertificate:
    study: str
    digest: str
    n: int
    primes: tuple
    records: list
    summary: dict

    def record_for(self, p: int) -> dict | None:
        for r in self.records:
            if r["p"] == p:
                return r
        return None


def run_induce(
    cfg: StudyConfig,
    primes=None,
    cache_dir=None,
    tol: float | None = None,
    max_elements: int | None = None,
    threads: int | None = None,
    log=None,
) -> InductionCertificate:
    logf = log if log is not None else (lambda msg: None)
    if threads is not None:
        _kernels.set_threads(threads)
    tol = cfg.tolerance if tol is None else tol
    budget = cfg.max_elements if max_elements is None else max_elements
    plist = sorted(set(int(p) for p in (primes if primes is not None else cfg.primes)))
    for key in sorted(cfg.assertions):
        logf(f"assumption[{key}]: {cfg.assertions[key]}")
    records = [_run_prime(cfg, p, cache_dir, tol, budget, logf) for p in plist]
    by_status: dict = {"ok": 0, "skipped": 0, "failed": 0}
    induced = {}
    for r in records:
        by_status[r["status"]] += 1
        induced[str(r["p"])] = bool(r.get("induced", False))
    summary = {
        "schema": SCHEMA,
        "kind": "summary",
        "recorded": len(records),
        "by_status": by_status,
        "induced": induced,
    }
    return InductionCertificate(
        study=cfg.study,
        digest=cfg.digest(),
        n=cfg.n,
        primes=tuple(plist),
        records=records,
        summary=summary,
    )


def _dump_line(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def persist_study(cert: InductionCertificate, path) -> None:
    header = {
        "schema": SCHEMA,
        "kind": "header",
        "format": FORMAT,
        "study": cert.study,
        "digest": cert.digest,
        "n": cert.n,
        "primes": list(cert.primes),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_dump_line(header) + "\n")
        for rec in cert.records:
            fh.write(_dump_line(rec) + "\n")
        fh.write(_dump_line(cert.summary) + "\n")


def load_study(path) -> InductionCertificate:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise CorruptRecord("empty archive")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise CorruptRecord(f"header is not JSON: {exc}") from exc
    if header.get("schema") != SCHEMA or header.get("format") != FORMAT:
        raise FormatVersionMismatch(
            f"expected {SCHEMA} format {FORMAT}, got "
            f"{header.get('schema')!r} format {header.get('format')!r}"
        )
    records = []
    summary = None
    for ln in lines[1:]:
        try:
            obj = json.loads(ln)
        except json.JSONDecodeError as exc:
            raise CorruptRecord(f"record is not JSON: {exc}") from exc
        if obj.get("schema") != SCHEMA:
            raise CorruptRecord("record is missing the schema tag")
        if obj.get("kind") == "prime":
            records.append(obj)
        elif obj.get("kind") == "summary":
            summary = obj
        else:
            raise CorruptRecord(f"unknown record kind {obj.get('kind')!r}")
    if summary is None:
        raise CorruptRecord("missing summary record")
    if summary.get("recorded") != len(records):
        raise CorruptRecord(
            f"summary says {summary.get('recorded')} records, file has {len(records)}"
        )
    return InductionCertificate(
        study=header["study"],
        digest=header["digest"],
        n=header["n"],
        primes=tuple(header["primes"]),
        records=records,
        summary=summary,
    )


def _diff_values(path: str, a, b, float_tol: float, out: list) -> None:
    if isinstance(a, float) or isinstance(b, float):
        fa, fb = float(a), float(b)
        if not (abs(fa - fb) <= float_tol or (math.isnan(fa) and math.isnan(fb))):
            out.append(f"{path}: {fa} != {fb}")
        return
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                out.append(f"{path}.{k}: present on one side only")
            else:
                _diff_values(f"{path}.{k}", a[k], b[k], float_tol, out)
        return
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            out.append(f"{path}: length {len(a)} != {len(b)}")
            return
        for i, (x, y) in enumerate(zip(a, b)):
            _diff_values(f"{path}[{i}]", x, y, float_tol, out)
        return
    if a != b:
        out.append(f"{path}: {a!r} != {b!r}")


@dataclass
class VerifyReport:
    ok: bool
    digest_ok: bool
    diffs: list


def verify_study(
    path,
    cfg: StudyConfig,
    cache_dir=None,
    float_tol: float = 1e-9,
    log=None,
) -> VerifyReport:
    """Recompute a stored study under its config and compare record-by-record.

    Float fields (spectral values) get an absolute tolerance so a backend
    switch between runs does not count as a mismatch; everything else must
    agree exactly.
    """
    stored = load_study(path)
    digest_ok = stored.digest == cfg.digest()
    fresh = run_induce(cfg, primes=stored.primes, cache_dir=cache_dir, log=log)
    diffs: list = []
    if not digest_ok:
        diffs.append(f"config digest: stored {stored.digest}, current {cfg.digest()}")
    stored_ps = [r["p"] for r in stored.records]
    fresh_ps = [r["p"] for r in fresh.records]
    if stored_ps != fresh_ps:
        diffs.append(f"prime lists differ: {stored_ps} vs {fresh_ps}")
    else:
        for sr, fr in zip(stored.records, fresh.records):
            _diff_values(f"p={sr['p']}", sr, fr, float_tol, diffs)
    return VerifyReport(ok=not diffs, digest_ok=digest_ok, diffs=diffs)
