"""Command-line entry point.

Subcommands slice the pipeline: ``enumerate`` and ``spectrum`` stop at group
orders and walk spectra, ``liegen`` at lattices and conjugator selection,
``cover`` and ``grades`` at the set-level certificates, while ``induce``
runs everything and writes an SGIC1 archive that ``verify`` can recompute
and compare.

Exit codes: 0 when every requested prime produced a record (induce) or the
comparison matched (verify); 1 otherwise; argparse uses 2 for usage errors.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import _kernels
from .charts import ChartConfig, chart_floor
from .coverage import fold_cover_check, greedy_conjugators_modp
from .errors import EmptyChartLayer
from .exact import reduce_mod
from .pipeline import (
    StudyConfig,
    persist_study,
    prepare_prime,
    run_induce,
    verify_study,
)
from .saturation import grade_basis_from_words, lie_lattice_from_words, select_conjugators
from .spectral import AveragingOperator, lambda_of
from .words import word_stream


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument(
        "--config",
        required=True,
        help="study YAML path, or a catalog name (sl2_in_sl2, sl2_in_sl3, central_counterexample)",
    )
    sp.add_argument("--primes", help="comma-separated primes overriding the study list")
    sp.add_argument(
        "--cache",
        help="group-table cache directory (default: $SPECGAP_CACHE_DIR)",
    )
    sp.add_argument(
        "--threads",
        type=int,
        help="kernel thread count (default: $SPECGAP_THREADS)",
    )
    sp.add_argument("--tol", type=float, help="override the study tolerance")
    sp.add_argument(
        "--max-elements", type=int, help="override the enumeration budget"
    )


def _load_config(arg: str) -> StudyConfig:
    path = Path(arg)
    if path.exists():
        return StudyConfig.from_yaml(path)
    if arg.endswith(".yaml") or "/" in arg:
        raise SystemExit(f"config file not found: {arg}")
    try:
        return StudyConfig.from_catalog(arg)
    except FileNotFoundError:
        raise SystemExit(f"no such config file or catalog study: {arg}")


def _resolve(args):
    cfg = _load_config(args.config)
    primes = (
        [int(x) for x in args.primes.split(",")] if args.primes else list(cfg.primes)
    )
    cache = args.cache or os.environ.get("SPECGAP_CACHE_DIR") or None
    threads = args.threads
    if threads is None and os.environ.get("SPECGAP_THREADS"):
        threads = int(os.environ["SPECGAP_THREADS"])
    if threads is not None:
        _kernels.set_threads(threads)
    tol = args.tol if args.tol is not None else cfg.tolerance
    budget = args.max_elements if args.max_elements is not None else cfg.max_elements
    return cfg, sorted(set(primes)), cache, tol, budget


def _skip_line(cfg: StudyConfig, p: int) -> str | None:
    if cfg.q0 % p == 0:
        return f"p={p}: skipped (divides denominator support {cfg.q0})"
    return None


def cmd_enumerate(args) -> int:
    cfg, primes, cache, _tol, budget = _resolve(args)
    for p in primes:
        skip = _skip_line(cfg, p)
        if skip:
            print(skip)
            continue
        ctx = prepare_prime(cfg, p, budget, cache)
        print(
            f"p={p}: |G1|={ctx.g1.size} |H|={ctx.h_handle.size} "
            f"index={ctx.g1.size // max(1, ctx.h_handle.size)}"
        )
    return 0


def cmd_spectrum(args) -> int:
    cfg, primes, cache, tol, budget = _resolve(args)
    for p in primes:
        skip = _skip_line(cfg, p)
        if skip:
            print(skip)
            continue
        ctx = prepare_prime(cfg, p, budget, cache)
        from .groups import enumerate_group

        h_gens = [ctx.g1.matrix(i) for i in ctx.o2_ids]
        h_table = enumerate_group(h_gens, budget=budget)
        sub = lambda_of(
            AveragingOperator(h_table, sorted({h_table.id_of(g) for g in h_gens}))
        )
        amb = lambda_of(AveragingOperator(ctx.g1, ctx.o1_ids))
        print(
            f"p={p}: lambda_sub={sub.lam:.12f} ({sub.method}, bipartite={sub.bipartite}) "
            f"lambda_ambient={amb.lam:.12f} ({amb.method}) gap_sub={1 - sub.lam:.6f} tol={tol}"
        )
    return 0


def cmd_liegen(args) -> int:
    cfg, primes, _cache, _tol, _budget = _resolve(args)
    for p in primes:
        skip = _skip_line(cfg, p)
        if skip:
            print(skip)
            continue
        c_p = max(cfg.chart_c, chart_floor(p))
        n_p = max(cfg.chart_n, c_p + 1)
        chart = ChartConfig(p, n_p, c_p)
        o1 = [nm.matrix for nm in cfg.omega1]
        o2 = [nm.matrix for nm in cfg.omega2]
        try:
            m0 = lie_lattice_from_words(
                o2, chart, word_budget=cfg.word_budget, max_len=cfg.word_length
            )
        except EmptyChartLayer:
            from .saturation import SpanLattice

            m0 = SpanLattice.from_vectors([], p, n_p, cfg.n * cfg.n)
        ambient = lie_lattice_from_words(
            o1, chart, word_budget=cfg.word_budget, max_len=cfg.word_length
        )
        sat = select_conjugators(
            m0,
            ambient,
            word_stream(o1, cfg.word_length, include_identity=False, max_words=cfg.candidate_cap),
            cfg.max_conjugators,
        )
        print(
            f"p={p}: rank(M0)={m0.rank} divisors={m0.divisors} "
            f"rank(ambient)={ambient.rank} chosen={list(sat.labels)} "
            f"trail={list(sat.rank_trail)} stalled={sat.stalled}"
        )
    return 0


def cmd_cover(args) -> int:
    cfg, primes, cache, _tol, budget = _resolve(args)
    for p in primes:
        skip = _skip_line(cfg, p)
        if skip:
            print(skip)
            continue
        ctx = prepare_prime(cfg, p, budget, cache)
        cand_ids = []
        seen = set()
        for w in word_stream(
            [nm.matrix for nm in cfg.omega1],
            cfg.word_length,
            include_identity=False,
            max_words=4 * cfg.candidate_cap,
        ):
            cid = ctx.g1.id_of(reduce_mod(w.matrix, p))
            if cid > 0 and cid not in seen:
                seen.add(cid)
                cand_ids.append(cid)
            if len(cand_ids) >= cfg.candidate_cap:
                break
        cert = greedy_conjugators_modp(
            ctx.g1, ctx.h_handle, cand_ids, max_factors=cfg.max_factors
        )
        fold = fold_cover_check(ctx.g1, ctx.h_handle, cert.conjugator_ids, cfg.fold_cmax)
        print(
            f"p={p}: covered={cert.covered} stalled={cert.stalled} "
            f"factors={len(cert.factor_ids)} conjugators={len(cert.conjugator_ids)} "
            f"sizes={list(cert.sizes)} fold_C={fold.c}"
        )
    return 0


def cmd_grades(args) -> int:
    cfg, primes, _cache, _tol, _budget = _resolve(args)
    for p in primes:
        skip = _skip_line(cfg, p)
        if skip:
            print(skip)
            continue
        g1_gb, _ = grade_basis_from_words(
            [nm.matrix for nm in cfg.omega1],
            p,
            cfg.grade_k,
            word_budget=cfg.word_budget,
            max_len=cfg.word_length,
        )
        g2_gb, _ = grade_basis_from_words(
            [nm.matrix for nm in cfg.omega2],
            p,
            cfg.grade_k,
            word_budget=cfg.word_budget,
            max_len=cfg.word_length,
        )
        print(
            f"p={p}: grade{cfg.grade_k} dim(ambient)={len(g1_gb)} dim(sub)={len(g2_gb)}"
        )
    return 0


def cmd_induce(args) -> int:
    cfg, primes, cache, tol, budget = _resolve(args)
    cert = run_induce(
        cfg,
        primes=primes,
        cache_dir=cache,
        tol=tol,
        max_elements=budget,
        log=lambda msg: print(msg, file=sys.stderr),
    )
    out = args.out or f"{cfg.study}.sgic1"
    persist_study(cert, out)
    print(f"wrote {out} ({len(cert.records)} prime records)")
    for rec in cert.records:
        line = f"p={rec['p']}: {rec['status']}"
        if rec["status"] == "ok":
            line += f" induced={rec['induced']}"
            if rec["failed_checks"]:
                line += f" failed_checks={rec['failed_checks']}"
        elif rec["status"] == "failed":
            line += f" error={rec.get('error')}"
        print(line)
    recorded = {rec["p"] for rec in cert.records}
    return 0 if recorded == set(primes) else 1


def cmd_verify(args) -> int:
    cfg, _primes, cache, _tol, _budget = _resolve(args)
    report = verify_study(args.study, cfg, cache_dir=cache)
    if report.ok:
        print(f"verified: {args.study} reproduces under the current build")
        return 0
    print(f"mismatch: {len(report.diffs)} differences")
    for d in report.diffs[:40]:
        print(f"  {d}")
    if len(report.diffs) > 40:
        print(f"  ... and {len(report.diffs) - 40} more")
    return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="specgap",
        description="spectral gap induction certificates for matrix group reductions",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    commands = {
        "enumerate": (cmd_enumerate, "group and subgroup orders per prime"),
        "spectrum": (cmd_spectrum, "walk spectra of both generating sets"),
        "liegen": (cmd_liegen, "congruence-layer lattices and conjugator selection"),
        "cover": (cmd_cover, "greedy conjugated-copy cover and fold count"),
        "grades": (cmd_grades, "grade-space dimensions at the study level"),
        "induce": (cmd_induce, "full pipeline; writes an SGIC1 archive"),
        "verify": (cmd_verify, "recompute an SGIC1 archive and compare"),
    }
    for name, (fn, help_text) in commands.items():
        sp = sub.add_parser(name, help=help_text)
        _add_common(sp)
        if name == "induce":
            sp.add_argument("--out", help="archive path (default <study>.sgic1)")
        if name == "verify":
            sp.add_argument("study", help="SGIC1 archive to verify")
        sp.set_defaults(fn=fn)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
