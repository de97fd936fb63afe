"""Command-line front end: solve, bench, dynamic, pratio.

Reports are JSON or CSV; benchmark records are JSON lines (or CSV rows) with
a fixed column order. Exit codes: 0 converged, 2 non-converged, 1 error.
Fixed seed plus --threads 1 gives byte-identical output files; timing fields
are included only with --timing for that reason.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import sys
import time

import numpy as np

from . import global_solvers as gsol
from . import local_solvers as lsol
from .dynamic import make_pair, parse_events, run_snapshots
from .graph import (CsrGraph, GraphFormatError, GraphStructureError,
                    load_csr_cache, load_edge_list)
from .metrics import (BenchRecord, participation_ratio, sample_sources,
                      speedup_ratio, write_records_csv, write_records_jsonl)
from .reports import report_to_json, write_csv_report
from .systems import (DiffusionSystem, SystemError, default_katz_alpha,
                      make_hk_system, make_katz_system, make_ppr_system)

GLOBAL_METHODS = {"gs", "sor", "gd", "ch"}
LOCAL_METHODS = {"local-gs", "local-sor", "local-gd", "local-ch"}
DEFAULT_TIME_LIMIT = 600.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(1)


def _load_graph(path: str) -> CsrGraph:
    if path.endswith(".csr"):
        return load_csr_cache(path)
    with open(path, "r") as fh:
        return load_edge_list(fh)


def resolve_eps(token: str, g: CsrGraph) -> float:
    """Literal float or one of the symbolic forms 1/n, 1/m, 1/sqrt n."""
    tok = token.strip().lower().replace("(", " ").replace(")", " ")
    tok = " ".join(tok.split())
    if tok == "1/n":
        return 1.0 / g.n
    if tok == "1/m":
        return 1.0 / max(g.m, 1)
    if tok in ("1/sqrt n", "1/sqrtn", "1/sqrt"):
        return 1.0 / math.sqrt(g.n)
    try:
        return float(token)
    except ValueError as exc:
        raise SystemError(f"cannot parse eps {token!r}") from exc


def _resolve_omega(token: str, alpha: float) -> float:
    if token == "auto":
        return lsol.optimal_omega(alpha)
    return float(token)


def _build_system(args, g: CsrGraph, eps: float, source: int,
                  method: str) -> DiffusionSystem:
    if args.problem == "ppr":
        sym = method in ("gd", "ch", "local-gd", "local-ch")
        return make_ppr_system(g, args.alpha, source, eps, symmetrized=sym)
    if args.problem == "katz":
        alpha = args.alpha if args.alpha is not None else default_katz_alpha(g)
        return make_katz_system(g, alpha, source, eps)
    raise SystemError(f"unsupported problem {args.problem}")


def _run_method(method: str, sys_: DiffusionSystem, omega: float,
                max_sweeps: int | None, threads: int):
    if method == "gs":
        return gsol.gauss_seidel(sys_, gsol.GlobalConfig(
            max_sweeps=max_sweeps or gsol.DEFAULT_GLOBAL_SWEEPS))
    if method == "sor":
        return gsol.sor(sys_, gsol.GlobalConfig(
            omega=omega, max_sweeps=max_sweeps or gsol.DEFAULT_GLOBAL_SWEEPS))
    if method == "gd":
        return gsol.gradient_descent(sys_, gsol.GlobalConfig(
            max_sweeps=max_sweeps or gsol.DEFAULT_GLOBAL_SWEEPS))
    if method == "ch":
        return gsol.chebyshev(sys_, gsol.GlobalConfig(
            max_sweeps=max_sweeps or gsol.DEFAULT_GLOBAL_SWEEPS))
    if method == "local-gs":
        return lsol.local_gs(sys_, max_sweeps=max_sweeps or lsol.DEFAULT_MAX_SWEEPS)
    if method == "local-sor":
        return lsol.local_sor(sys_, omega=omega,
                              max_sweeps=max_sweeps or lsol.DEFAULT_MAX_SWEEPS)
    if method == "local-gd":
        return lsol.local_gd(sys_, parallel=threads > 1,
                             max_sweeps=max_sweeps or lsol.DEFAULT_MAX_SWEEPS)
    if method == "local-ch":
        return lsol.local_ch(sys_, max_sweeps=max_sweeps)
    raise SystemError(f"unknown method {method}")


def cmd_solve(args) -> int:
    g = _load_graph(args.graph)
    eps = resolve_eps(args.eps, g)
    if args.problem == "hk":
        if args.method == "gs":
            sys_ = make_hk_system(g, args.tau, args.source, eps)
            state, report = gsol.hk_taylor_global(sys_)
        elif args.method == "local-gs":
            _, report = lsol.local_hk(g, args.tau, args.source, eps,
                                      max_sweeps=args.max_sweeps or lsol.DEFAULT_MAX_SWEEPS)
        else:
            raise SystemError(
                f"heat kernel supports only the Taylor paths (gs, local-gs), not {args.method}")
        report.notes.update(tau=args.tau, source=args.source, eps_token=args.eps)
    else:
        if args.problem == "katz" and args.alpha is None:
            args.alpha = default_katz_alpha(g)
        omega = _resolve_omega(args.omega, args.alpha or 0.5)
        sys_ = _build_system(args, g, eps, args.source, args.method)
        state, report = _run_method(args.method, sys_, omega, args.max_sweeps,
                                    args.threads)
        report.notes.update(alpha=sys_.alpha, omega=omega, source=args.source,
                            eps_token=args.eps)
        if args.method.startswith("local-") and report.converged:
            from .metrics import evaluate_bounds

            report.bound_checks = evaluate_bounds(report, sys_).to_dict()
    _emit_report(report, args)
    return 0 if report.converged else 2


def _emit_report(report, args) -> None:
    if args.format == "csv":
        write_csv_report([report], args.out, timing=args.timing)
    else:
        with open(args.out, "w") as fh:
            fh.write(report_to_json(report, timing=args.timing))
            fh.write("\n")


def _bench_one(task):
    method, args, g, eps, source = task
    sys_ = _build_system(args, g, eps, int(source), method)
    omega = _resolve_omega(args.omega, sys_.alpha)
    t0 = time.perf_counter()
    _, report = _run_method(method, sys_, omega, args.max_sweeps, 1)
    wall = time.perf_counter() - t0
    return BenchRecord(
        graph_id=args.graph, problem=args.problem, method=method,
        eps=eps, source=int(source), total_ops=report.total_ops,
        sweeps=report.sweeps, converged=report.converged,
        wall_seconds=wall, alpha=sys_.alpha,
        omega=omega if "sor" in method else 0.0,
    )


def cmd_bench(args) -> int:
    g = _load_graph(args.graph)
    eps = resolve_eps(args.eps, g)
    if args.problem == "katz" and args.alpha is None:
        args.alpha = default_katz_alpha(g)
    sources = sample_sources(g, args.num_sources, seed=args.seed)
    families = [f.strip() for f in args.methods.split(",") if f.strip()]
    for fam in families:
        if fam not in GLOBAL_METHODS:
            raise SystemError(f"unknown method family {fam}")
    tasks = []
    for fam in families:
        for method in (fam, f"local-{fam}"):
            for s in sources:
                tasks.append((method, args, g, eps, s))
    t0 = time.perf_counter()
    if args.threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.threads) as pool:
            records = list(pool.map(_bench_one, tasks))
    else:
        records = []
        for task in tasks:
            if time.perf_counter() - t0 > args.time_limit:
                raise SystemError(f"time limit {args.time_limit}s exceeded")
            records.append(_bench_one(task))
    if args.format == "csv":
        write_records_csv(records, args.out, timing=args.timing)
    else:
        write_records_jsonl(records, args.out, timing=args.timing)
    by_method: dict[str, list[BenchRecord]] = {}
    for rec in records:
        by_method.setdefault(rec.method, []).append(rec)
    summary = {}
    for fam in families:
        try:
            summary[f"{fam}/local-{fam}"] = speedup_ratio(
                by_method[fam], by_method[f"local-{fam}"])
        except (KeyError, ValueError):
            summary[f"{fam}/local-{fam}"] = None
    print(json.dumps({"speedup": summary, "sources": len(sources)}, sort_keys=True))
    return 0 if all(r.converged for r in records) else 2


def cmd_dynamic(args) -> int:
    g = _load_graph(args.graph)
    eps = resolve_eps(args.eps, g)
    with open(args.events) as fh:
        batches = parse_events(fh)
    omega = _resolve_omega(args.omega, args.alpha)
    modes = ["dynamic", "static"] if args.compare else [args.mode]
    rows = []
    t0 = time.perf_counter()
    for mode in modes:
        if time.perf_counter() - t0 > args.time_limit:
            raise SystemError(f"time limit {args.time_limit}s exceeded")
        pair0 = make_pair(g, args.alpha, eps, args.source, omega=omega)
        reports, _, _ = run_snapshots(g, batches, pair0, mode=mode)
        for rep in reports:
            rows.append({
                "mode": mode,
                "snapshot": rep.notes["snapshot"],
                "total_ops": rep.total_ops,
                "ops_accumulated": rep.notes["ops_accumulated"],
                "sweeps": rep.sweeps,
                "converged": rep.converged,
                "eps": eps,
            })
    with open(args.out, "w") as fh:
        if args.format == "csv":
            cols = ["mode", "snapshot", "total_ops", "ops_accumulated",
                    "sweeps", "converged", "eps"]
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(str(row[c]) for c in cols) + "\n")
        else:
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
    return 0 if all(r["converged"] for r in rows) else 2


def cmd_pratio(args) -> int:
    g = _load_graph(args.graph)
    if args.vector == "basis":
        ratios = [1.0 / g.n]
    elif args.vector == "uniform":
        ratios = [participation_ratio(np.full(g.n, 1.0 / g.n))]
    else:
        eps = resolve_eps(args.eps, g) if args.eps else 1e-10 / max(g.m, 1)
        sources = sample_sources(g, args.num_sources, seed=args.seed)
        ratios = []
        t0 = time.perf_counter()
        for s in sources:
            if time.perf_counter() - t0 > args.time_limit:
                raise SystemError(f"time limit {args.time_limit}s exceeded")
            if args.problem == "hk":
                f_hat, _ = lsol.local_hk(g, args.tau, int(s), eps)
            else:
                if args.problem == "katz" and args.alpha is None:
                    args.alpha = default_katz_alpha(g)
                sys_ = _build_system(args, g, eps, int(s), "local-gs")
                state, _ = lsol.local_gs(sys_)
                f_hat = sys_.back_transform(state.x)
            ratios.append(participation_ratio(f_hat))
    summary = {
        "Min": float(np.min(ratios)),
        "Mean": float(np.mean(ratios)),
        "Median": float(np.median(ratios)),
        "Max": float(np.max(ratios)),
    }
    with open(args.out, "w") as fh:
        if args.format == "csv":
            fh.write("Min,Mean,Median,Max\n")
            fh.write("{Min},{Mean},{Median},{Max}\n".format(**summary))
        else:
            fh.write(json.dumps({"ratios": ratios, "summary": summary},
                                sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graphdiff",
                     description="Local and global solvers for graph diffusion equations")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--graph", required=True, help="edge list or .csr cache path")
        p.add_argument("--eps", default="1/n", help="float or 1/n, 1/m, '1/sqrt n'")
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--tau", type=float, default=10.0)
        p.add_argument("--omega", default="1.0", help="float or 'auto' for omega*")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--max-sweeps", type=int, default=None)
        p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
        p.add_argument("--out", default="report.json")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--timing", action="store_true",
                       help="include wall-clock fields (breaks byte-determinism)")

    p_solve = sub.add_parser("solve", help="solve one instance")
    common(p_solve)
    p_solve.add_argument("--problem", choices=["ppr", "katz", "hk"], required=True)
    p_solve.add_argument("--method", required=True,
                         choices=sorted(GLOBAL_METHODS | LOCAL_METHODS))
    p_solve.add_argument("--source", type=int, required=True)
    p_solve.set_defaults(func=cmd_solve)

    p_bench = sub.add_parser("bench", help="paired global/local benchmark sweep")
    common(p_bench)
    p_bench.add_argument("--problem", choices=["ppr", "katz"], required=True)
    p_bench.add_argument("--methods", default="gs,sor,gd,ch",
                         help="comma-separated families out of gs,sor,gd,ch")
    p_bench.add_argument("--num-sources", type=int, default=50)
    p_bench.set_defaults(func=cmd_bench)

    p_dyn = sub.add_parser("dynamic", help="snapshot experiment over edge events")
    common(p_dyn)
    p_dyn.add_argument("--events", required=True)
    p_dyn.add_argument("--source", type=int, required=True)
    p_dyn.add_argument("--mode", choices=["dynamic", "static"], default="dynamic")
    p_dyn.add_argument("--compare", action="store_true",
                       help="run both modes and emit both series")
    p_dyn.set_defaults(func=cmd_dynamic)

    p_pr = sub.add_parser("pratio", help="participation ratios over sampled sources")
    common(p_pr)
    p_pr.add_argument("--problem", choices=["ppr", "katz", "hk"], default="ppr")
    p_pr.add_argument("--num-sources", type=int, default=50)
    p_pr.add_argument("--vector", choices=["basis", "uniform"], default=None,
                      help="bypass modes with known exact ratios")
    p_pr.set_defaults(func=cmd_pratio, eps=None)  # default resolves to 1e-10/m
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    if getattr(args, "alpha", None) is None and getattr(args, "problem", "") == "ppr":
        args.alpha = 0.1
    if getattr(args, "command", "") == "dynamic" and args.alpha is None:
        args.alpha = 0.1
    try:
        return args.func(args)
    except (GraphFormatError, GraphStructureError, SystemError, ValueError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
