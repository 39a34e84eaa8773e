"""Command-line surface: solve, bound, generate, bench, check.

Reports are JSON (self-validating: the selection is included so f(x) can be
recomputed from the instance file), instances are plain text, benchmark
tables are CSV.  Exit codes: 0 solved to optimality, 1 bad input, 2 time
limit reached.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, bnb, bundle, generator, oracle, relaxation
from .heuristics import primal_heuristic
from .instance import Instance, InstanceError, load, preprocess, validate

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_TIME_LIMIT = 2


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--time-limit", type=float, default=10800.0, metavar="S",
                   help="wall-clock limit in seconds (default 3 hours)")
    p.add_argument("--tol", type=float, default=1e-7,
                   help="interior-point relative gap tolerance at the root")
    p.add_argument("--cuts-m", type=int, default=None, metavar="M",
                   help="triangle cuts added per pool update (default min(5n, 300))")
    p.add_argument("--cut-update-period", type=int, default=5, metavar="P",
                   help="descent steps between cut pool updates")
    p.add_argument("--gamma-drop", type=float, default=1e-5,
                   help="multiplier threshold below which cuts are dropped")
    p.add_argument("--bnp-node-k", type=int, default=5, metavar="K",
                   help="switch to branch-and-prune when node cardinality <= K")
    p.add_argument("--bnp-root-k", type=int, default=10, metavar="K",
                   help="solve the whole instance by branch-and-prune when k <= K")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes for bench (default KQKP_THREADS or 1)")
    p.add_argument("--trace-dir", type=Path, default=None,
                   help="write per-instance node trace CSVs into this directory")
    p.add_argument("--output", "-o", type=Path, default=None,
                   help="also write the JSON report to this path")


def _config_from_args(args) -> bnb.SolverConfig:
    return bnb.SolverConfig(
        time_limit_s=args.time_limit,
        ipm_tol_root=args.tol,
        ipm_tol_node=max(args.tol, 1e-5),
        cuts_per_update=args.cuts_m,
        gamma_drop=args.gamma_drop,
        cut_update_period=args.cut_update_period,
        bnp_node_k=args.bnp_node_k,
        bnp_root_k=args.bnp_root_k,
        threads=_threads(args),
        trace=args.trace_dir is not None,
    )


def _threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, args.threads)
    env = os.environ.get("KQKP_THREADS")
    return max(1, int(env)) if env else 1


def _config_echo(cfg: bnb.SolverConfig) -> dict:
    return {
        "time_limit_s": cfg.time_limit_s,
        "ipm_tol_root": cfg.ipm_tol_root,
        "ipm_tol_node": cfg.ipm_tol_node,
        "cuts_per_update": cfg.cuts_per_update,
        "gamma_drop": cfg.gamma_drop,
        "cut_update_period": cfg.cut_update_period,
        "bnp_node_k": cfg.bnp_node_k,
        "bnp_root_k": cfg.bnp_root_k,
        "use_cuts": cfg.use_cuts,
        "threads": cfg.threads,
    }


def _load_validated(path) -> Instance:
    inst = load(path)
    return validate(inst)


def _emit(payload: dict, out_path: Path | None) -> None:
    text = json.dumps(payload, indent=2)
    print(text)
    if out_path is not None:
        out_path.write_text(text + "\n")


def _solve_payload(path: Path, cfg: bnb.SolverConfig) -> tuple[dict, bnb.SolveReport]:
    inst = _load_validated(path)
    report = bnb.solve(inst, cfg)
    status = {"optimal": "Optimal", "time_limit": "TimeLimit",
              "infeasible": "Infeasible"}[report.status]
    payload = {
        "instance": str(path),
        "status": status,
        "value": None if report.best is None else report.best.value,
        "selection": None if report.best is None
        else [int(i) for i in np.nonzero(report.best.x)[0]],
        "incumbent_source": None if report.best is None else report.best.source,
        "root_bound": None if not np.isfinite(report.root_bound) else report.root_bound,
        "root_gap_percent": report.root_gap_percent,
        "nodes": report.nodes,
        "evals": report.evals,
        "time_ms": report.time_ms,
        "config": _config_echo(cfg),
        "version": __version__,
    }
    return payload, report


def _write_trace(trace_dir: Path, path: Path, report: bnb.SolveReport) -> None:
    trace_dir.mkdir(parents=True, exist_ok=True)
    out = trace_dir / (Path(path).stem + "_trace.csv")
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["depth", "fixed_ones", "bound", "action"])
        w.writerows(report.node_trace)


def cmd_solve(args) -> int:
    payload, report = _solve_payload(args.path, _config_from_args(args))
    if args.trace_dir is not None:
        _write_trace(args.trace_dir, args.path, report)
    _emit(payload, args.output)
    return EXIT_TIME_LIMIT if report.status == bnb.STATUS_TIME_LIMIT else EXIT_OK


def cmd_bound(args) -> int:
    cfg = _config_from_args(args)
    inst = _load_validated(args.path)
    prep = preprocess(inst)
    t0 = time.perf_counter()
    if prep.status != "solvable":
        # nothing to relax; the bound equals the (trivial) optimum
        val = prep.trivial_value if prep.status == "trivial_k1" else float("-inf")
        payload = {"instance": str(args.path), "mode": args.mode,
                   "bound": val, "evals": 0,
                   "time_ms": int(1000 * (time.perf_counter() - t0)),
                   "version": __version__}
        _emit(payload, args.output)
        return EXIT_OK
    padded_inst, _ = relaxation.ensure_projectable(inst)
    data = relaxation.build(padded_inst, preprocess(padded_inst))
    bcfg = cfg.bundle_config(root=True)
    if args.mode == "sdp":
        bcfg.max_evals = 1
    res = bundle.minimize(data, float("-inf"), bcfg)
    payload = {
        "instance": str(args.path),
        "mode": args.mode,
        "bound": res.bound,
        "evals": res.evals,
        "time_ms": int(1000 * (time.perf_counter() - t0)),
        "version": __version__,
    }
    _emit(payload, args.output)
    return EXIT_OK


def cmd_generate(args) -> int:
    spec = generator.GenSpec(n=args.n, density_percent=args.density, seed=args.seed)
    inst = generator.generate(spec)
    out_dir = args.out_dir or Path(".")
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / generator.filename(spec)
    from .instance import dump
    dump(inst, path)
    print(path)
    return EXIT_OK


_NAME_RE = re.compile(r"kqkp_n(\d+)_d(\d+)_s\d+")


def _bench_meta(path: Path, inst: Instance) -> tuple[int, int]:
    m = _NAME_RE.match(path.stem)
    if m:
        return int(m.group(1)), int(m.group(2))
    n = inst.n
    upper = n * (n + 1) // 2
    nz = int(np.count_nonzero(np.triu(inst.C)))
    return n, round(100.0 * nz / upper)


def _bench_one(path_str: str, cfg: bnb.SolverConfig) -> tuple:
    path = Path(path_str)
    inst = _load_validated(path)
    report = bnb.solve(inst, cfg)
    n, delta = _bench_meta(path, inst)
    # coarse rounding keeps the table reproducible across runs
    return (n, delta, round(report.root_gap_percent, 4),
            round(report.time_ms / 1000.0, 1), report.nodes)


def cmd_bench(args) -> int:
    cfg = _config_from_args(args)
    paths = sorted(str(p) for p in Path(args.dir).glob("*.txt"))
    if cfg.threads > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(_bench_one, paths, [cfg] * len(paths)))
    else:
        rows = [_bench_one(p, cfg) for p in paths]
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["n", "delta", "gap_root_percent", "time_s", "nodes"])
    w.writerows(rows)
    text = buf.getvalue()
    sys.stdout.write(text)
    if args.output is not None:
        args.output.write_text(text)
    return EXIT_OK


def cmd_check(args) -> int:
    inst = _load_validated(args.path)
    if inst.n > 24:
        print(f"error: oracle check limited to n <= 24, got n = {inst.n}",
              file=sys.stderr)
        return EXIT_BAD_INPUT
    cfg = _config_from_args(args)
    opt = oracle.enumerate_exact(inst)
    report = bnb.solve(inst, cfg)
    solver_value = None if report.best is None else report.best.value
    payload = {
        "instance": str(args.path),
        "oracle_value": opt.value,
        "solver_value": solver_value,
        "match": solver_value == opt.value,
        "version": __version__,
    }
    _emit(payload, args.output)
    if report.status == bnb.STATUS_TIME_LIMIT:
        return EXIT_TIME_LIMIT
    return EXIT_OK if payload["match"] else EXIT_BAD_INPUT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kqkp",
        description="Exact solver for the k-item quadratic knapsack problem",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance file to optimality")
    p.add_argument("path", type=Path)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bound", help="compute the root bound only")
    p.add_argument("path", type=Path)
    p.add_argument("--mode", choices=["sdp", "sdpmet"], default="sdpmet",
                   help="plain relaxation or triangle-cut strengthened")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("generate", help="write a random instance file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--density", type=int, required=True, choices=[25, 50, 75, 100])
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", type=Path, default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="solve every *.txt in a directory, emit CSV")
    p.add_argument("dir", type=Path)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("check", help="compare against brute-force enumeration")
    p.add_argument("path", type=Path)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
