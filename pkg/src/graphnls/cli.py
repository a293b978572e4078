"""Command-line entry point: ``graphnls <command> [options]``.

Exit codes: 0 success, 2 invalid input, 3 a solver did not converge (unless
``--allow-nonconverged``).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import baselines
from .action import multistart_action
from .config import SolverConfig
from .energy import UnboundedBelowError, multistart_energy
from .graph import GraphError, MetricGraph, build_named
from .invariants import VERIFY_POWERS, check_all
from .io import RunManifest, load_graph_json, save_results, write_csv, write_json
from .sweep import (
    find_inversion,
    find_z_points,
    mass_window,
    parse_grid,
    trace_action_branch,
    trace_energy_branch,
    z_point_refined,
)

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED = 0, 2, 3

log = logging.getLogger("graphnls")


class InputError(Exception):
    pass


def _lengths(text: str | None) -> list[float]:
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InputError(f"--lengths must be comma-separated numbers, got {text!r}") from None


def _graph(args) -> tuple[MetricGraph, dict]:
    source = args.graph
    if source.endswith(".json") or Path(source).is_file():
        g = load_graph_json(source)
        if args.trunc is not None:
            g = g.with_truncation(args.trunc)
        return g, {"path": str(source), "trunc": args.trunc}
    params = _lengths(args.lengths)
    return build_named(source, params, trunc=args.trunc), {"name": source, "params": params, "trunc": args.trunc}


def _config(args) -> SolverConfig:
    kw = {"target_h": args.h, "restarts": args.restarts, "seed": args.seed}
    if args.max_iters is not None:
        kw["max_iters"] = args.max_iters
    return SolverConfig(**kw)


def _manifest(args, graph_spec, cfg, argv) -> RunManifest:
    return RunManifest(
        command=args.command,
        graph=graph_spec,
        p=getattr(args, "p", None),
        grid=getattr(args, "grid", None),
        config=cfg.to_dict(),
        seed=args.seed,
        argv=list(argv),
    )


def _out(args) -> Path:
    return Path(args.out)


def _need(args, *names):
    for n in names:
        if getattr(args, n, None) is None:
            raise InputError(f"--{n.replace('_', '-')} is required for {args.command}")
    if getattr(args, "p", None) is not None and not args.p > 2:
        raise InputError(f"--p must exceed 2, got {args.p}")
    if getattr(args, "mu", None) is not None and not args.mu > 0:
        raise InputError(f"--mu must be positive, got {args.mu}")


def _grid(args) -> np.ndarray:
    _need(args, "grid")
    try:
        return parse_grid(args.grid)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _finish(args, converged: bool) -> int:
    if converged or args.allow_nonconverged:
        return EXIT_OK
    print("solver did not converge (use --allow-nonconverged to accept)", file=sys.stderr)
    return EXIT_NONCONVERGED


# ------------------------------------------------------------------ commands


def cmd_baselines(args, argv) -> int:
    table = baselines.constants_table()
    width = max(map(len, table))
    for k, v in table.items():
        print(f"{k:<{width}}  {v!r}")
    if args.out:
        out = _out(args)
        out.mkdir(parents=True, exist_ok=True)
        write_csv([{"name": k, "value": v} for k, v in table.items()], out / "summary.csv")
        m = RunManifest("baselines", {}, None, None, SolverConfig().to_dict(), args.seed, list(argv))
        (out / "manifest.json").write_text(m.to_json())
    return EXIT_OK


def cmd_solve_energy(args, argv) -> int:
    _need(args, "p", "mu")
    g, source = _graph(args)
    cfg = _config(args)
    man = _manifest(args, source, cfg, argv)
    try:
        res = multistart_energy(g, args.p, args.mu, cfg)
    except UnboundedBelowError as exc:
        summary = {"status": "unbounded_below", "mass": args.mu, "p": args.p, "message": str(exc)}
        print(json.dumps(summary, indent=2))
        save_results([summary], man, _out(args), {"result": summary})
        return EXIT_OK
    best = res.best
    summary = {
        "status": "ok" if best.converged else "nonconverged",
        **best.summary(),
        "lambda_minus": res.lambda_minus,
        "lambda_plus": res.lambda_plus,
        "n_near_optimal": len(res.near_optimal),
    }
    print(json.dumps(summary, indent=2))
    save_results([r.summary() for r in res.records], man, _out(args), {"result": summary})
    best.state.to_csv(_out(args) / "state.csv")
    return _finish(args, best.converged)


def cmd_solve_action(args, argv) -> int:
    _need(args, "p", "lam")
    if not args.lam > 0:
        raise InputError("--lambda must be positive")
    g, source = _graph(args)
    cfg = _config(args)
    man = _manifest(args, source, cfg, argv)
    res = multistart_action(g, args.p, args.lam, cfg)
    best = res.best
    summary = {
        "status": "ok" if best.converged else "nonconverged",
        **best.summary(),
        "m_minus": res.m_minus,
        "m_plus": res.m_plus,
        "n_near_optimal": len(res.near_optimal),
    }
    print(json.dumps(summary, indent=2))
    save_results([r.summary() for r in res.records], man, _out(args), {"result": summary})
    best.state.to_csv(_out(args) / "state.csv")
    return _finish(args, best.converged)


def _table_out(args, table, man, extra=None) -> None:
    save_results(table.rows(), man, _out(args), {"table_meta": table.metadata(), **(extra or {})})
    for row in table.rows():
        print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))


def cmd_trace_lambda(args, argv) -> int:
    _need(args, "p")
    grid = _grid(args)
    g, source = _graph(args)
    cfg = _config(args)
    table = trace_action_branch(g, args.p, grid, cfg, fd_delta=args.fd_delta)
    _table_out(args, table, _manifest(args, source, cfg, argv))
    return _finish(args, all(pt.ok for pt in table.points))


def cmd_trace_mass(args, argv) -> int:
    _need(args, "p")
    grid = _grid(args)
    g, source = _graph(args)
    cfg = _config(args)
    table = trace_energy_branch(g, args.p, grid, cfg)
    _table_out(args, table, _manifest(args, source, cfg, argv))
    # unbounded-below points are an answer, not a failure
    return _finish(args, all(pt.ok or pt.flag == "unbounded_below" for pt in table.points))


def cmd_detect_inversion(args, argv) -> int:
    _need(args, "p")
    grid = _grid(args)
    g, source = _graph(args)
    cfg = _config(args)
    table = trace_action_branch(g, args.p, grid, cfg)
    w = find_inversion(table, args.margin)
    again = None
    if w is not None:
        again = find_inversion(trace_action_branch(g, args.p, grid, cfg.halved()))
    result = {
        "witness": None if w is None else {**w.__dict__, "gap": w.gap},
        "stable_under_tolerance_halving": again is not None,
        "witness_halved": None if again is None else {**again.__dict__, "gap": again.gap},
    }
    _table_out(args, table, _manifest(args, source, cfg, argv), {"inversion": result})
    print(json.dumps(result, indent=2))
    return _finish(args, all(pt.ok for pt in table.points) or w is not None)


def cmd_detect_z(args, argv) -> int:
    _need(args, "p")
    if not 2 < args.p < 6:
        raise InputError("detect-z needs 2 < p < 6")
    g, source = _graph(args)
    cfg = _config(args)
    masses = None
    if args.window:
        try:
            lo, hi = (float(x) for x in args.window.split(":"))
        except ValueError:
            raise InputError(f"--window must be lo:hi, got {args.window!r}") from None
        rows = []
    else:
        table = trace_action_branch(g, args.p, _grid(args), cfg)
        lo, hi = mass_window(table)
        masses = table.column("minus")
        rows = table.rows()
    found = find_z_points(g, args.p, (lo, hi), cfg, masses=masses)
    report = []
    for w in found:
        item = {"witness": w.__dict__}
        if args.refine:
            fine = z_point_refined(g, w, cfg)
            item["refined"] = None if fine is None else fine.__dict__
        report.append(item)
    result = {"window": [lo, hi], "z_points": report}
    save_results(rows, _manifest(args, source, cfg, argv), _out(args), {"z_points": result})
    print(json.dumps(result, indent=2, default=str))
    return EXIT_OK


def cmd_verify(args, argv) -> int:
    if args.manifest:
        return _rerun(args)
    g, source = _graph(args)
    powers = [args.p] if args.p is not None else list(VERIFY_POWERS)
    rows = []
    for p in powers:
        for r in check_all(g, p, args.h, args.seed):
            rows.append({"check": r.name, "graph": r.graph, "p": r.p, "error": r.error, "tol": r.tol, "ok": r.ok})
            print(f"{'PASS' if r.ok else 'FAIL'}  {r.name:<20} p={p:<4g} error={r.error:.3e} tol={r.tol:.0e}")
    cfg = SolverConfig(target_h=args.h, seed=args.seed)
    if args.out:
        save_results(rows, _manifest(args, source, cfg, argv), _out(args))
    return EXIT_OK if all(r["ok"] for r in rows) else 1


def _rerun(args) -> int:
    """Rerun the command stored in a manifest and compare summaries byte for byte."""
    path = Path(args.manifest)
    man = RunManifest.load(path)
    src = path.parent / "summary.csv"
    with_out = _replace_out(man.argv, args.out)
    code = main(with_out)
    same = (Path(args.out) / "summary.csv").read_bytes() == src.read_bytes()
    print(f"summary reproduced: {same}")
    return code if same else 1


def _replace_out(argv: list[str], out: str) -> list[str]:
    argv = list(argv)
    if "--out" in argv:
        argv[argv.index("--out") + 1] = out
    else:
        argv += ["--out", out]
    return argv


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", default="segment", help="named graph, e.g. star(3), or a JSON file")
    common.add_argument("--lengths", help="comma-separated bounded edge lengths for named graphs")
    common.add_argument("--trunc", type=float, help="half-line truncation length")
    common.add_argument("--p", type=float, help="nonlinearity power, p > 2")
    common.add_argument("--h", type=float, default=0.05, help="target mesh spacing")
    common.add_argument("--restarts", type=int, default=3, help="random restarts per solve")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-iters", type=int, dest="max_iters")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--grid", help="start:stop:count[:log]")
    common.add_argument("--allow-nonconverged", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="graphnls", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    b = sub.add_parser("baselines", parents=[common], help="print closed-form constants")
    b.set_defaults(func=cmd_baselines, out=None)
    s = sub.add_parser("solve-energy", parents=[common], help="energy ground state at fixed mass")
    s.add_argument("--mu", type=float)
    s.set_defaults(func=cmd_solve_energy)
    s = sub.add_parser("solve-action", parents=[common], help="action ground state at fixed frequency")
    s.add_argument("--lambda", type=float, dest="lam")
    s.set_defaults(func=cmd_solve_action)
    s = sub.add_parser("trace-lambda", parents=[common], help="M-/M+ along a frequency grid")
    s.add_argument("--fd-delta", type=float, dest="fd_delta")
    s.set_defaults(func=cmd_trace_lambda)
    s = sub.add_parser("trace-mass", parents=[common], help="Lambda-/Lambda+ along a mass grid")
    s.set_defaults(func=cmd_trace_mass)
    s = sub.add_parser("detect-inversion", parents=[common], help="search a frequency grid for M-(l1) > M+(l2)")
    s.add_argument("--margin", type=float)
    s.set_defaults(func=cmd_detect_inversion)
    s = sub.add_parser("detect-z", parents=[common], help="search for masses with two ground-state multipliers")
    s.add_argument("--window", help="mass window lo:hi (default: from an action trace on --grid)")
    s.add_argument("--refine", action="store_true", help="re-detect each witness with half the mesh spacing")
    s.set_defaults(func=cmd_detect_z)
    s = sub.add_parser("verify", parents=[common], help="invariant suite, or rerun a manifest")
    s.add_argument("--manifest", help="manifest.json of an earlier run to reproduce")
    s.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args, argv)
    except (InputError, GraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
