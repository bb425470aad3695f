"""Command-line front end.

Subcommands mirror the experiment runner: `metropolis` and
`solve-central` emit single weight matrices, `run-admm` drives the
distributed engine on one graph, and `run-fixed` / `run-live` /
`run-sweep` reproduce the three study designs. Graphs come from a file
(`--graph`) or a seeded random draw (`--er n,p,seed`).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .admm import AdmmConfig, run_until_stop, write_trace_csv
from .centralized import minimize_convergence_factor
from .consensus import LiveEvent
from .graph import er_random, read_graph
from .harness import (ExperimentSpec, run_fixed, run_live, run_sweep,
                      write_fixed_outputs, write_json_report, write_sweep_csv,
                      write_trajectory_csv)
from .weights import assemble_from_rows, convergence_factor, metropolis, \
    save_weight_csv

__all__ = ["main"]


def _parse_er(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--er expects n,p,seed")
    return int(parts[0]), float(parts[1]), int(parts[2])


def _add_graph_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--graph", help="path to a graph file")
    src.add_argument("--er", type=_parse_er, metavar="N,P,SEED",
                     help="random graph: node count, edge probability, seed")


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", type=float, default=1.0 / 16.0,
                   help="penalty parameter (default 1/16)")
    p.add_argument("--eps", type=float, default=1e-3,
                   help="stopping tolerance (default 1e-3)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="directory for output files")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _load_graph(args):
    if args.graph is not None:
        return read_graph(args.graph)
    return er_random(*args.er)


def _graph_source(args):
    return args.graph if args.graph is not None else tuple(args.er)


def _parse_x0(text):
    return [float(tok) for tok in text.split(",")] if text else None


def _load_events(path):
    """Events file: JSON list of {"time": t, "arrivals":
    [{"value": v, "edges": [[i, j], ...]}, ...]}. Indices are 1-based
    over the enlarged graph."""
    with open(path) as fh:
        raw = json.load(fh)
    return tuple(
        LiveEvent.make(ev["time"],
                       [(a["value"], a["edges"]) for a in ev["arrivals"]])
        for ev in raw)


def _out_path(args, name):
    if args.out is None:
        return name
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _cmd_metropolis(args) -> int:
    g = _load_graph(args)
    w = metropolis(g)
    print(f"n={g.n} convergence_factor={convergence_factor(w):.6f}")
    if args.out is not None:
        path = _out_path(args, "weights_metropolis.csv")
        save_weight_csv(w, path)
        print(f"wrote {path}")
    return 0


def _cmd_solve_central(args) -> int:
    g = _load_graph(args)
    sol = minimize_convergence_factor(g, tol=args.tol)
    print(f"n={g.n} factor={sol.factor:.10f} certificate="
          f"{sol.certificate:.3e}")
    if args.out is not None:
        path = _out_path(args, "weights_central.csv")
        save_weight_csv(sol.weights, path)
        print(f"wrote {path}")
    return 0


def _cmd_run_admm(args) -> int:
    g = _load_graph(args)
    cfg = AdmmConfig(penalty=args.rho, epsilon=args.eps,
                     max_outer=args.max_outer)
    run = run_until_stop(g, cfg)
    w = assemble_from_rows(
        [st.estimate[i] for i, st in enumerate(run.states)], g)
    status = "stopped" if run.stopped else "max_outer reached"
    print(f"n={g.n} rounds={run.rounds_used} ({status}) "
          f"factor={convergence_factor(w):.6f}")
    if args.out is not None:
        wp = _out_path(args, "weights_admm.csv")
        save_weight_csv(w, wp)
        tp = _out_path(args, "admm_trace.csv")
        write_trace_csv(run.trace, tp)
        print(f"wrote {wp}\nwrote {tp}")
    return 0 if run.stopped else 1


def _spec_from_args(args, kind) -> ExperimentSpec:
    cfg = AdmmConfig(penalty=args.rho, epsilon=args.eps,
                     max_outer=getattr(args, "max_outer", 5000))
    return ExperimentSpec(kind=kind, graph=_graph_source(args), cfg=cfg,
                          x0=_parse_x0(getattr(args, "x0", None)),
                          events=getattr(args, "parsed_events", ()),
                          steps=getattr(args, "steps", 500),
                          central_tol=getattr(args, "tol", 1e-8),
                          seed=args.seed)


def _cmd_run_fixed(args) -> int:
    report = run_fixed(_spec_from_args(args, "fixed"))
    f = report.factors
    print(f"factors: central={f['central']:.6f} "
          f"metropolis={f['metropolis']:.6f} admm={f['admm']:.6f}")
    print(f"stop_round={report.stop_round} crossings={report.crossings}")
    if args.out is not None:
        paths = write_fixed_outputs(report, args.out)
        if args.format == "json":
            jp = os.path.join(args.out, "report.json")
            write_json_report(jp, report)
            paths["report"] = jp
        for name, path in sorted(paths.items()):
            print(f"wrote {path}")
    return 0


def _cmd_run_live(args) -> int:
    args.parsed_events = _load_events(args.events) if args.events else ()
    report = run_live(_spec_from_args(args, "live"))
    print(f"final_population={report.live.populations[-1]} "
          f"target={report.live.targets[-1]:.4f}")
    print(f"crossings after t={report.last_event_time}: {report.crossings}")
    if args.out is not None:
        lp = _out_path(args, "trajectory_admm_live.csv")
        write_trajectory_csv(lp, report.live)
        bp = _out_path(args, "trajectory_metropolis.csv")
        write_trajectory_csv(bp, report.baseline)
        print(f"wrote {lp}\nwrote {bp}")
        if args.format == "json":
            jp = _out_path(args, "report.json")
            write_json_report(jp, report)
            print(f"wrote {jp}")
    return 0


def _cmd_run_sweep(args) -> int:
    grid = tuple(float(tok) for tok in args.p_grid.split(","))
    cfg = AdmmConfig(penalty=args.rho, epsilon=args.eps,
                     max_outer=args.max_outer)
    spec = ExperimentSpec(kind="sweep", cfg=cfg, p_grid=grid,
                          repetitions=args.reps, sweep_n=args.n,
                          seed=args.seed)
    report = run_sweep(spec)
    for cell in report.cells:
        print(f"p={cell.p:.2f} mean_rounds={cell.mean_rounds:.1f} "
              f"redraws={cell.redraws}")
    if args.out is not None:
        sp = _out_path(args, "sweep.csv")
        write_sweep_csv(sp, report)
        print(f"wrote {sp}")
        if args.format == "json":
            jp = _out_path(args, "report.json")
            write_json_report(jp, report)
            print(f"wrote {jp}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdla",
        description="distributed weight design for fast average consensus")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metropolis", help="locally computed baseline weights")
    _add_graph_args(p)
    _add_common_args(p)
    p.set_defaults(func=_cmd_metropolis)

    p = sub.add_parser("solve-central",
                       help="centralized optimal convergence factor")
    _add_graph_args(p)
    _add_common_args(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_solve_central)

    p = sub.add_parser("run-admm", help="distributed engine on one graph")
    _add_graph_args(p)
    _add_common_args(p)
    p.add_argument("--max-outer", type=int, default=5000, dest="max_outer")
    p.set_defaults(func=_cmd_run_admm)

    p = sub.add_parser("run-fixed",
                       help="three-way comparison on a fixed network")
    _add_graph_args(p)
    _add_common_args(p)
    p.add_argument("--tol", type=float, default=1e-8,
                   help="centralized solver tolerance")
    p.add_argument("--x0", help="comma-separated initial values")
    p.add_argument("--steps", type=int, default=500,
                   help="protocol horizon")
    p.add_argument("--max-outer", type=int, default=5000, dest="max_outer")
    p.set_defaults(func=_cmd_run_fixed)

    p = sub.add_parser("run-live", help="weights computed while running")
    _add_graph_args(p)
    _add_common_args(p)
    p.add_argument("--x0", help="comma-separated initial values")
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--events", help="JSON file of arrival events")
    p.add_argument("--max-outer", type=int, default=5000, dest="max_outer")
    p.set_defaults(func=_cmd_run_live)

    p = sub.add_parser("run-sweep",
                       help="mean stop round over random graphs per density")
    _add_common_args(p)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--p-grid", default="0.4,0.5,0.6,0.7,0.8,0.9",
                   dest="p_grid")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--max-outer", type=int, default=5000, dest="max_outer")
    p.set_defaults(eps=1e-2)
    p.set_defaults(func=_cmd_run_sweep)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
