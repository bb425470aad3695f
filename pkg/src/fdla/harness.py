"""Experiment runner: fixed-network comparison, live arrivals, and the
random-graph iteration-count sweep. Everything is deterministic given
the spec and its seed, and all metrics are emitted as CSV or JSON for
external plotting."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .admm import AdmmConfig, run_until_stop, write_trace_csv
from .centralized import minimize_convergence_factor
from .consensus import run_admm_live, run_metropolis_live, run_protocol
from .graph import Graph, er_random, is_connected, read_graph
from .weights import (assemble_from_rows, check_consensus_condition,
                      convergence_factor, metropolis, save_weight_csv)

__all__ = [
    "ExperimentSpec",
    "FixedReport",
    "LiveReport",
    "SweepReport",
    "resolve_graph",
    "resolve_x0",
    "run_fixed",
    "run_live",
    "run_sweep",
    "write_json_report",
    "write_trajectory_csv",
    "write_sweep_csv",
]

ERROR_THRESHOLD = 0.1  # crossing metric used throughout the reports


@dataclass
class ExperimentSpec:
    """Deterministic description of one experiment.

    graph may be a Graph, a file path, or an (n, p, seed) triple for a
    random draw. x0 may be an explicit vector or None for a seeded
    uniform draw on [0, 100). The sweep fields only matter for
    kind="sweep".
    """

    kind: str = "fixed"
    graph: object = None
    cfg: AdmmConfig = field(default_factory=AdmmConfig)
    x0: object = None
    events: tuple = ()
    p_grid: tuple = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    repetitions: int = 10
    sweep_n: int = 10
    steps: int = 500
    central_tol: float = 1e-8
    seed: int = 0

    def describe(self) -> dict:
        g = self.graph
        if isinstance(g, Graph):
            gdesc = {"n": g.n, "edges": g.num_proper_edges()}
        elif isinstance(g, tuple):
            gdesc = {"er": list(g)}
        else:
            gdesc = {"path": str(g)}
        return {
            "kind": self.kind,
            "graph": gdesc,
            "rho": self.cfg.penalty,
            "epsilon": self.cfg.epsilon,
            "steps": self.steps,
            "seed": self.seed,
        }


def resolve_graph(spec: ExperimentSpec) -> Graph:
    g = spec.graph
    if isinstance(g, Graph):
        return g
    if isinstance(g, tuple):
        n, p, seed = g
        return er_random(int(n), float(p), int(seed))
    if g is None:
        raise ValueError("spec has no graph source")
    return read_graph(g)


def resolve_x0(spec: ExperimentSpec, n: int) -> np.ndarray:
    if spec.x0 is not None:
        x0 = np.asarray(spec.x0, dtype=float)
        if x0.size != n:
            raise ValueError(f"x0 has {x0.size} entries for {n} agents")
        return x0
    rng = np.random.default_rng(spec.seed)
    return rng.uniform(0.0, 100.0, size=n)


def _first_crossing(errors: np.ndarray, start: int = 0):
    idx = np.nonzero(errors[start:] < ERROR_THRESHOLD)[0]
    return int(idx[0]) + start if idx.size else None


@dataclass
class FixedReport:
    spec: ExperimentSpec
    graph: Graph
    factors: dict
    stop_round: int
    stopped: bool
    crossings: dict
    consensus_checks: dict
    trace: list
    matrices: dict
    protocol_runs: dict

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec.describe(),
            "factors": self.factors,
            "stop_round": self.stop_round,
            "stopped": self.stopped,
            "crossings": self.crossings,
            "consensus_checks": self.consensus_checks,
        }


def run_fixed(spec: ExperimentSpec) -> FixedReport:
    """Compare the three weight designs on one fixed network.

    Solves the centralized problem, builds the Metropolis matrix, runs
    the distributed engine to its stopping round and stacks the agents'
    own rows, then plays the protocol under all three matrices from a
    common start vector. Factors, stop round and error crossings go in
    the report; the matrices and traces ride along for serialization.
    """
    g = resolve_graph(spec)
    if not is_connected(g):
        raise ValueError("fixed experiment requires a connected graph")
    x0 = resolve_x0(spec, g.n)

    central = minimize_convergence_factor(g, tol=spec.central_tol)
    wm = metropolis(g)
    run = run_until_stop(g, spec.cfg)
    w_admm = assemble_from_rows(
        [st.estimate[i] for i, st in enumerate(run.states)], g)

    matrices = {"central": central.weights, "metropolis": wm,
                "admm": w_admm}
    factors = {name: convergence_factor(w) for name, w in matrices.items()}

    # the distributed matrix carries the stopping tolerance in its sums,
    # so its consensus check runs at n*epsilon rather than the strict tol
    eps = spec.cfg.epsilon
    tols = {"central": 1e-7, "metropolis": 1e-12, "admm": g.n * eps}
    checks = {name: check_consensus_condition(matrices[name], tol=tols[name])
              for name in matrices}

    runs = {name: run_protocol(matrices[name], x0, spec.steps)
            for name in matrices}
    crossings = {name: _first_crossing(runs[name].errors) for name in runs}

    return FixedReport(spec=spec, graph=g, factors=factors,
                       stop_round=run.rounds_used, stopped=run.stopped,
                       crossings=crossings,
                       consensus_checks={k: v.ok for k, v in checks.items()},
                       trace=run.trace, matrices=matrices,
                       protocol_runs=runs)


@dataclass
class LiveReport:
    spec: ExperimentSpec
    live: object
    baseline: object
    last_event_time: int
    crossings: dict

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec.describe(),
            "events": [{"time": e.time,
                        "values": [a.value for a in e.arrivals]}
                       for e in self.spec.events],
            "crossings": self.crossings,
            "final_population": int(self.live.populations[-1]),
            "final_target": float(self.live.targets[-1]),
        }


def run_live(spec: ExperimentSpec) -> LiveReport:
    """Live mode against the Metropolis baseline on the same arrivals."""
    g = resolve_graph(spec)
    x0 = resolve_x0(spec, g.n)
    live = run_admm_live(g, x0, spec.events, spec.cfg, spec.steps)
    base = run_metropolis_live(g, x0, spec.events, spec.steps)
    last_event = max((e.time for e in spec.events), default=0)
    crossings = {
        "admm_live": _first_crossing(live.errors, start=last_event),
        "metropolis": _first_crossing(base.errors, start=last_event),
    }
    return LiveReport(spec=spec, live=live, baseline=base,
                      last_event_time=last_event, crossings=crossings)


@dataclass
class SweepCell:
    p: float
    mean_rounds: float
    rounds: list
    redraws: int


@dataclass
class SweepReport:
    spec: ExperimentSpec
    cells: list

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec.describe(),
            "cells": [{"p": c.p, "mean_rounds": c.mean_rounds,
                       "rounds": c.rounds, "redraws": c.redraws}
                      for c in self.cells],
        }


def connected_er_sample(n: int, p: float, seed: int):
    """Draw until connected, incrementing the seed; returns the graph,
    the seed consumed last, and the number of redraws."""
    redraws = 0
    while True:
        g = er_random(n, p, seed)
        if is_connected(g):
            return g, seed, redraws
        seed += 1
        redraws += 1


def run_sweep(spec: ExperimentSpec) -> SweepReport:
    """Mean stopping round over seeded connected random graphs, one cell
    per edge probability. Disconnected draws are redrawn (seed + 1) so
    every cell has exactly `repetitions` connected samples."""
    cells = []
    for idx, p in enumerate(spec.p_grid):
        seed = spec.seed + 10_000 * idx
        rounds = []
        redraws = 0
        for _ in range(spec.repetitions):
            g, seed, extra = connected_er_sample(spec.sweep_n, p, seed)
            redraws += extra
            run = run_until_stop(g, spec.cfg, record_trace=False)
            rounds.append(run.rounds_used)
            seed += 1
        cells.append(SweepCell(p=p, mean_rounds=float(np.mean(rounds)),
                               rounds=rounds, redraws=redraws))
    return SweepReport(spec=spec, cells=cells)


def write_trajectory_csv(path, live, baseline=None) -> None:
    """Live trajectory CSV: t, agent, value, error_norm, cf_bar,
    cf_metropolis. One row per agent per step."""
    with open(path, "w") as fh:
        fh.write("t,agent,value,error_norm,cf_bar,cf_metropolis\n")
        steps = len(live.values) - 1
        for t in range(steps + 1):
            cf_bar = f"{live.factors[t]:.12g}" if t < steps else ""
            cf_m = f"{live.metropolis_factors[t]:.12g}" if t < steps else ""
            for i, v in enumerate(live.values[t]):
                fh.write(f"{t},{i + 1},{v:.12g},{live.errors[t]:.12g},"
                         f"{cf_bar},{cf_m}\n")


def write_sweep_csv(path, report: SweepReport) -> None:
    with open(path, "w") as fh:
        fh.write("p,mean_rounds,redraws," +
                 ",".join(f"rounds_{k + 1}"
                          for k in range(report.spec.repetitions)) + "\n")
        for c in report.cells:
            fh.write(f"{c.p:.12g},{c.mean_rounds:.12g},{c.redraws}," +
                     ",".join(str(r) for r in c.rounds) + "\n")


def write_json_report(path, report) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_fixed_outputs(report: FixedReport, out_dir) -> dict:
    """All fixed-experiment artifacts into out_dir; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for name, w in report.matrices.items():
        p = os.path.join(out_dir, f"weights_{name}.csv")
        save_weight_csv(w, p)
        paths[f"weights_{name}"] = p
    tp = os.path.join(out_dir, "admm_trace.csv")
    write_trace_csv(report.trace, tp)
    paths["trace"] = tp
    for name, run in report.protocol_runs.items():
        p = os.path.join(out_dir, f"protocol_{name}.csv")
        with open(p, "w") as fh:
            fh.write("t,agent,value,error_norm\n")
            for t in range(run.values.shape[0]):
                for i in range(run.values.shape[1]):
                    fh.write(f"{t},{i + 1},{run.values[t, i]:.12g},"
                             f"{run.errors[t]:.12g}\n")
        paths[f"protocol_{name}"] = p
    return paths
