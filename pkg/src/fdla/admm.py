"""Distributed computation of the optimal consensus weights.

Two engines live here. The parallel engine is the production path:
every agent holds a full-matrix estimate of the optimal weights plus
three dual blocks (row sums, column sums, neighbor agreement), and each
round solves its local subproblem, exchanges estimates with neighbors,
and ascends the duals. The serial engine is the reference formulation
it was derived from, carrying explicit per-edge consensus matrices and
per-edge dual pairs; it exists so the two can be checked against each
other round by round.

Stopping is residual-based: each agent tracks the worst violation of
the constraints its estimate should satisfy at the optimum, and the
run stops once every agent's worst residual is at or below epsilon.
The harness evaluates that criterion omnisciently; a distributed
max-consensus for the stop signal is out of scope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, is_connected
from .spectral import (ConvergenceError, averaging_matrix, frobenius_norm,
                       spectral_norm, svd)
from .subproblem import PrimalInstance, solve_primal

__all__ = [
    "AdmmConfig",
    "AgentState",
    "SerialState",
    "ResidualReport",
    "AdmmRun",
    "TraceRow",
    "zero_states",
    "parallel_round",
    "serial_round",
    "residuals",
    "stopping_satisfied",
    "augmented_lagrangian",
    "run_until_stop",
    "write_trace_csv",
]


@dataclass(frozen=True)
class AdmmConfig:
    """Engine settings. penalty is the quadratic penalty weight; epsilon
    the stopping tolerance on the per-agent worst residual.

    local_freeze lets an agent stop updating while its own residual
    holds at or below epsilon (it thaws when the residual rises again).
    Freezing saves computation but can delay, or on sparse graphs
    prevent, the global stopping criterion; it is off by default.
    """

    penalty: float = 1.0 / 16.0
    epsilon: float = 1e-3
    max_outer: int = 5000
    tol_sub: float = 1e-8
    max_inner: int = 50_000
    local_freeze: bool = False

    def __post_init__(self):
        if self.penalty <= 0:
            raise ValueError("penalty must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class AgentState:
    """One agent's primal estimate and dual blocks."""

    estimate: np.ndarray
    row_dual: np.ndarray
    col_dual: np.ndarray
    agreement_dual: np.ndarray
    frozen: bool = False


def zero_states(g: Graph) -> list:
    """All-zero initialization; makes round 0 deterministic."""
    n = g.n
    return [AgentState(estimate=np.zeros((n, n)), row_dual=np.zeros(n),
                       col_dual=np.zeros(n), agreement_dual=np.zeros((n, n)))
            for _ in range(n)]


@dataclass
class SerialState:
    """Per-edge variables of the reference engine.

    Keys are canonical edges (i, j) with i <= j, self-pairs included.
    edge_estimate holds the shared consensus matrix of the pair;
    dual_lo / dual_hi are the duals tying the lower- / higher-indexed
    endpoint's estimate to it. Zero initialization keeps each pair's
    dual sum at zero for every round.
    """

    edge_estimate: dict
    dual_lo: dict
    dual_hi: dict

    @classmethod
    def zeros(cls, g: Graph) -> "SerialState":
        n = g.n
        zed = {e: np.zeros((n, n)) for e in g.edges}
        return cls(edge_estimate={e: z.copy() for e, z in zed.items()},
                   dual_lo={e: z.copy() for e, z in zed.items()},
                   dual_hi={e: z.copy() for e, z in zed.items()})

    def _key(self, i: int, j: int):
        return (min(i, j), max(i, j))

    def estimate(self, i: int, j: int) -> np.ndarray:
        return self.edge_estimate[self._key(i, j)]

    def incident_dual(self, i: int, j: int) -> np.ndarray:
        """Dual attached to agent i's side of edge {i, j}."""
        key = self._key(i, j)
        return self.dual_lo[key] if i <= j else self.dual_hi[key]

    def partner_dual(self, i: int, j: int) -> np.ndarray:
        return self.incident_dual(j, i)


@dataclass(frozen=True)
class ResidualReport:
    """Scaled constraint violations of one agent's estimate.

    row_residual and col_residual are the sum-constraint gaps divided
    by sqrt(n); neighbor_gaps maps each proper neighbor to the pairwise
    estimate distance divided by n; support_leaks maps each non-neighbor
    to the magnitude sitting on the forbidden row entry.
    """

    row_residual: float
    col_residual: float
    neighbor_gaps: dict
    support_leaks: dict

    @property
    def worst(self) -> float:
        vals = [self.row_residual, self.col_residual]
        vals.extend(self.neighbor_gaps.values())
        vals.extend(self.support_leaks.values())
        return max(vals)


def _build_instance(i: int, g: Graph, state: AgentState, anchors: dict,
                    penalty: float) -> PrimalInstance:
    return PrimalInstance(agent=i, graph=g, row_dual=state.row_dual,
                          col_dual=state.col_dual,
                          agreement_dual=state.agreement_dual,
                          anchors=anchors, penalty=penalty)


def _solve_or_raise(inst: PrimalInstance, cfg: AdmmConfig, i: int, k: int,
                    warm: np.ndarray):
    report = solve_primal(inst, tol_sub=cfg.tol_sub, max_inner=cfg.max_inner,
                          warm_start=warm)
    if not report.converged:
        raise ConvergenceError(
            f"agent {i + 1} subproblem failed at round {k}: residual "
            f"{report.fixed_point_residual:.3e} > {cfg.tol_sub:.1e}")
    return report.matrix


def parallel_round(states: list, g: Graph, cfg: AdmmConfig,
                   k: int) -> list:
    """One synchronous round of the parallel engine.

    Each non-frozen agent minimizes its subproblem anchored at the
    averages of round-k estimates, then all agents exchange the new
    estimates, and the dual blocks ascend using the exchanged
    round-(k+1) matrices. Frozen agents re-send their last estimate
    unchanged and leave their duals alone.
    """
    n = g.n
    ones = np.ones(n)
    rho = cfg.penalty
    new_estimates = []
    for i, st in enumerate(states):
        if st.frozen:
            new_estimates.append(st.estimate)
            continue
        anchors = {j: 0.5 * (st.estimate + states[j].estimate)
                   for j in g.neighbors(i)}
        inst = _build_instance(i, g, st, anchors, rho)
        new_estimates.append(_solve_or_raise(inst, cfg, i, k,
                                             warm=st.estimate))
    new_states = []
    for i, st in enumerate(states):
        w = new_estimates[i]
        if st.frozen:
            new_states.append(AgentState(
                estimate=w, row_dual=st.row_dual, col_dual=st.col_dual,
                agreement_dual=st.agreement_dual, frozen=True))
            continue
        gap = sum(w - new_estimates[j] for j in g.neighbors(i))
        new_states.append(AgentState(
            estimate=w,
            row_dual=st.row_dual + rho * (w @ ones - ones),
            col_dual=st.col_dual + rho * (w.T @ ones - ones),
            agreement_dual=st.agreement_dual + 0.5 * rho * gap,
            frozen=False))
    return new_states


def serial_round(states: list, serial: SerialState, g: Graph,
                 cfg: AdmmConfig, k: int):
    """One full pass of the reference engine.

    Agents minimize in index order against the round-k per-edge
    consensus matrices, the consensus matrices move to the dual-shifted
    midpoint of the fresh endpoint estimates, and all duals ascend.
    """
    n = g.n
    ones = np.ones(n)
    rho = cfg.penalty
    new_estimates = list(s.estimate for s in states)
    for i in range(n):
        st = states[i]
        anchors = {j: serial.estimate(i, j) for j in g.neighbors(i)}
        agg = sum(serial.incident_dual(i, j) for j in g.neighbors(i))
        inst = PrimalInstance(agent=i, graph=g, row_dual=st.row_dual,
                              col_dual=st.col_dual, agreement_dual=agg,
                              anchors=anchors, penalty=rho)
        new_estimates[i] = _solve_or_raise(inst, cfg, i, k, warm=st.estimate)

    new_edge = {}
    new_lo = {}
    new_hi = {}
    for (p, q) in g.edges:
        x = ((serial.dual_lo[(p, q)] + serial.dual_hi[(p, q)]) / (2.0 * rho)
             + 0.5 * (new_estimates[p] + new_estimates[q]))
        new_edge[(p, q)] = x
        new_lo[(p, q)] = serial.dual_lo[(p, q)] + rho * (new_estimates[p] - x)
        new_hi[(p, q)] = serial.dual_hi[(p, q)] + rho * (new_estimates[q] - x)

    new_states = []
    for i, st in enumerate(states):
        w = new_estimates[i]
        new_states.append(AgentState(
            estimate=w,
            row_dual=st.row_dual + rho * (w @ ones - ones),
            col_dual=st.col_dual + rho * (w.T @ ones - ones),
            agreement_dual=st.agreement_dual,  # implicit: sum of edge duals
            frozen=False))
    return new_states, SerialState(edge_estimate=new_edge, dual_lo=new_lo,
                                   dual_hi=new_hi)


def residuals(agent: int, state: AgentState, neighbor_estimates: dict,
              g: Graph) -> ResidualReport:
    """Constraint residuals of one agent against its neighbors' estimates."""
    n = g.n
    ones = np.ones(n)
    w = state.estimate
    sqrt_n = math.sqrt(n)
    gaps = {j: frobenius_norm(w - neighbor_estimates[j]) / n
            for j in g.proper_neighbors(agent)}
    leaks = {j: float(abs(w[agent, j]))
             for j in range(n) if j not in g.neighbors(agent)}
    return ResidualReport(
        row_residual=float(np.linalg.norm(w @ ones - ones)) / sqrt_n,
        col_residual=float(np.linalg.norm(w.T @ ones - ones)) / sqrt_n,
        neighbor_gaps=gaps,
        support_leaks=leaks)


def stopping_satisfied(reports: list, epsilon: float) -> bool:
    """True iff every agent's worst residual is at or below epsilon."""
    return all(rep.worst <= epsilon for rep in reports)


def all_residuals(states: list, g: Graph) -> list:
    estimates = {j: states[j].estimate for j in range(g.n)}
    return [residuals(i, states[i], estimates, g) for i in range(g.n)]


def augmented_lagrangian(states: list, serial: SerialState, g: Graph,
                         penalty: float) -> float:
    """The full penalized Lagrangian of the edge-consensus formulation,
    with each canonical edge (self-pairs included) counted once.
    Diagnostic only; the engines never evaluate it."""
    n = g.n
    ones = np.ones(n)
    j_mat = averaging_matrix(n)
    total = 0.0
    quad = 0.0
    for st in states:
        w = st.estimate
        total += _distance_to_averaging(w, j_mat) / n
        r = w @ ones - ones
        c = w.T @ ones - ones
        total += float(st.row_dual @ r) + float(st.col_dual @ c)
        quad += float(r @ r + c @ c)
    for (p, q) in g.edges:
        x = serial.edge_estimate[(p, q)]
        dp = states[p].estimate - x
        dq = states[q].estimate - x
        total += float(np.sum(dp * serial.dual_lo[(p, q)]))
        total += float(np.sum(dq * serial.dual_hi[(p, q)]))
        quad += float(np.sum(dp * dp)) + float(np.sum(dq * dq))
    return total + 0.5 * penalty * quad


def _distance_to_averaging(w: np.ndarray, j_mat: np.ndarray) -> float:
    d = w - j_mat
    try:
        return spectral_norm(d, tol=1e-9)
    except ConvergenceError:
        return float(svd(d)[1][0])


@dataclass(frozen=True)
class TraceRow:
    round: int
    agent: int
    objective: float
    worst_residual: float
    row_residual: float
    col_residual: float
    max_neighbor_gap: float


@dataclass
class AdmmRun:
    states: list
    rounds_used: int
    stopped: bool
    trace: list
    reports: list = field(default_factory=list)


def _trace_rows(k: int, states: list, reports: list, g: Graph,
                j_mat: np.ndarray) -> list:
    rows = []
    for i, (st, rep) in enumerate(zip(states, reports)):
        rows.append(TraceRow(
            round=k, agent=i + 1,
            objective=_distance_to_averaging(st.estimate, j_mat),
            worst_residual=rep.worst,
            row_residual=rep.row_residual,
            col_residual=rep.col_residual,
            max_neighbor_gap=max(rep.neighbor_gaps.values(), default=0.0)))
    return rows


def run_until_stop(g: Graph, cfg: AdmmConfig, initial_states=None,
                   record_trace: bool = True) -> AdmmRun:
    """Iterate the parallel engine until the stopping criterion holds.

    Returns the final states, the number of rounds used, and (when
    record_trace is on) one row per round per agent with the distance
    to the averaging matrix and the residual breakdown. A run that hits
    max_outer returns stopped=False.
    """
    if not is_connected(g):
        raise ValueError("the engine requires a connected graph")
    states = zero_states(g) if initial_states is None else initial_states
    j_mat = averaging_matrix(g.n)
    trace = []
    reports = all_residuals(states, g)
    if record_trace:
        trace.extend(_trace_rows(0, states, reports, g, j_mat))
    rounds = 0
    stopped = stopping_satisfied(reports, cfg.epsilon)
    while not stopped and rounds < cfg.max_outer:
        states = parallel_round(states, g, cfg, rounds)
        rounds += 1
        reports = all_residuals(states, g)
        if record_trace:
            trace.extend(_trace_rows(rounds, states, reports, g, j_mat))
        if cfg.local_freeze:
            for st, rep in zip(states, reports):
                st.frozen = rep.worst <= cfg.epsilon
        stopped = stopping_satisfied(reports, cfg.epsilon)
    return AdmmRun(states=states, rounds_used=rounds, stopped=stopped,
                   trace=trace, reports=reports)


def write_trace_csv(trace: list, path) -> None:
    """Trace rows as CSV: round, agent, objective, R, r1, r2, max_r3."""
    with open(path, "w") as fh:
        fh.write("round,agent,objective,R,r1,r2,max_r3\n")
        for row in trace:
            fh.write(f"{row.round},{row.agent},{row.objective:.12g},"
                     f"{row.worst_residual:.12g},{row.row_residual:.12g},"
                     f"{row.col_residual:.12g},{row.max_neighbor_gap:.12g}\n")
