"""The averaging protocol itself, plus the interleaved live mode.

In live mode the weight computation and the value updates share one
clock: every protocol step runs a single round of the distributed
weight engine, stacks each agent's own row into a matrix, makes that
matrix protocol-safe (symmetric with unit row sums) by keeping the
smaller of each mirrored pair and refilling the diagonal, and then
applies it to the value vector. Agents may join while this is running;
on arrival the engine state is rebuilt from scratch for the enlarged
network, seeded from its Metropolis weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .admm import AdmmConfig, parallel_round, zero_states
from .graph import Graph, add_agents, is_connected
from .weights import WeightMatrix, convergence_factor, metropolis

__all__ = [
    "ProtocolRun",
    "Arrival",
    "LiveEvent",
    "LiveRun",
    "run_protocol",
    "stack_agent_rows",
    "min_symmetrize",
    "metropolis_row_states",
    "run_admm_live",
    "run_metropolis_live",
    "live_convergence_factor_trace",
]


@dataclass(frozen=True)
class ProtocolRun:
    """Trajectory of the fixed-weight protocol: values[t] is the state
    at time t, errors[t] the distance to the initial-average vector."""

    values: np.ndarray
    errors: np.ndarray
    target: float


def run_protocol(w, x0, steps: int) -> ProtocolRun:
    """Iterate x(t+1) = W x(t) and record the consensus error."""
    a = w.matrix if isinstance(w, WeightMatrix) else np.asarray(w, float)
    x = np.asarray(x0, dtype=float)
    if a.shape[0] != x.size:
        raise ValueError("state vector length does not match the matrix")
    target = float(x.mean())
    values = np.empty((steps + 1, x.size))
    errors = np.empty(steps + 1)
    values[0] = x
    errors[0] = float(np.linalg.norm(x - target))
    for t in range(steps):
        x = a @ x
        values[t + 1] = x
        errors[t + 1] = float(np.linalg.norm(x - target))
    return ProtocolRun(values=values, errors=errors, target=target)


def stack_agent_rows(states: list) -> np.ndarray:
    """Row i of agent i's estimate, stacked into one matrix. No
    feasibility is implied; early-round stacks violate the sum
    constraints."""
    n = len(states)
    hat = np.zeros((n, n))
    for i, st in enumerate(states):
        hat[i] = st.estimate[i]
    return hat


def min_symmetrize(hat: np.ndarray, g: Graph) -> WeightMatrix:
    """Protocol-safe version of a stacked row matrix.

    Each mirrored off-diagonal pair is replaced by its smaller entry
    and the diagonal refills the row sum to one, the same completion
    the Metropolis construction uses. The output is exactly symmetric
    with row sums exact to rounding.
    """
    hat = np.asarray(hat, dtype=float)
    n = g.n
    if hat.shape != (n, n):
        raise ValueError(f"matrix shape {hat.shape} does not match n={n}")
    off = hat * (1.0 - g.support_mask())
    if np.any(off != 0.0):
        raise ValueError("stacked rows violate the graph support")
    bar = np.minimum(hat, hat.T)
    np.fill_diagonal(bar, 0.0)
    np.fill_diagonal(bar, 1.0 - bar.sum(axis=1))
    return WeightMatrix(bar, g)


def metropolis_row_states(g: Graph) -> list:
    """Live-mode initialization: each agent's estimate carries its own
    Metropolis row, all other rows zero; duals start at zero. Stacking
    these states therefore reproduces the Metropolis matrix."""
    wm = metropolis(g).matrix
    states = zero_states(g)
    for i, st in enumerate(states):
        st.estimate[i] = wm[i]
    return states


@dataclass(frozen=True)
class Arrival:
    """One joining agent: its initial value and its 1-based attachment
    edges into the enlarged graph."""

    value: float
    edges: tuple


@dataclass(frozen=True)
class LiveEvent:
    """Agents arriving at the start of step `time`."""

    time: int
    arrivals: tuple

    @classmethod
    def make(cls, time: int, arrivals) -> "LiveEvent":
        return cls(time=time, arrivals=tuple(
            Arrival(value=float(v), edges=tuple(tuple(e) for e in edges))
            for v, edges in arrivals))


@dataclass
class LiveRun:
    """Per-step records of a live run. values is ragged across arrival
    times; factors[t] is the contraction factor of the weight matrix
    applied at step t (for a symmetric matrix this equals the spectral
    radius of its error dynamics, so no separate radius log is kept)."""

    values: list
    errors: np.ndarray
    targets: np.ndarray
    populations: np.ndarray
    factors: np.ndarray
    metropolis_factors: np.ndarray
    applied: list = field(default_factory=list)


def _sorted_events(events) -> list:
    evs = sorted(events, key=lambda e: e.time)
    times = [e.time for e in evs]
    if len(set(times)) != len(times):
        raise ValueError("event times must be strictly increasing")
    return evs


def _apply_event(g: Graph, x: np.ndarray, ev: LiveEvent):
    attach = [pair for a in ev.arrivals for pair in a.edges]
    grown = add_agents(g, len(ev.arrivals), attach)
    if not is_connected(grown):
        raise ValueError(f"arrival at t={ev.time} disconnects the network")
    x = np.concatenate([x, [a.value for a in ev.arrivals]])
    return grown, x


def run_admm_live(g0: Graph, x0, events, cfg: AdmmConfig,
                  steps: int) -> LiveRun:
    """Interleave one weight-engine round per protocol step.

    The matrix applied at step t is the symmetrized stack of the
    step-t engine states, so the Metropolis-seeded initialization is
    what moves the values at t = 0. On an arrival event the graph
    grows, the newcomers' values are appended, and every agent's engine
    state is rebuilt for the new dimension (duals zeroed, estimates
    re-seeded from the enlarged graph's Metropolis rows); the consensus
    target becomes the mean over the enlarged population.
    """
    if not is_connected(g0):
        raise ValueError("live mode requires a connected starting graph")
    evs = _sorted_events(events)
    g = g0
    x = np.asarray(x0, dtype=float)
    if x.size != g.n:
        raise ValueError("state vector length does not match the graph")
    states = metropolis_row_states(g)
    wm_factor = convergence_factor(metropolis(g))

    values, applied = [], []
    errors = np.empty(steps + 1)
    targets = np.empty(steps + 1)
    populations = np.empty(steps + 1, dtype=int)
    factors = np.empty(steps)
    wm_factors = np.empty(steps)

    for t in range(steps):
        while evs and evs[0].time == t:
            g, x = _apply_event(g, x, evs.pop(0))
            states = metropolis_row_states(g)
            wm_factor = convergence_factor(metropolis(g))
        target = float(x.mean())
        values.append(x.copy())
        targets[t] = target
        populations[t] = g.n
        errors[t] = float(np.linalg.norm(x - target))

        bar = min_symmetrize(stack_agent_rows(states), g)
        factors[t] = convergence_factor(bar)
        wm_factors[t] = wm_factor
        applied.append(bar)
        x = bar.matrix @ x
        states = parallel_round(states, g, cfg, t)

    values.append(x.copy())
    targets[steps] = float(x.mean())
    populations[steps] = g.n
    errors[steps] = float(np.linalg.norm(x - targets[steps]))
    if evs:
        raise ValueError(f"event at t={evs[0].time} lies beyond the horizon")
    return LiveRun(values=values, errors=errors, targets=targets,
                   populations=populations, factors=factors,
                   metropolis_factors=wm_factors, applied=applied)


def run_metropolis_live(g0: Graph, x0, events, steps: int) -> LiveRun:
    """Baseline for the live mode: a fixed Metropolis matrix, recomputed
    whenever the topology changes."""
    if not is_connected(g0):
        raise ValueError("live mode requires a connected starting graph")
    evs = _sorted_events(events)
    g = g0
    x = np.asarray(x0, dtype=float)
    if x.size != g.n:
        raise ValueError("state vector length does not match the graph")
    wm = metropolis(g)
    wm_factor = convergence_factor(wm)

    values, applied = [], []
    errors = np.empty(steps + 1)
    targets = np.empty(steps + 1)
    populations = np.empty(steps + 1, dtype=int)
    factors = np.empty(steps)

    for t in range(steps):
        while evs and evs[0].time == t:
            g, x = _apply_event(g, x, evs.pop(0))
            wm = metropolis(g)
            wm_factor = convergence_factor(wm)
        target = float(x.mean())
        values.append(x.copy())
        targets[t] = target
        populations[t] = g.n
        errors[t] = float(np.linalg.norm(x - target))
        factors[t] = wm_factor
        applied.append(wm)
        x = wm.matrix @ x

    values.append(x.copy())
    targets[steps] = float(x.mean())
    populations[steps] = g.n
    errors[steps] = float(np.linalg.norm(x - targets[steps]))
    if evs:
        raise ValueError(f"event at t={evs[0].time} lies beyond the horizon")
    return LiveRun(values=values, errors=errors, targets=targets,
                   populations=populations, factors=factors,
                   metropolis_factors=factors.copy(), applied=applied)


def live_convergence_factor_trace(run: LiveRun) -> np.ndarray:
    """Contraction factor of the applied matrix at each step, sized to
    the population current at that step."""
    return run.factors.copy()
