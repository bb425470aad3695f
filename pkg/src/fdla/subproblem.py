"""Each agent's local primal minimization, solved to a certified tolerance.

The objective an agent minimizes at every outer round is

    (1/n) ||W - J||_2                               J = averaging matrix
    + row_dual' (W 1 - 1) + col_dual' (W' 1 - 1) + tr(W' agreement_dual)
    + (penalty/2) [ ||W 1 - 1||^2 + ||W' 1 - 1||^2
                    + sum_{j in N_i} ||W - anchor_j||_F^2 ]

over matrices whose row i vanishes off the agent's neighbor set (only
row i is constrained; the other rows are pulled into agreement by the
neighbor anchors). The anchor for neighbor j is the average of the two
agents' previous estimates, and the agent's own anchor is simply its
previous estimate.

The minimizer is found by three-operator splitting: the spectral-norm
term enters through its prox (shifted by J), the support constraint
through an exact projection (entrywise zeroing of the forbidden row-i
entries), and the remaining smooth quadratic through its gradient. The
objective is strongly convex (modulus penalty * |N_i|), so the
minimizer is unique.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .spectral import averaging_matrix, frobenius_norm, prox_spectral_norm

__all__ = [
    "PrimalInstance",
    "SolveReport",
    "primal_objective",
    "smooth_gradient",
    "support_mask_for_agent",
    "solve_primal",
    "optimality_residual",
]


def support_mask_for_agent(g: Graph, agent: int) -> np.ndarray:
    """All-ones matrix except row `agent`, which is zero off N_agent."""
    mask = np.ones((g.n, g.n))
    for j in range(g.n):
        if j not in g.neighbors(agent):
            mask[agent, j] = 0.0
    return mask


@dataclass
class PrimalInstance:
    """Frozen data of one agent's primal update.

    anchors maps every j in N_i (including i itself) to the target
    matrix the quadratic penalty pulls toward.
    """

    agent: int
    graph: Graph
    row_dual: np.ndarray
    col_dual: np.ndarray
    agreement_dual: np.ndarray
    anchors: dict
    penalty: float

    # derived, filled in __post_init__
    n: int = field(init=False)
    mask: np.ndarray = field(init=False)
    anchor_sum: np.ndarray = field(init=False)
    linear_term: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.penalty <= 0:
            raise ValueError("penalty must be positive")
        self.n = self.graph.n
        nbrs = self.graph.neighbors(self.agent)
        if set(self.anchors) != set(nbrs):
            raise ValueError(
                f"anchors must be indexed exactly by N_{self.agent + 1}")
        self.mask = support_mask_for_agent(self.graph, self.agent)
        self.anchor_sum = sum(self.anchors.values())
        # constant part of the smooth gradient
        self.linear_term = (np.outer(self.row_dual, np.ones(self.n))
                            + np.outer(np.ones(self.n), self.col_dual)
                            + self.agreement_dual)

    @property
    def num_anchors(self) -> int:
        return len(self.anchors)

    def lipschitz(self) -> float:
        """Gradient Lipschitz constant of the smooth part."""
        return self.penalty * (2 * self.n + self.num_anchors)


@dataclass
class SolveReport:
    """Result of one primal solve; on success the fixed-point residual
    is at or below the requested tolerance."""

    matrix: np.ndarray
    inner_iterations: int
    fixed_point_residual: float
    converged: bool
    certificate_residual: float


def smooth_gradient(inst: PrimalInstance, w: np.ndarray) -> np.ndarray:
    """Gradient of everything except the spectral-norm term."""
    r = w.sum(axis=1) - 1.0
    c = w.sum(axis=0) - 1.0
    return (inst.linear_term
            + inst.penalty * (r[:, None] + c[None, :])
            + inst.penalty * (inst.num_anchors * w - inst.anchor_sum))


def primal_objective(inst: PrimalInstance, w: np.ndarray) -> float:
    """Full objective value at w (support violation not checked).

    Diagnostic helper; the nonsmooth term uses a direct SVD so it stays
    robust on degenerate spectra.
    """
    n = inst.n
    j = averaging_matrix(n)
    ones = np.ones(n)
    r = w @ ones - ones
    c = w.T @ ones - ones
    quad = float(r @ r + c @ c)
    for anchor in inst.anchors.values():
        quad += frobenius_norm(w - anchor) ** 2
    top = float(np.linalg.svd(w - j, compute_uv=False)[0])
    return (top / n
            + float(inst.row_dual @ r) + float(inst.col_dual @ c)
            + float(np.sum(w * inst.agreement_dual))
            + 0.5 * inst.penalty * quad)


def solve_primal(inst: PrimalInstance, tol_sub: float = 1e-8,
                 max_inner: int = 50_000,
                 warm_start: np.ndarray | None = None) -> SolveReport:
    """Minimize the agent objective by three-operator splitting.

    Step size is 1/L for the smooth part's Lipschitz constant L. The
    returned matrix comes from the support projection, so its forbidden
    entries are exactly zero. Warm starts (the agent's previous
    estimate) cut the iteration count substantially in later rounds.

    On hitting max_inner the best iterate is returned with
    converged=False; the caller decides whether to accept it.
    """
    if tol_sub <= 0:
        raise ValueError("tol_sub must be positive")
    n = inst.n
    j = averaging_matrix(n)
    gamma = 1.0 / inst.lipschitz()
    z = np.zeros((n, n)) if warm_start is None else np.array(warm_start,
                                                             dtype=float)
    w = z * inst.mask
    grad = smooth_gradient(inst, w)
    residual = np.inf
    iterations = 0
    for iterations in range(1, max_inner + 1):
        v = 2.0 * w - z - gamma * grad
        # prox of gamma*(1/n)*||. - J||_2 via the shift W = J + Y
        x = j + prox_spectral_norm(v - j, gamma / n)
        z = z + x - w
        w_new = z * inst.mask
        residual = frobenius_norm(x - w) / gamma
        w = w_new
        grad = smooth_gradient(inst, w)
        if residual <= tol_sub:
            break
    converged = residual <= tol_sub
    # implicit subgradient of the nonsmooth term at x from the prox step,
    # projected onto the support subspace together with the smooth gradient
    subgrad = (v - x) / gamma
    certificate = frobenius_norm((subgrad + grad) * inst.mask)
    return SolveReport(matrix=w, inner_iterations=iterations,
                       fixed_point_residual=residual, converged=converged,
                       certificate_residual=certificate)


def optimality_residual(inst: PrimalInstance, w: np.ndarray,
                        subgradient: np.ndarray) -> float:
    """Norm of the support-projected first-order optimality map at w,
    given a subgradient of the spectral-norm term."""
    return frobenius_norm((subgradient + smooth_gradient(inst, w))
                          * inst.mask)
