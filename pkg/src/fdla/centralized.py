"""Centralized reference solver for the optimal convergence factor.

Minimizes the spectral norm of W minus the averaging matrix over all
matrices with unit row and column sums supported on the graph's edges.
The optimal value is the benchmark the distributed engine is judged
against; the minimizer itself may be non-unique and is never compared.

The solver is deliberately independent of the distributed engine: it
shares only the low-level spectral kernels, and alternates the
spectral-norm prox with the feasible-set projection in a
Douglas-Rachford loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, is_connected
from .spectral import (ConvergenceError, averaging_matrix, frobenius_norm,
                       prox_spectral_norm)
from .weights import (WeightMatrix, check_consensus_condition,
                      convergence_factor)

__all__ = ["CentralSolution", "minimize_convergence_factor",
           "verify_solution"]


@dataclass(frozen=True)
class CentralSolution:
    """Optimal weights (one minimizer), their convergence factor, and
    the fixed-point residual the solver stopped at."""

    weights: WeightMatrix
    factor: float
    certificate: float


class FeasibleSetProjector:
    """Exact projection onto the feasible affine set of one graph.

    The set lives inside the support subspace, so projecting amounts to
    zeroing the forbidden entries and then applying the least-norm
    correction that restores unit row and column sums to the free
    entries. The pseudo-inverse of the (rank-deficient) sum-constraint
    matrix is computed once per graph; each apply is then a pair of
    small matrix-vector products. Agrees with the iterated Dykstra
    projection but runs in constant sweeps, which the centralized
    solver's inner loop needs.
    """

    def __init__(self, g: Graph):
        self.g = g
        n = g.n
        self.free = np.argwhere(g.support_mask() > 0)
        m = self.free.shape[0]
        b = np.zeros((2 * n, m))
        for col, (i, j) in enumerate(self.free):
            b[i, col] = 1.0
            b[n + j, col] = 1.0
        self.b = b
        self.b_pinv = np.linalg.pinv(b)
        self.target = np.ones(2 * n)

    def __call__(self, w: np.ndarray) -> np.ndarray:
        v = w[self.free[:, 0], self.free[:, 1]]
        v = v - self.b_pinv @ (self.b @ v - self.target)
        out = np.zeros_like(w)
        out[self.free[:, 0], self.free[:, 1]] = v
        return out


def minimize_convergence_factor(g: Graph, tol: float = 1e-8,
                                step: float = 1.0,
                                max_iter: int = 500_000) -> CentralSolution:
    """Douglas-Rachford solve of the constrained norm minimization.

    Alternates the feasible-set projection with the prox of the
    spectral-norm objective (shifted by the averaging matrix) until the
    fixed-point residual drops to tol. The returned matrix is feasible
    to machine precision; the optimal value is the contractual output.
    """
    if not is_connected(g):
        raise ValueError("the centralized problem requires a connected graph")
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = g.n
    j_mat = averaging_matrix(n)
    project = FeasibleSetProjector(g)
    z = np.zeros((n, n))
    x = project(z)
    residual = np.inf
    for _ in range(max_iter):
        y = j_mat + prox_spectral_norm(2.0 * x - z - j_mat, step)
        z = z + y - x
        x = project(z)
        residual = frobenius_norm(y - x) / step
        if residual <= tol:
            break
    else:
        raise ConvergenceError(
            f"splitting stalled at residual {residual:.3e} after "
            f"{max_iter} iterations")
    wm = WeightMatrix(x, g)
    return CentralSolution(weights=wm, factor=convergence_factor(wm),
                           certificate=residual)


def verify_solution(sol: CentralSolution, tol: float = 1e-6) -> bool:
    """True iff the solution satisfies the average-consensus conditions;
    guaranteed on connected graphs."""
    return check_consensus_condition(sol.weights, tol=tol).ok
