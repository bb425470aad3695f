"""Weight matrices for the consensus protocol and their validity checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, is_connected
from .spectral import (ConvergenceError, averaging_matrix, spectral_norm,
                       spectral_radius, svd)

__all__ = [
    "WeightMatrix",
    "ConsensusCheck",
    "metropolis",
    "check_consensus_condition",
    "convergence_factor",
    "is_primitive",
    "assemble_from_rows",
    "save_weight_csv",
    "load_weight_csv",
]


@dataclass(frozen=True)
class WeightMatrix:
    """An n x n weight matrix tied to the graph whose edges support it.

    The topological constraint is strict: entries off the edge set must
    be exactly zero.
    """

    matrix: np.ndarray
    graph: Graph

    def __post_init__(self):
        w = np.asarray(self.matrix, dtype=float)
        n = self.graph.n
        if w.shape != (n, n):
            raise ValueError(f"matrix shape {w.shape} does not match n={n}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weight matrix has non-finite entries")
        off = w * (1.0 - self.graph.support_mask())
        if np.any(off != 0.0):
            bad = np.argwhere(off != 0.0)[0]
            raise ValueError(
                f"nonzero weight at non-edge ({bad[0] + 1},{bad[1] + 1})")
        object.__setattr__(self, "matrix", w)

    @property
    def n(self) -> int:
        return self.graph.n


@dataclass(frozen=True)
class ConsensusCheck:
    """Outcome of the necessary-and-sufficient consensus conditions:
    unit row sums, unit column sums, and contraction of the error
    dynamics (spectral radius of W minus the averaging matrix below 1).
    """

    row_ok: bool
    col_ok: bool
    rho_value: float
    rho_ok: bool

    @property
    def ok(self) -> bool:
        return self.row_ok and self.col_ok and self.rho_ok


def metropolis(g: Graph) -> WeightMatrix:
    """Locally computable Metropolis weights.

    Edge (i, j) gets min{1/(1+d_i), 1/(1+d_j)} with d the proper degree;
    each diagonal entry completes its row sum to exactly 1. The result
    is symmetric and nonnegative on connected graphs.
    """
    if not is_connected(g):
        raise ValueError("Metropolis weights require a connected graph")
    n = g.n
    w = np.zeros((n, n))
    for i, j in g.edges:
        if i != j:
            w[i, j] = w[j, i] = min(1.0 / (1 + g.degree(i)),
                                    1.0 / (1 + g.degree(j)))
    for i in range(n):
        w[i, i] = 1.0 - w[i].sum()
    return WeightMatrix(w, g)


def _as_array(w) -> np.ndarray:
    return w.matrix if isinstance(w, WeightMatrix) else np.asarray(w, float)


def check_consensus_condition(w, tol: float = 1e-8) -> ConsensusCheck:
    """Check the conditions under which x(t+1) = W x(t) reaches the average."""
    a = _as_array(w)
    n = a.shape[0]
    ones = np.ones(n)
    row_ok = float(np.linalg.norm(a @ ones - ones)) <= tol
    col_ok = float(np.linalg.norm(a.T @ ones - ones)) <= tol
    rho = spectral_radius(a - averaging_matrix(n), tol=min(tol, 1e-9))
    return ConsensusCheck(row_ok=row_ok, col_ok=col_ok, rho_value=rho,
                          rho_ok=rho < 1.0 - tol)


def convergence_factor(w) -> float:
    """Per-step contraction factor of the consensus error: the largest
    singular value of W minus the averaging matrix."""
    a = _as_array(w)
    d = a - averaging_matrix(a.shape[0])
    try:
        return spectral_norm(d, tol=1e-11)
    except ConvergenceError:
        return float(svd(d)[1][0])


def is_primitive(w) -> bool:
    """True iff W^(n-1) is entrywise positive (threshold 1e-14).

    Defined for nonnegative matrices only; on a connected graph this
    power suffices because every node pair is linked by a path of at
    most n-1 hops.
    """
    a = _as_array(w)
    if np.any(a < 0.0):
        raise ValueError("primitivity is defined for nonnegative matrices")
    n = a.shape[0]
    return bool(np.all(np.linalg.matrix_power(a, max(n - 1, 1)) > 1e-14))


def assemble_from_rows(rows, g: Graph) -> WeightMatrix:
    """Stack per-agent weight rows into one matrix.

    Row i must be zero outside N_i; violations are rejected rather than
    truncated.
    """
    n = g.n
    if len(rows) != n:
        raise ValueError(f"need {n} rows, got {len(rows)}")
    w = np.zeros((n, n))
    for i, row in enumerate(rows):
        row = np.asarray(row, dtype=float)
        if row.shape != (n,):
            raise ValueError(f"row {i + 1} has shape {row.shape}")
        for j in range(n):
            if row[j] != 0.0 and not g.has_edge(i, j):
                raise ValueError(
                    f"row {i + 1} carries weight for non-neighbor {j + 1}")
        w[i] = row
    return WeightMatrix(w, g)


def save_weight_csv(w, path) -> None:
    """Write a weight matrix as CSV with 17 significant digits."""
    a = _as_array(w)
    with open(path, "w") as fh:
        for row in a:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_weight_csv(path, g: Graph | None = None):
    """Read a weight-matrix CSV; attach a graph to get a WeightMatrix."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(tok) for tok in line.split(",")])
    a = np.array(rows, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"weight CSV {path} is not square")
    if g is None:
        return a
    return WeightMatrix(a, g)
