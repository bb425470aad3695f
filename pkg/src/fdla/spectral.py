"""Dense linear-algebra kernels used by the weight-design solvers.

Matrices are plain float ndarrays. The kernels here are deliberately
self-contained: the largest singular value comes from power iteration,
the spectral radius from renormalized repeated squaring, and the
feasible-set projection from Dykstra's alternating scheme. Only the
full SVD defers to LAPACK.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

__all__ = [
    "ConvergenceError",
    "averaging_matrix",
    "frobenius_norm",
    "spectral_norm",
    "spectral_radius",
    "svd",
    "project_nuclear_ball",
    "prox_spectral_norm",
    "project_feasible",
]


class ConvergenceError(RuntimeError):
    """An iterative kernel failed to meet its tolerance within its cap."""


def averaging_matrix(n: int) -> np.ndarray:
    """The rank-one averaging operator (all entries 1/n)."""
    return np.full((n, n), 1.0 / n)


def frobenius_norm(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.asarray(a, dtype=float) ** 2)))


def _power_start(n: int, perturbed: bool) -> np.ndarray:
    v = np.ones(n)
    if perturbed:
        # deterministic, aperiodic-ish offsets so the restart is not
        # orthogonal to any fixed subspace the plain start might hit
        v = v + 0.5 * np.cos(1.0 + np.arange(n))
    return v / np.linalg.norm(v)


def spectral_norm(a: np.ndarray, tol: float = 1e-10,
                  max_iter: int = 100_000) -> float:
    """Largest singular value by power iteration on A^T A.

    Starts from the normalized all-ones vector; restarts once from a
    deterministic perturbed vector if the iteration stalls at zero or
    the limit violates the Frobenius lower bound ||A||_F^2 / rank. The
    stop test extrapolates the Rayleigh-quotient plateau so a small
    spectral gap cannot trigger a premature exit.

    Raises ConvergenceError if the cap is hit; callers may fall back to
    a full SVD.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError("expected a matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    m, n = a.shape
    fro2 = float(np.sum(a * a))
    if fro2 == 0.0:
        return 0.0
    floor = fro2 / min(m, n)  # sigma_max^2 is at least this

    for attempt in range(2):
        v = _power_start(n, perturbed=attempt == 1)
        lam_prev = None
        delta_prev = None
        for it in range(max_iter):
            w = a @ v
            lam = float(w @ w)
            v = a.T @ w
            nv = np.linalg.norm(v)
            if nv == 0.0 or lam == 0.0:
                break  # stalled in the kernel of A; restart perturbed
            v /= nv
            if lam_prev is not None:
                delta = abs(lam - lam_prev)
                if delta_prev is not None and delta <= 0.5 * tol * lam:
                    # extrapolate the geometric tail: remaining error is
                    # about delta * r / (1 - r) with ratio r of deltas;
                    # a growing ratio marks a false plateau, keep going
                    r = delta / delta_prev if delta_prev > 0 else 0.0
                    tail = delta * r / (1.0 - r) if r < 1.0 else math.inf
                    if tail <= 0.5 * tol * lam:
                        if lam >= floor * (1.0 - 1e-9):
                            return math.sqrt(lam)
                        break  # converged to a minor subspace; restart
                delta_prev = delta if delta > 0 else delta_prev
            lam_prev = lam
        else:
            raise ConvergenceError(
                f"power iteration did not converge in {max_iter} steps")
    raise ConvergenceError("power iteration stalled from both start vectors")


def spectral_radius(a: np.ndarray, tol: float = 1e-9,
                    max_squarings: int = 40) -> float:
    """Spectral radius via the limit of ||A^(2^m)||_F^(1/2^m).

    Each squaring renormalizes by the Frobenius norm, so powers up to
    2^40 are reachable without overflow. Symmetric input short-circuits
    to spectral_norm, which is exact for it. If the cap is reached the
    last iterate is returned with a low-confidence warning.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("spectral radius needs a square matrix")
    if tol <= 0:
        raise ValueError("tol must be positive")
    fro = frobenius_norm(a)
    if fro == 0.0:
        return 0.0
    if frobenius_norm(a - a.T) <= 1e-13 * (1.0 + fro):
        try:
            return spectral_norm(a, tol=min(tol, 1e-10))
        except ConvergenceError:
            pass  # tight spectrum; the squaring limit below handles it

    acc = 0.0  # running sum of 2^-l * log ||C_l||_F
    c = a.copy()
    prev = math.inf
    for m in range(max_squarings + 1):
        nm = frobenius_norm(c)
        if nm == 0.0:
            return 0.0  # nilpotent to machine precision
        est = math.exp(acc + math.log(nm) / 2.0 ** m)
        if m > 0 and abs(est - prev) <= tol * max(est, 1e-300):
            return est
        prev = est
        acc += math.log(nm) / 2.0 ** m
        c = c / nm
        c = c @ c
    warnings.warn("spectral_radius: squaring cap reached, result is "
                  "low-confidence", RuntimeWarning)
    return prev


def svd(a: np.ndarray):
    """Full SVD: returns (U, s, V) with A = U diag(s) V^T, s descending."""
    u, s, vt = np.linalg.svd(np.asarray(a, dtype=float))
    return u, s, vt.T


def _project_simplex_ball(s: np.ndarray, radius: float) -> np.ndarray:
    """Project a nonnegative descending vector onto {x >= 0, sum x <= r}."""
    if s.sum() <= radius:
        return s
    # sort-and-threshold; s is already descending
    css = np.cumsum(s) - radius
    ks = np.arange(1, s.size + 1)
    cond = s - css / ks > 0
    k = int(np.nonzero(cond)[0][-1]) + 1
    theta = css[k - 1] / k
    return np.maximum(s - theta, 0.0)


def project_nuclear_ball(a: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the unit nuclear-norm ball."""
    u, s, v = svd(a)
    s_proj = _project_simplex_ball(s, 1.0)
    return (u * s_proj) @ v.T


def prox_spectral_norm(x: np.ndarray, lam: float) -> np.ndarray:
    """argmin_W (1/2)||W - X||_F^2 + lam ||W||_2.

    Computed through the Moreau identity: X minus lam times the
    nuclear-ball projection of X / lam.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    x = np.asarray(x, dtype=float)
    return x - lam * project_nuclear_ball(x / lam)


def _project_row_col_sums(x: np.ndarray) -> np.ndarray:
    """Closed-form projection onto {W : W 1 = 1, W^T 1 = 1}."""
    n = x.shape[0]
    r = 1.0 - x.sum(axis=1)
    c = 1.0 - x.sum(axis=0)
    alpha = r.sum() / n
    mu = r / n
    nu = (c - alpha) / n
    return x + mu[:, None] + nu[None, :]


def project_feasible(w: np.ndarray, g, tol: float = 1e-10,
                     max_iter: int = 100_000) -> np.ndarray:
    """Projection onto {W : W 1 = 1, W^T 1 = 1, W_ij = 0 off the edge set}.

    Dykstra's alternating projections between the support subspace and
    the row/column-sum affine set. The returned iterate comes from the
    support step, so the forbidden entries are exactly zero and the sum
    constraints hold to within tol. Nonempty intersection is guaranteed
    on connected graphs (the Metropolis matrix is a witness).
    """
    mask = g.support_mask()
    x = np.asarray(w, dtype=float)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_iter):
        y = (x + p) * mask
        p = x + p - y
        x_new = _project_row_col_sums(y + q)
        q = y + q - x_new
        x = x_new
        sum_res = max(np.abs(y.sum(axis=1) - 1.0).max(),
                      np.abs(y.sum(axis=0) - 1.0).max())
        if sum_res <= tol:
            return y
    raise ConvergenceError(
        f"Dykstra projection did not reach {tol} in {max_iter} sweeps "
        "(is the graph connected?)")
