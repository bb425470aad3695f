import numpy as np
import pytest

from fdla.centralized import (FeasibleSetProjector,
                              minimize_convergence_factor, verify_solution)
from fdla.graph import er_random, from_edge_list, is_connected
from fdla.spectral import averaging_matrix, spectral_norm, spectral_radius
from fdla.weights import convergence_factor, metropolis

from oracles import path3_optimal_factor


def complete_graph(n):
    return from_edge_list(n, [(i, j) for i in range(1, n + 1)
                              for j in range(i + 1, n + 1)])


def connected_er(n, p, seed):
    while True:
        g = er_random(n, p, seed)
        if is_connected(g):
            return g
        seed += 1


def test_complete_graph_optimum_is_averaging_matrix():
    sol = minimize_convergence_factor(complete_graph(5), tol=1e-9)
    assert sol.factor <= 1e-8
    assert np.abs(sol.weights.matrix - averaging_matrix(5)).max() <= 1e-7


def test_single_node():
    sol = minimize_convergence_factor(from_edge_list(1, []), tol=1e-9)
    assert sol.factor <= 1e-12
    assert sol.weights.matrix[0, 0] == pytest.approx(1.0)


def test_path3_matches_brute_force_oracle():
    sol = minimize_convergence_factor(from_edge_list(3, [(1, 2), (2, 3)]),
                                      tol=1e-9)
    assert sol.factor == pytest.approx(path3_optimal_factor(), abs=1e-6)


def test_rejects_disconnected():
    with pytest.raises(ValueError):
        minimize_convergence_factor(from_edge_list(3, [(1, 2)]))


def test_solution_is_feasible_and_consensual():
    g = connected_er(6, 0.5, 12)
    sol = minimize_convergence_factor(g, tol=1e-8)
    w = sol.weights.matrix
    ones = np.ones(6)
    assert np.abs(w @ ones - ones).max() <= 1e-12
    assert np.abs(w.T @ ones - ones).max() <= 1e-12
    assert np.all(w[g.support_mask() == 0.0] == 0.0)
    assert verify_solution(sol)


@pytest.mark.parametrize("seed", range(5))
def test_consensus_condition_on_er_graphs(seed):
    g = connected_er(7, 0.5, 60 + seed)
    sol = minimize_convergence_factor(g, tol=1e-8)
    assert verify_solution(sol)
    d = sol.weights.matrix - averaging_matrix(7)
    assert spectral_norm(d, tol=1e-10) < 1.0
    assert spectral_radius(d, tol=1e-9) < 1.0


@pytest.mark.parametrize("seed", range(4))
def test_optimality_lower_bound_vs_feasible_matrices(seed):
    # no feasible matrix may beat the reported optimal value
    g = connected_er(6, 0.6, 30 + seed)
    sol = minimize_convergence_factor(g, tol=1e-8)
    assert convergence_factor(metropolis(g)) >= sol.factor - 2e-8
    # random feasible points via the exact projector
    project = FeasibleSetProjector(g)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        w = project(rng.normal(size=(6, 6)))
        assert spectral_norm(w - averaging_matrix(6), tol=1e-10) >= \
            sol.factor - 2e-8


def test_factor_invariant_under_vertex_relabeling():
    g = connected_er(6, 0.5, 44)
    sol = minimize_convergence_factor(g, tol=1e-9)
    rng = np.random.default_rng(0)
    perm = rng.permutation(6)
    # relabel: edge (i, j) becomes (perm[i], perm[j])
    pairs = [(int(perm[i]) + 1, int(perm[j]) + 1)
             for i, j in g.edges if i != j]
    g_perm = from_edge_list(6, pairs)
    sol_perm = minimize_convergence_factor(g_perm, tol=1e-9)
    assert sol_perm.factor == pytest.approx(sol.factor, abs=1e-7)


def test_metropolis_never_beats_optimum_and_is_reachable():
    # sanity on a graph where metropolis is clearly suboptimal
    g = from_edge_list(3, [(1, 2), (2, 3)])
    sol = minimize_convergence_factor(g, tol=1e-9)
    wm_factor = convergence_factor(metropolis(g))
    assert sol.factor < wm_factor - 0.05
