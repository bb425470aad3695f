import numpy as np
import pytest

from fdla.graph import (add_agents, er_random, from_edge_list, is_connected,
                        read_graph, write_graph)


def test_path_graph_neighbor_sets():
    g = from_edge_list(3, [(1, 2), (2, 3)])
    # middle node sees both ends plus itself
    assert sorted(g.neighbors(1)) == [0, 1, 2]
    assert sorted(g.neighbors(0)) == [0, 1]
    assert g.degree(1) == 2 and g.degree(0) == 1


def test_single_node_has_self_loop():
    g = from_edge_list(1, [])
    assert sorted(g.neighbors(0)) == [0]
    assert g.has_edge(0, 0)


def test_duplicate_and_reversed_edges_collapse():
    g = from_edge_list(4, [(1, 2), (2, 1)])
    assert len(g.edges) == 4 + 1  # self-pairs plus one proper edge
    assert g.num_proper_edges() == 1


def test_edge_indices_validated():
    with pytest.raises(ValueError):
        from_edge_list(3, [(0, 1)])
    with pytest.raises(ValueError):
        from_edge_list(3, [(1, 4)])
    with pytest.raises(ValueError):
        from_edge_list(0, [])


def test_self_loop_and_symmetry_invariants():
    g = er_random(12, 0.3, 5)
    for i in range(g.n):
        assert i in g.neighbors(i)
        for j in g.neighbors(i):
            assert i in g.neighbors(j)


def test_connectivity():
    assert is_connected(from_edge_list(3, [(1, 2), (2, 3)]))
    assert not is_connected(from_edge_list(2, []))
    assert is_connected(er_random(10, 1.0, 0))


def test_er_extremes_and_determinism():
    full = er_random(10, 1.0, 3)
    assert full.num_proper_edges() == 45
    empty = er_random(10, 0.0, 3)
    assert empty.num_proper_edges() == 0
    assert not is_connected(empty)
    a = er_random(10, 0.5, 77)
    b = er_random(10, 0.5, 77)
    assert a.edges == b.edges
    c = er_random(10, 0.5, 78)
    assert c.edges != a.edges


def test_er_rejects_bad_probability():
    with pytest.raises(ValueError):
        er_random(5, 1.5, 0)
    with pytest.raises(ValueError):
        er_random(5, -0.1, 0)


def test_add_agents_grows_and_keeps_old_edges():
    g = from_edge_list(6, [(1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 1)])
    grown = add_agents(g, 3, [(7, 1), (7, 8), (8, 3), (9, 5), (9, 6)])
    assert grown.n == 9
    assert is_connected(grown)
    for e in g.edges:
        assert e in grown.edges
    assert grown.has_edge(6, 0) and grown.has_edge(8, 5)


def test_add_agents_isolated_newcomer_is_flaggable():
    g = from_edge_list(2, [(1, 2)])
    grown = add_agents(g, 1, [])
    assert grown.n == 3
    assert not is_connected(grown)


def test_add_zero_agents_is_identity():
    g = er_random(5, 0.6, 1)
    same = add_agents(g, 0, [])
    assert same.n == g.n and same.edges == g.edges


def test_support_mask_matches_edges():
    g = from_edge_list(3, [(1, 2), (2, 3)])
    mask = g.support_mask()
    expected = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]], dtype=float)
    assert np.array_equal(mask, expected)


def test_graph_file_round_trip(tmp_path):
    g = er_random(8, 0.4, 9)
    path = tmp_path / "g.txt"
    write_graph(g, path)
    back = read_graph(path)
    assert back.n == g.n and back.edges == g.edges
    text = path.read_text().splitlines()
    assert text[0] == "8"
    for line in text[1:]:
        i, j = map(int, line.split())
        assert i != j and 1 <= i <= 8 and 1 <= j <= 8
