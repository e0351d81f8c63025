import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drgfmd.netgraph import (Graph, TopologySchedule, ScheduleError, is_connected,
                             metropolis_matrix, random_geometric_graph, random_schedule,
                             transition_product, mixing_constants, mixing_bound_check)


def test_path3_metropolis_weights():
    # degrees (1, 2, 1): edge weight 1/(1 + 2), diagonal takes the remainder
    W = metropolis_matrix(Graph.path(3)).entries
    expected = np.array([[2, 1, 0], [1, 1, 1], [0, 1, 2]]) / 3.0
    np.testing.assert_allclose(W, expected, atol=1e-15)


def test_complete_graph_is_uniform():
    W = metropolis_matrix(Graph.complete(5))
    np.testing.assert_allclose(W.entries, np.full((5, 5), 0.2), atol=1e-15)
    assert W.zeta == pytest.approx(0.2)


def test_isolated_node_keeps_its_value():
    W = metropolis_matrix(Graph.from_edges(3, [(0, 1)])).entries
    assert W[2, 2] == 1.0


def test_self_loop_rejected():
    with pytest.raises(ValueError):
        Graph.from_edges(3, [(1, 1)])


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=60, deadline=None)
def test_metropolis_doubly_stochastic(n, seed):
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.uniform() < 0.5]
    W = metropolis_matrix(Graph.from_edges(n, edges))
    assert W.check() == []
    np.testing.assert_array_equal(W.entries, W.entries.T)


def test_bfs_connectivity():
    assert is_connected(4, [(0, 1), (1, 2), (2, 3)])
    assert not is_connected(4, [(0, 1), (2, 3)])
    assert is_connected(1, [])


def test_large_radius_gives_complete_graph():
    g = random_geometric_graph(6, math.sqrt(2), np.random.default_rng(0))
    assert len(g.edges) == 15


def test_tiny_radius_exhausts_retries():
    with pytest.raises(RuntimeError, match="radius"):
        random_geometric_graph(8, 1e-4, np.random.default_rng(0), max_retries=5)


def test_window_validation():
    a = Graph.from_edges(4, [(0, 1), (2, 3)])
    b = Graph.from_edges(4, [(1, 2)])
    with pytest.raises(ScheduleError, match=r"\[0, 1\)"):
        TopologySchedule.from_graphs([a, b], 1).validate()
    TopologySchedule.from_graphs([a, b], 2).validate()


def test_schedule_round_trip():
    s = random_schedule(5, 0.6, 3, 2, np.random.default_rng(3))
    back = TopologySchedule.from_dict(s.to_dict())
    for t in range(6):
        np.testing.assert_array_equal(back.matrix(t), s.matrix(t))


def test_transition_product_matches_explicit_product():
    s = random_schedule(5, 0.6, 3, 3, np.random.default_rng(1))
    mats = [s.matrix(k) for k in range(2, 8)]
    explicit = np.linalg.multi_dot(mats[::-1])
    np.testing.assert_allclose(transition_product(s, 7, 2), explicit, atol=1e-14)
    np.testing.assert_array_equal(transition_product(s, 4, 4), s.matrix(4))
    with pytest.raises(ValueError):
        transition_product(s, 1, 2)


def test_mixing_constants_formula():
    Gam, gam = mixing_constants(0.2, 5, 1)
    assert Gam == pytest.approx(0.998 ** -2, rel=1e-14)
    assert gam == pytest.approx(0.998, rel=1e-14)
    _, gam3 = mixing_constants(0.2, 5, 3)
    assert gam3 == pytest.approx(0.998 ** (1 / 3), rel=1e-14)


def test_certificate_fields():
    s = TopologySchedule.static(Graph.complete(5))
    cert = mixing_bound_check(s, 50)
    assert cert.holds
    assert (cert.node_count, cert.window, cert.horizon) == (5, 1, 50)
    # complete graph mixes in one step
    assert cert.max_violation <= -cert.gamma_big * cert.gamma ** 50 + 0.8 + 1e-12


def test_random_schedule_windows_connected():
    for B in (1, 2, 3):
        s = random_schedule(5, 0.6, 4, B, np.random.default_rng(B))
        assert s.validate() is s
        assert s.connectivity_window == B
