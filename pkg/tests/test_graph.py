import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distopt.errors import ConfigError, NoContractionError
from distopt.graph import (CommGraph, GraphSchedule, WeightMatrix, check_connectivity, complete_graph,
                           contraction_factor, cycle_graph, diameter, erdos_renyi_graph, metropolis_hastings_weights,
                           path_graph, power_iteration_radius, push_sum_weights, read_edge_list, write_edge_list)


def brute_strong(g):
    n = g.n_agents
    reach = g.adjacency() | np.eye(n, dtype=bool)
    # Warshall closure: k is the outermost index of the product
    for k, i, j in itertools.product(range(n), repeat=3):
        if reach[i, k] and reach[k, j]:
            reach[i, j] = True
    return bool(reach.all())


def test_er_p_one_gives_complete_pair():
    g = erdos_renyi_graph(2, 1.0, seed=7)
    assert g.edges == frozenset({(0, 1), (1, 0)})


def test_er_p_zero_gives_no_edges():
    assert erdos_renyi_graph(5, 0.0, seed=3).edges == frozenset()


def test_er_rejects_single_node():
    with pytest.raises(ConfigError):
        erdos_renyi_graph(1, 0.5, seed=0)


def test_er_is_deterministic_and_connected():
    g1 = erdos_renyi_graph(30, 0.2, seed=11)
    g2 = erdos_renyi_graph(30, 0.2, seed=11)
    assert g1 == g2
    assert check_connectivity(g1, "connected")


def test_mh_weights_k2():
    w = metropolis_hastings_weights(complete_graph(2))
    assert np.array_equal(w.entries, np.full((2, 2), 0.5))


def test_mh_weights_path3():
    w = metropolis_hastings_weights(path_graph(3)).entries
    expected = np.array([[2 / 3, 1 / 3, 0], [1 / 3, 1 / 3, 1 / 3], [0, 1 / 3, 2 / 3]])
    assert np.allclose(w, expected, atol=1e-15)


def test_mh_weights_complete_uniform():
    w = metropolis_hastings_weights(complete_graph(6)).entries
    assert np.allclose(w, 1 / 6, atol=1e-15)


def test_mh_rejects_directed_and_disconnected():
    with pytest.raises(ConfigError):
        metropolis_hastings_weights(cycle_graph(3, directed=True))
    with pytest.raises(ConfigError):
        metropolis_hastings_weights(CommGraph(3, frozenset({(0, 1)})))


def test_weight_matrix_rejects_nonstochastic():
    with pytest.raises(ConfigError):
        WeightMatrix(np.array([[0.6, 0.6], [0.4, 0.4]]), "doubly")


def test_connectivity_examples():
    assert check_connectivity(cycle_graph(3, directed=True), "strong")
    a = CommGraph(2, frozenset({(0, 1)}), directed=True)
    b = CommGraph(2, frozenset({(1, 0)}), directed=True)
    alt = GraphSchedule.cyclic([a, b])
    assert not check_connectivity(alt, "strong")
    assert check_connectivity(alt, "T_strong", T=2)
    assert check_connectivity(alt, "jointly_strong")
    iso = CommGraph(3, frozenset({(0, 1)}))
    for kind in ("strong", "connected", "jointly_strong"):
        assert not check_connectivity(iso, kind)
    assert not check_connectivity(iso, "T_strong", T=3)


def test_aperiodic_schedule_without_trace_is_rejected():
    sched = GraphSchedule(3, lambda t: complete_graph(3))
    with pytest.raises(ConfigError):
        check_connectivity(sched, "jointly_strong")


def test_contraction_k2_is_zero():
    assert contraction_factor(metropolis_hastings_weights(complete_graph(2))) == pytest.approx(0.0, abs=1e-15)


def test_contraction_disconnected_raises():
    with pytest.raises(NoContractionError):
        contraction_factor(WeightMatrix(np.eye(2), "doubly"))


def test_contraction_path3_matches_power_iteration():
    w = metropolis_hastings_weights(path_graph(3))
    centered = w.entries - np.full((3, 3), 1 / 3)
    assert contraction_factor(w) == pytest.approx(power_iteration_radius(centered), abs=1e-9)


def test_diameter_path():
    assert diameter(path_graph(4)) == 3


def test_edge_list_round_trip(tmp_path):
    g = erdos_renyi_graph(8, 0.4, seed=2)
    write_edge_list(g, tmp_path / "g.txt")
    assert read_edge_list(tmp_path / "g.txt", 8) == g
    assert (tmp_path / "g.txt").read_text().split("\n")[0].split()[0] == "1"


def test_weight_csv_round_trip():
    w = metropolis_hastings_weights(erdos_renyi_graph(6, 0.5, seed=1))
    assert np.array_equal(WeightMatrix.from_csv(w.to_csv()).entries, w.entries)


def test_push_sum_weights_column_stochastic():
    w = push_sum_weights(erdos_renyi_graph(7, 0.3, seed=4, directed=True))
    assert np.abs(w.entries.sum(axis=0) - 1).max() <= 1e-12


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 12), p=st.floats(0.2, 1.0), seed=st.integers(0, 10_000))
def test_mh_symmetric_doubly_stochastic(n, p, seed):
    w = metropolis_hastings_weights(erdos_renyi_graph(n, p, seed)).entries
    assert np.array_equal(w, w.T)
    assert np.abs(w.sum(axis=0) - 1).max() <= 1e-12
    assert np.abs(w.sum(axis=1) - 1).max() <= 1e-12
    assert (w >= 0).all()


@settings(max_examples=20, deadline=None)
@given(n=st.integers(2, 10), seed=st.integers(0, 10_000))
def test_contraction_inequality(n, seed):
    w = metropolis_hastings_weights(erdos_renyi_graph(n, 0.4, seed))
    sigma = contraction_factor(w)
    assert 0 <= sigma < 1
    rng = np.random.default_rng(seed)
    for _ in range(100):
        z = rng.standard_normal(n)
        zbar = z.mean()
        assert np.linalg.norm(w.entries @ z - zbar) <= sigma * np.linalg.norm(z - zbar) + 1e-12


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 8), p=st.floats(0.0, 1.0), seed=st.integers(0, 10_000))
def test_strong_connectivity_matches_brute_force(n, p, seed):
    g = erdos_renyi_graph(n, p, seed, directed=True, require=None)
    assert check_connectivity(g, "strong") == brute_strong(g)
