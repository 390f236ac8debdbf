import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distopt.consensus import (ConsensusState, DynAvgState, PushSumState, average_consensus_step, disagreement,
                               dynamic_average_step, push_sum_step)
from distopt.errors import ConfigError
from distopt.graph import (WeightMatrix, complete_graph, contraction_factor, erdos_renyi_graph,
                           metropolis_hastings_weights, path_graph, push_sum_weights)


def test_k2_average():
    w = metropolis_hastings_weights(complete_graph(2))
    assert np.array_equal(average_consensus_step(ConsensusState([0.0, 2.0]), w).z.ravel(), [1.0, 1.0])


def test_single_agent_unchanged():
    w = WeightMatrix(np.ones((1, 1)))
    z = np.array([[3.5, -1.0]])
    assert np.array_equal(average_consensus_step(ConsensusState(z), w).z, z)


def test_path3_average():
    w = metropolis_hastings_weights(path_graph(3))
    out = average_consensus_step(ConsensusState([3.0, 0.0, 0.0]), w).z.ravel()
    assert np.allclose(out, [2.0, 1.0, 0.0], atol=1e-15)


def test_mismatched_size_rejected():
    w = metropolis_hastings_weights(path_graph(3))
    with pytest.raises(ConfigError):
        average_consensus_step(ConsensusState([1.0, 2.0]), w)


def test_push_sum_single_agent():
    st_ = PushSumState.start([[2.0]])
    w = WeightMatrix(np.ones((1, 1)), "column")
    for _ in range(5):
        st_ = push_sum_step(st_, w)
    assert st_.phi[0] == 1.0 and st_.z[0, 0] == 2.0


def test_push_sum_two_cycle_hand_roll():
    B = WeightMatrix(np.array([[0.5, 0.0], [0.5, 1.0]]), "column")
    st_ = push_sum_step(PushSumState.start([4.0, 0.0]), B)
    # s = B (4, 0) = (2, 2); phi = B (1, 1) = (0.5, 1.5)
    assert np.array_equal(st_.s.ravel(), [2.0, 2.0])
    assert np.array_equal(st_.phi, [0.5, 1.5])
    assert np.allclose(st_.z.ravel(), [4.0, 4.0 / 3.0])
    assert st_.phi.sum() == pytest.approx(2.0, abs=1e-15)


def test_dynamic_average_constant_signal_is_consensus():
    w = metropolis_hastings_weights(path_graph(3))
    r = np.array([[3.0], [0.0], [0.0]])
    dyn = DynAvgState.start(r)
    avg = ConsensusState(r)
    for _ in range(10):
        dyn = dynamic_average_step(dyn, w, r)
        avg = average_consensus_step(avg, w)
    assert np.array_equal(dyn.z, avg.z)


def test_dynamic_average_single_agent_tracks_signal():
    w = WeightMatrix(np.ones((1, 1)))
    dyn = DynAvgState.start([[0.0]])
    for t in range(1, 6):
        dyn = dynamic_average_step(dyn, w, [[float(t * t)]])
        assert dyn.z[0, 0] == t * t


def test_dynamic_average_k2_mean_zero():
    w = metropolis_hastings_weights(complete_graph(2))
    dyn = DynAvgState.start([[0.0], [0.0]])
    for t in range(1, 4):
        dyn = dynamic_average_step(dyn, w, [[t], [-t]])
        assert dyn.z.mean() == 0.0


def test_dynamic_average_rejects_shape_drift():
    w = metropolis_hastings_weights(complete_graph(2))
    dyn = DynAvgState.start([[0.0], [0.0]])
    with pytest.raises(ConfigError):
        dynamic_average_step(dyn, w, [[0.0, 1.0], [0.0, 1.0]])


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 12), seed=st.integers(0, 10_000))
def test_average_preserved_and_geometric(n, seed):
    w = metropolis_hastings_weights(erdos_renyi_graph(n, 0.4, seed))
    sigma = contraction_factor(w)
    rng = np.random.default_rng(seed)
    z0 = rng.standard_normal((n, 3))
    st_ = ConsensusState(z0)
    mean0 = z0.mean(axis=0)
    d0 = np.linalg.norm(z0 - mean0)
    for t in range(1, 40):
        st_ = average_consensus_step(st_, w)
        assert np.abs(st_.mean - mean0).max() <= 1e-12 * t
        assert np.linalg.norm(st_.z - mean0) <= sigma ** t * d0 + 1e-9


@settings(max_examples=15, deadline=None)
@given(n=st.integers(2, 10), seed=st.integers(0, 10_000))
def test_push_sum_ratio_consensus(n, seed):
    w = push_sum_weights(erdos_renyi_graph(n, 0.4, seed, directed=True))
    rng = np.random.default_rng(seed)
    z0 = rng.standard_normal((n, 2))
    st_ = PushSumState.start(z0)
    for _ in range(500):
        st_ = push_sum_step(st_, w)
        assert abs(st_.phi.sum() - n) <= 1e-12
    assert np.abs(st_.z - z0.mean(axis=0)).max() < 1e-8


def test_dynamic_average_tracks_frozen_signal():
    n = 8
    w = metropolis_hastings_weights(erdos_renyi_graph(n, 0.4, 5))
    rng = np.random.default_rng(0)
    r = rng.standard_normal((n, 2))
    dyn = DynAvgState.start(r)
    for t in range(300):
        if t < 50:
            r = r + 0.1 * rng.standard_normal((n, 2))
        dyn = dynamic_average_step(dyn, w, r)
    assert disagreement(dyn.z) < 1e-9
    assert np.abs(dyn.z - r.mean(axis=0)).max() < 1e-9
