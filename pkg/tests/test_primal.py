import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distopt.consensus import ConsensusState, average_consensus_step
from distopt.errors import ConfigError
from distopt.graph import complete_graph, erdos_renyi_graph, metropolis_hastings_weights
from distopt.localsolve.reference import centralized_reference_solve
from distopt.primal import (StepSchedule, TrackingAgentState, dsg_step, gt_step, initial_estimates, run_primal)
from distopt.problems.generators import CostCoupledProblem, make_random_qp
from distopt.problems.oracles import L1Cost, QuadraticCost, Reals, least_squares_cost


def pair_problem():
    # f_0 = (x - 1)^2, f_1 = (x + 1)^2, minimizer 0
    costs = [least_squares_cost(np.eye(1), [1.0]), least_squares_cost(np.eye(1), [-1.0])]
    return CostCoupledProblem(costs, Reals(1), 1)


def test_schedule_values():
    s = StepSchedule.power(2.0, 0.5)
    assert s(0) == 2.0 and s(1) == 2.0 and s(4) == 1.0
    assert StepSchedule.harmonic(1.0)(3) == 0.25
    assert StepSchedule.power(1.0, 0.7).diminishing
    assert not StepSchedule.power(1.0, 0.4).diminishing
    assert not StepSchedule.constant(0.1).diminishing


def test_schedule_rejects_unknown_kind():
    with pytest.raises(ConfigError):
        StepSchedule("cosine")


def test_dsg_step_hand_rolled_pair():
    f0 = least_squares_cost(np.eye(1), [1.0])
    st_, v = dsg_step([[2.0], [0.0]], [0.5, 0.5], f0, 0.1)
    # v = 1, gradient 2 (v - 1) = 0
    assert v[0] == 1.0 and st_.x[0] == 1.0
    st_, v = dsg_step([[3.0], [0.0]], [0.5, 0.5], f0, 0.1)
    assert v[0] == 1.5 and st_.x[0] == pytest.approx(1.5 - 0.1 * 1.0)


def test_dsg_step_subgradient_and_projection():
    st_, _ = dsg_step([[0.5]], [1.0], L1Cost(1, 1.0), 1.0, project=lambda x: np.clip(x, 0.0, 1.0))
    assert st_.x[0] == 0.0


def test_dsg_step_rejects_mismatch():
    with pytest.raises(ConfigError):
        dsg_step([[1.0], [2.0]], [1.0], QuadraticCost([[1.0]], [0.0]), 0.1)
    with pytest.raises(ConfigError):
        dsg_step([[1.0]], [1.0], QuadraticCost([[1.0]], [0.0]), -0.1)


def test_gt_step_hand_rolled_pair():
    prob = pair_problem()
    f0, f1 = prob.costs
    s0 = TrackingAgentState.start(f0, [0.0])
    s1 = TrackingAgentState.start(f1, [0.0])
    assert s0.y[0] == -2.0 and s1.y[0] == 2.0
    w = [0.5, 0.5]
    n0 = gt_step(s0, [s0.x, s1.x], [s0.y, s1.y], w, f0, 0.1)
    n1 = gt_step(s1, [s1.x, s0.x], [s1.y, s0.y], w, f1, 0.1)
    assert n0.x[0] == pytest.approx(0.2) and n1.x[0] == pytest.approx(-0.2)
    # y+ = mean(y) + grad(x+) - grad(x) = 0 + 2 (0.2 - 1) - (-2)
    assert n0.y[0] == pytest.approx(0.4) and n1.y[0] == pytest.approx(-0.4)
    assert n0.y[0] + n1.y[0] == pytest.approx(f0.gradient(n0.x)[0] + f1.gradient(n1.x)[0])


def test_gt_requires_smooth_costs():
    f = L1Cost(1, 1.0)
    with pytest.raises(ConfigError):
        gt_step(TrackingAgentState(np.zeros(1), np.zeros(1), np.zeros(1)), [[0.0]], [[0.0]], [1.0], f, 0.1)


def test_single_agent_dsg_is_gradient_descent():
    f = least_squares_cost(np.eye(2), [1.0, -1.0])
    prob = CostCoupledProblem([f], Reals(2), 2)
    w = metropolis_hastings_weights(complete_graph(1))
    tr = run_primal(prob, w, "dsg", StepSchedule.constant(0.1), 5)
    x = np.zeros(2)
    for _ in range(5):
        x = x - 0.1 * f.gradient(x)
    assert np.array_equal(tr.final["x"][0], x)


def test_single_agent_gt_is_gradient_descent():
    f = least_squares_cost(np.eye(2), [1.0, -1.0])
    prob = CostCoupledProblem([f], Reals(2), 2)
    w = metropolis_hastings_weights(complete_graph(1))
    tr = run_primal(prob, w, "gt", StepSchedule.constant(0.1), 5)
    x = np.zeros(2)
    for _ in range(5):
        x = x - 0.1 * f.gradient(x)
    assert np.allclose(tr.final["x"][0], x, atol=1e-15)


def test_zero_step_dsg_is_average_consensus():
    prob = make_random_qp(N=6, d=3, seed=1)
    g = erdos_renyi_graph(6, 0.5, seed=1)
    w = metropolis_hastings_weights(g)
    X0 = initial_estimates(6, 3, "gaussian", seed=4)
    tr = run_primal(prob, w, "dsg", StepSchedule.constant(0.0), 7, x0=X0)
    state = ConsensusState(X0.copy())
    for _ in range(7):
        state = average_consensus_step(state, w)
    assert np.array_equal(tr.final["x"], state.z)


def test_initial_estimates_policies():
    assert np.array_equal(initial_estimates(3, 2), np.zeros((3, 2)))
    assert np.array_equal(initial_estimates(2, 2, "point", point=[1, 2]), [[1, 2], [1, 2]])
    assert np.array_equal(initial_estimates(2, 3, "gaussian", seed=9), initial_estimates(2, 3, "gaussian", seed=9))
    with pytest.raises(ConfigError):
        initial_estimates(2, 2, "point")


def test_run_primal_rejects_bad_setups():
    prob = make_random_qp(N=4, d=2, seed=0)
    w = metropolis_hastings_weights(complete_graph(4))
    with pytest.raises(ConfigError):
        run_primal(prob, w, "gt", StepSchedule.power(1.0, 0.7), 3)
    with pytest.raises(ConfigError):
        run_primal(prob, metropolis_hastings_weights(complete_graph(3)), "dsg", StepSchedule.constant(0.1), 3)
    with pytest.raises(ConfigError):
        run_primal(prob, w, "newton", StepSchedule.constant(0.1), 3)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), algo=st.sampled_from(["dsg", "gt"]))
def test_per_round_identities(seed, algo):
    N = 6
    prob = make_random_qp(N=N, d=3, seed=seed)
    g = erdos_renyi_graph(N, 0.6, seed=seed)
    w = metropolis_hastings_weights(g)
    sched = StepSchedule.constant(0.02) if algo == "gt" else StepSchedule.power(0.05, 0.7)
    X0 = initial_estimates(N, 3, "gaussian", seed=seed)
    tr = run_primal(prob, w, algo, sched, 40, x0=X0)
    assert np.nanmax(tr.column("average_dynamics")) <= 1e-12
    if algo == "gt":
        assert np.nanmax(tr.column("tracker_conservation")) <= 1e-12
        assert np.nanmax(tr.column("contraction_gap")) <= 1e-12


def test_gt_decays_linearly_on_quadratic():
    prob = make_random_qp(N=8, d=3, seed=2)
    ref = centralized_reference_solve(prob)
    w = metropolis_hastings_weights(erdos_renyi_graph(8, 0.5, seed=2))
    tr = run_primal(prob, w, "gt", StepSchedule.constant(0.01), 200, f_star=ref.value, x_star=ref.x)
    dist = tr.column("distance_to_opt")
    assert dist[-1] < 1e-9
    # equal windows shrink the error by comparable factors
    r1, r2 = dist[100] / dist[50], dist[150] / dist[100]
    assert r1 < 1e-2 and r2 < 1e-2
    assert np.log(r2) / np.log(r1) == pytest.approx(1.0, abs=0.3)


def test_dsg_converges_slowly_with_diminishing_step():
    prob = make_random_qp(N=5, d=2, seed=0)
    ref = centralized_reference_solve(prob)
    w = metropolis_hastings_weights(complete_graph(5))
    tr = run_primal(prob, w, "dsg", StepSchedule.power(0.05, 0.7), 3000, f_star=ref.value, x_star=ref.x,
                    check_every=100)
    assert tr.last("distance_to_opt") < 0.1 * tr.column("distance_to_opt")[0]
    assert tr.last("consensus_error") < 1e-2
