import itertools

import numpy as np
import pytest

from distopt.cexchange import pooled_lexmin
from distopt.errors import ConfigError, InfeasibleError
from distopt.localsolve.qp import qp_solve
from distopt.localsolve.reference import centralized_reference_solve
from distopt.problems.descriptors import Disk, Halfspace, from_payload
from distopt.problems.generators import (lasso_from_data, load_problem, logistic_from_data, make_lasso,
                                         make_logistic, make_microgrid, make_random_lp, make_random_qp,
                                         make_soft_svm, make_target_localization, make_task_assignment,
                                         qp_from_data, save_problem, svm_from_data)
from distopt.problems.generators import CommonCostProblem
from distopt.problems.oracles import LogisticCost, linear_cost

from oracles import grid_minimum


def test_lasso_identity_zero_rhs():
    prob = lasso_from_data([np.eye(3)], [np.zeros(3)], rho=0.0)
    assert np.allclose(centralized_reference_solve(prob).x, 0.0, atol=1e-12)


def test_lasso_large_rho_kills_fit():
    prob = lasso_from_data([[[1.0]]] * 4, [[1.0]] * 4, rho=100.0)
    assert np.allclose(centralized_reference_solve(prob).x, 0.0, atol=1e-12)


def test_lasso_matches_convex_solver():
    cp = pytest.importorskip("cvxpy")
    prob = make_lasso(N=10, n_i=8, d=5, rho=2.0, seed=3)
    Ds, bs = prob.meta["data"]["D"], prob.meta["data"]["b"]
    x = cp.Variable(5)
    obj = sum(cp.sum_squares(np.array(D) @ x - np.array(b)) for D, b in zip(Ds, bs)) + 2.0 * cp.norm1(x)
    val = cp.Problem(cp.Minimize(obj)).solve()
    assert centralized_reference_solve(prob).value == pytest.approx(val, abs=1e-6)


def test_logistic_defaults():
    prob = make_logistic()
    assert prob.n_agents == 30 and prob.dim == 6
    assert prob.meta["C"] == 0.01


def test_logistic_gradient_at_zero():
    p = np.array([[0.4, -1.2]])
    f = LogisticCost(p, np.array([1.0]), reg=0.3)
    assert np.allclose(f.gradient(np.zeros(3)), [-0.2, 0.6, -0.5], atol=1e-15)


def test_logistic_heavy_regularization_shrinks_weights():
    rng = np.random.default_rng(0)
    pts = [rng.normal(0, 1, (5, 2)) for _ in range(3)]
    labels = [np.sign(rng.standard_normal(5)) for _ in range(3)]
    w_small = centralized_reference_solve(logistic_from_data(pts, labels, 1e6)).x[:2]
    w_loose = centralized_reference_solve(logistic_from_data(pts, labels, 1e-2)).x[:2]
    assert np.linalg.norm(w_small) < 1e-4 < np.linalg.norm(w_loose)


def test_svm_defaults():
    prob = make_soft_svm()
    assert prob.n_agents == 30 and prob.dim == 2 + 1 + 30 and prob.M == 10.0
    labels = prob.meta["data"]["labels"]
    assert labels.count(1.0) == 15 and labels.count(-1.0) == 15


def test_svm_two_separable_points():
    prob = svm_from_data([[1.0, 0.0], [-1.0, 0.0]], [1.0, -1.0], C=10.0, M=10.0)
    x = centralized_reference_solve(prob).x
    assert np.allclose(x, [1.0, 0.0, 0.0, 0.0, 0.0], atol=1e-9)


def test_svm_zero_c_flagged_degenerate():
    assert svm_from_data([[1.0]], [1.0], C=0.0).meta["degenerate"]


def _assignment_value(prob):
    return centralized_reference_solve(prob).value


def test_task_assignment_two_agents():
    prob = make_task_assignment(2, costs=[[0.0, 1.0], [1.0, 0.0]])
    rep = centralized_reference_solve(prob)
    assert rep.value == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(rep.info["blocks"][0], [1.0, 0.0], atol=1e-9)


def test_task_assignment_single_agent():
    rep = centralized_reference_solve(make_task_assignment(1, costs=[[2.5]]))
    assert np.allclose(rep.info["blocks"][0], [1.0])


@pytest.mark.parametrize("N", [3, 4])
def test_task_assignment_brute_force(N):
    rng = np.random.default_rng(N)
    C = rng.uniform(0, 1, (N, N))
    best = min(sum(C[i, p[i]] for i in range(N)) for p in itertools.permutations(range(N)))
    assert _assignment_value(make_task_assignment(N, costs=C)) == pytest.approx(best, abs=1e-9)


def test_task_assignment_without_matching_rejected():
    with pytest.raises(InfeasibleError):
        make_task_assignment(2, edges=[(0, 0), (1, 0)])


def test_microgrid_default_configuration():
    prob = make_microgrid(seed=0)
    assert prob.n_agents == 10 and prob.S == 12
    assert [p.kind for p in prob.pieces] == ["generator"] * 4 + ["storage"] * 3 + ["load"] * 2 + ["trade"]
    assert (prob.coupling(prob.slater) < -1e-6).all()
    assert all(np.isfinite(r) and r > 0 for r in prob.radii())


def test_microgrid_single_generator_rides_demand():
    D = np.full(12, 1.3)
    prob = make_microgrid(n_gen=1, n_stor=0, n_conl=0, trade_E=0.0, demand=D)
    blocks = centralized_reference_solve(prob).info["blocks"]
    assert np.allclose(blocks[0], D, atol=1e-8)


def test_microgrid_zero_demand_decouples():
    # without loads or storage nothing consumes power, so the coupling is slack at the separate minima
    prob = make_microgrid(seed=1, n_stor=0, n_conl=0, demand=np.zeros(12))
    rep = centralized_reference_solve(prob)
    alone = []
    for p in prob.pieces:
        A, b, E, e = p.X.polyhedron
        alone.append(qp_solve(p.cost.H, p.cost.q, A, b).report)
    assert (prob.coupling([r.x for r in alone]) <= 0).all()
    assert rep.value == pytest.approx(sum(r.value for r in alone), abs=1e-8)


def test_microgrid_infeasible_demand_rejected():
    with pytest.raises(InfeasibleError):
        make_microgrid(demand=np.full(12, 100.0))


def test_microgrid_unknown_parameter_rejected():
    with pytest.raises(ConfigError):
        make_microgrid(n_windmills=3)


def test_two_disks_lens_extreme():
    prob = CommonCostProblem(linear_cost([1.0, 0.0]), [Disk((0.0, 0.0), 1.0, 0), Disk((1.0, 0.0), 1.0, 1)], 2, 10.0)
    assert pooled_lexmin(prob).x[0] == pytest.approx(0.0, abs=1e-7)


def test_one_disk_support_point():
    prob = CommonCostProblem(linear_cost([1.0, 0.0]), [Disk((2.0, -1.0), 0.5, 0)], 2, 10.0)
    assert np.allclose(pooled_lexmin(prob).x, [1.5, -1.0], atol=1e-7)


def test_target_localization_matches_grid():
    prob = make_target_localization(N=6, seed=4)
    x = pooled_lexmin(prob).x
    assert abs(grid_minimum(prob) - x[0]) < 1e-3
    assert prob.max_violation(x) <= 1e-7


def test_random_qp_defaults_and_eigenvalues():
    prob = make_random_qp()
    assert prob.n_agents == 10 and prob.dim == 5
    for Q in prob.meta["data"]["Q"]:
        lam = np.linalg.eigvalsh(np.array(Q))
        assert lam.min() >= 1 - 1e-9 and lam.max() <= 10 + 1e-9


def test_random_qp_zero_linear_terms():
    prob = qp_from_data([np.eye(2), 2 * np.eye(2)], [np.zeros(2), np.zeros(2)])
    assert np.allclose(centralized_reference_solve(prob).x, 0.0)


def test_random_qp_single_agent():
    prob = qp_from_data([np.eye(2)], [[-2.0, 0.0]])
    assert np.allclose(centralized_reference_solve(prob).x, [1.0, 0.0])


@pytest.mark.parametrize("prob", [make_logistic(N=4, seed=1), make_random_qp(N=4, seed=2),
                                  make_lasso(N=4, n_i=3, d=3, rho=1.0, seed=5)], ids=["logistic", "qp", "lasso"])
def test_cost_convexity_spot_check(prob):
    rng = np.random.default_rng(0)
    for f in prob.costs:
        for _ in range(100):
            x, y = rng.normal(0, 3, (2, prob.dim))
            th = rng.uniform()
            assert f.value(th * x + (1 - th) * y) <= th * f.value(x) + (1 - th) * f.value(y) + 1e-9


@pytest.mark.parametrize("prob", [make_logistic(N=3, seed=1), make_random_qp(N=3, seed=2)], ids=["logistic", "qp"])
def test_gradients_match_finite_differences(prob):
    rng = np.random.default_rng(1)
    h = 1e-6
    for f in prob.costs:
        for _ in range(50):
            x = rng.normal(0, 1, prob.dim)
            fd = np.array([(f.value(x + h * e) - f.value(x - h * e)) / (2 * h) for e in np.eye(prob.dim)])
            g = f.gradient(x)
            assert np.linalg.norm(fd - g) <= 1e-5 * max(1.0, np.linalg.norm(g))


def test_microgrid_costs_convex():
    prob = make_microgrid(seed=0)
    rng = np.random.default_rng(2)
    for p in prob.pieces:
        for _ in range(100):
            x, y = rng.normal(0, 1, (2, p.dim))
            th = rng.uniform()
            assert p.cost.value(th * x + (1 - th) * y) <= th * p.cost.value(x) + (1 - th) * p.cost.value(y) + 1e-9


@pytest.mark.parametrize("prob", [make_random_qp(N=3, seed=1), make_logistic(N=3, seed=2),
                                  make_lasso(N=3, n_i=2, d=2, rho=1.0, seed=0), make_soft_svm(N=6),
                                  make_random_lp(5, 2, seed=1), make_microgrid(seed=2),
                                  make_task_assignment(3, seed=1)],
                         ids=["qp", "logistic", "lasso", "svm", "lp", "microgrid", "assignment"])
def test_json_round_trip(prob, tmp_path):
    save_problem(prob, tmp_path / "p.json")
    back = load_problem(tmp_path / "p.json")
    assert centralized_reference_solve(back).value == pytest.approx(centralized_reference_solve(prob).value, abs=1e-12)


def test_descriptor_payload_round_trip():
    for d in [Halfspace((1.0, -2.0), 3.0, 4), Disk((0.5, 0.5), 2.0, 1, ((1.0, 0.0),), (0.7,))]:
        assert from_payload(d.payload()) == d
    payload = Halfspace((1.0, 2.0), 3.0, 7).payload()
    assert payload[:8] == b"half    " and int.from_bytes(payload[8:16], "little") == 7
