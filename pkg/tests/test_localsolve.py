import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from distopt.errors import ConfigError
from distopt.localsolve.lexconvex import lex_convex_solve, minimal_support
from distopt.localsolve.qp import qp_solve
from distopt.localsolve.simplex import box_rows, extract_basis, farkas_certificate, lex_lp_solve, lp_solve
from distopt.localsolve.smooth import (centralized_admm, gradient_solve, newton_solve, primal_dual_solve,
                                       projected_subgradient_solve, proximal_gradient_solve, regularized_argmin)
from distopt.primal import StepSchedule
from distopt.problems.descriptors import Disk, Halfspace
from distopt.problems.generators import make_logistic
from distopt.problems.oracles import (Box, L1Cost, Polyhedron, QuadraticCost, Reals, SumCost, least_squares_cost,
                                      linear_cost, soft_threshold)

from oracles import kkt_enumeration, vertex_lexmin


def square():
    return np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]), np.array([1.0, 1.0, 0.0, 0.0])


def test_gradient_solve_scalar_quadratic():
    f = QuadraticCost([[2.0]], [0.0])
    x1 = 1.0 - 0.25 * f.gradient(np.array([1.0]))[0]
    assert x1 == 0.5
    rep = gradient_solve(f, [1.0], 0.25)
    assert rep.ok and abs(rep.x[0]) <= 1e-9


def test_gradient_solve_shifted_quadratic():
    a = np.array([1.0, -2.0, 0.5])
    f = least_squares_cost(np.eye(3), a)
    rep = gradient_solve(f, np.zeros(3), 0.2)
    assert np.allclose(rep.x, a, atol=1e-9)


def test_gradient_solve_rejects_large_step():
    with pytest.raises(ConfigError):
        gradient_solve(QuadraticCost([[2.0]], [0.0]), [1.0], 1.5)


def test_gradient_solve_logistic_against_newton():
    prob = make_logistic(N=5, seed=3)
    f = SumCost(list(prob.costs))
    ref = newton_solve(f, np.zeros(prob.dim), tol=1e-14)
    rep = gradient_solve(f, np.zeros(prob.dim), 1.0 / f.lipschitz, max_iter=100_000, tol=1e-8)
    assert rep.ok and np.linalg.norm(f.gradient(rep.x)) < 1e-8
    assert rep.value == pytest.approx(ref.value, abs=1e-10)


def test_projected_subgradient_abs():
    rep = projected_subgradient_solve(L1Cost(1, 1.0), None, StepSchedule.harmonic(1.0), [2.0], 2000)
    assert abs(rep.x[0]) < 1e-2


def test_projected_subgradient_linear_over_box():
    c = np.array([1.0, -2.0])
    box = Box(-np.ones(2), np.ones(2))
    rep = projected_subgradient_solve(linear_cost(c), box.project, StepSchedule.constant(0.1), np.zeros(2), 100)
    assert np.allclose(rep.x, -np.sign(c), atol=1e-12) and rep.value == pytest.approx(-3.0)


def test_projected_subgradient_lasso_1d():
    # f = (x - 3)^2 + 2|x|, minimizer soft_threshold(3, 1) = 2
    f = least_squares_cost(np.eye(1), [3.0]) + L1Cost(1, 2.0)
    rep = projected_subgradient_solve(f, None, StepSchedule.power(0.5, 0.6), [0.0], 10_000)
    assert abs(rep.x[0] - soft_threshold(np.array([3.0]), 1.0)[0]) < 1e-3


def test_regularized_argmin_prox_identity():
    z = np.array([1.0, -4.0])
    rep = regularized_argmin(None, Reals(2), None, [z], 1.0)
    assert np.allclose(rep.x, z)


def test_regularized_argmin_linear_shift():
    a = np.array([0.3, -1.0])
    rep = regularized_argmin(QuadraticCost(2 * np.eye(2), np.zeros(2)), Reals(2), -2 * a)
    assert np.allclose(rep.x, a, atol=1e-12)


@pytest.mark.parametrize("z", [-2.5, -0.4, 0.0, 0.7, 3.0])
def test_regularized_argmin_abs_is_soft_threshold(z):
    rep = regularized_argmin(L1Cost(1, 1.0), Reals(1), None, [np.array([z])], 1.0)
    assert rep.x[0] == pytest.approx(soft_threshold(np.array([z]), 1.0)[0], abs=1e-9)


def test_regularized_argmin_unbounded():
    rep = regularized_argmin(linear_cost([1.0]), Reals(1))
    assert rep.status == "unbounded"


def test_primal_dual_scalar():
    rep = primal_dual_solve(linear_cost([1.0]), Polyhedron(np.array([[1.0]]), np.array([10.0])), [[-1.0]], [1.0])
    assert rep.x[0] == pytest.approx(1.0) and rep.multipliers[0] == pytest.approx(1.0)


def test_primal_dual_inactive_constraint():
    f = QuadraticCost(2 * np.eye(1), [0.0])
    rep = primal_dual_solve(f, None, [[1.0]], [-5.0])
    assert rep.x[0] == pytest.approx(0.0, abs=1e-12) and rep.multipliers[0] == 0.0


def test_primal_dual_infeasible_has_certificate():
    rep = primal_dual_solve(linear_cost([1.0]), Polyhedron(np.array([[1.0]]), np.array([0.0])), [[-1.0]], [1.0])
    assert rep.status == "infeasible"
    y = rep.info["certificate"]
    AA = np.array([[-1.0], [1.0]])
    bb = np.array([-1.0, 0.0])
    assert (y >= -1e-12).all() and np.allclose(AA.T @ y, 0) and bb @ y == pytest.approx(-1.0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(1, 3), m=st.integers(1, 5))
def test_qp_matches_kkt_enumeration(seed, n, m):
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((n, n))
    H = L @ L.T + 0.5 * np.eye(n)
    q = rng.standard_normal(n)
    A = rng.standard_normal((m, n))
    b = rng.uniform(0.1, 1.0, m)
    x_ref, mult_ref = kkt_enumeration(H, q, A, b)
    rep = qp_solve(H, q, A, b).report
    assert rep.ok
    assert np.allclose(rep.x, x_ref, atol=1e-8)
    assert (rep.multipliers >= 0).all()
    assert rep.residual <= 1e-7
    # complementary slackness
    assert np.abs(rep.multipliers * (A @ rep.x - b)).max() <= 1e-7


def test_centralized_admm_consensus_toy():
    G1 = least_squares_cost(np.eye(1), [1.0])
    G2 = least_squares_cost(np.eye(1), [-1.0])
    rep = centralized_admm(G1, None, G2, None, np.eye(1), -np.eye(1), np.zeros(1), 1.0, iters=2000)
    assert rep.ok and np.allclose(rep.x, 0.0, atol=1e-8)


def test_centralized_admm_method_of_multipliers():
    G1 = QuadraticCost(np.diag([2.0, 4.0]), [-2.0, 4.0])
    rep = centralized_admm(G1, None, None, None, np.eye(2), -np.eye(2), np.zeros(2), 1.0, iters=2000)
    assert np.allclose(rep.info["x"], [1.0, -1.0], atol=1e-7)


def test_centralized_admm_lasso_matches_proximal_gradient():
    rng = np.random.default_rng(0)
    D, y = rng.standard_normal((8, 3)), rng.standard_normal(8)
    fit, l1 = least_squares_cost(D, y), L1Cost(3, 1.5)
    ref = proximal_gradient_solve(fit, l1, np.zeros(3), tol=1e-14)
    rep = centralized_admm(fit, None, l1, None, np.eye(3), -np.eye(3), np.zeros(3), 1.0, iters=20_000, tol=1e-11)
    assert np.allclose(rep.info["x"], ref.x, atol=1e-6)
    steps = np.array(rep.info["dual_steps"])
    windows = [steps[k:k + 50].mean() for k in range(0, len(steps) - 50, 50)]
    assert windows[-1] < windows[0]


def test_lex_lp_unit_square_top_edge():
    A, b = square()
    rep, basis = lex_lp_solve([0.0, -1.0], A, b)
    assert np.array_equal(rep.x, [0.0, 1.0])
    assert set(basis.rows) == {1, 2}


def test_lex_lp_degenerate_face_left_endpoint():
    # optimal face is the segment y = 1, x in [-1, 2]; several rows pass through (-1, 1)
    A = np.array([[0.0, 1.0], [-1.0, 0.0], [1.0, 0.0], [-1.0, 1.0], [0.0, -1.0]])
    b = np.array([1.0, 1.0, 2.0, 2.0, 0.0])
    rep, _ = lex_lp_solve([0.0, -1.0], A, b)
    assert np.array_equal(rep.x, [-1.0, 1.0])


def test_lex_lp_box_rows_flagged():
    rep, basis = lex_lp_solve([1.0, 1.0], np.zeros((0, 2)), np.zeros(0), M=5.0)
    assert np.array_equal(rep.x, [-5.0, -5.0]) and basis.has_box_rows


def test_lex_lp_infeasible_and_unbounded():
    rep, basis = lex_lp_solve([1.0], [[1.0], [-1.0]], [0.0, -1.0])
    assert rep.status == "infeasible" and basis is None
    rep, _ = lex_lp_solve([-1.0], [[-1.0]], [0.0])
    assert rep.status == "unbounded"


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(1, 3), K=st.integers(1, 8))
def test_lex_lp_matches_vertex_enumeration(seed, n, K):
    rng = np.random.default_rng(seed)
    A = rng.integers(-3, 4, (K, n)).astype(float)
    b = rng.integers(0, 4, K).astype(float)
    c = rng.integers(-2, 3, n).astype(float)
    Ab, bb, _ = box_rows(n, 10.0)
    rep, basis = lex_lp_solve(c, A, b, M=10.0)
    ref = vertex_lexmin(c, np.vstack([A, Ab]), np.concatenate([b, bb]))
    assert np.abs(rep.x - ref).max() <= 1e-9
    # idempotence: the basis-only problem reproduces the point bit for bit
    again, _ = lex_lp_solve(c, basis.P, basis.q)
    assert np.array_equal(again.x, rep.x)
    assert len(basis.rows) == n


def test_extract_basis_single_row():
    basis = extract_basis([2.0], np.array([[-1.0]]), np.array([-2.0]), np.array([1.0]))
    assert basis.rows == (0,)


def test_extract_basis_square():
    A, b = square()
    basis = extract_basis([0.0, 1.0], A, b, np.array([0.0, -1.0]))
    assert set(basis.rows) == {1, 2}


def test_extract_basis_three_rows_through_vertex():
    A = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    b = np.array([2.0, 1.0, 1.0, 5.0, 5.0])
    c = np.array([-1.0, -1.0])
    x = np.array([1.0, 1.0])
    basis = extract_basis(x, A, b, c)
    assert len(basis.rows) == 2
    again, _ = lex_lp_solve(c, basis.P, basis.q)
    assert np.allclose(again.x, x)


def test_farkas_feasible_returns_none():
    A, b = square()
    assert farkas_certificate(A, b) is None


def test_lp_solve_multipliers():
    rep = lp_solve([1.0, 1.0], -np.eye(2), [-1.0, -2.0])
    assert np.allclose(rep.x, [1.0, 2.0]) and np.allclose(rep.multipliers, [1.0, 1.0])


def test_lex_convex_disk_support_point():
    rep = lex_convex_solve(linear_cost([0.0, -1.0]), [Disk((0.0, 0.0), 1.0, 0)], 2, 10.0)
    assert rep.value == pytest.approx(-1.0, abs=1e-9)
    assert np.allclose(rep.x, [0.0, 1.0], atol=1e-4)


def test_minimal_support_keeps_active_constraints():
    cost = QuadraticCost(np.eye(2), np.zeros(2))
    cons = [Halfspace((-1.0, 0.0), -1.0, 0), Halfspace((0.0, -1.0), -1.0, 1), Halfspace((1.0, 0.0), 5.0, 2)]
    keep, ref = minimal_support(cost, cons, 2, 10.0)
    assert np.allclose(ref.x, [1.0, 1.0])
    assert sorted(d.origin for d in keep) == [0, 1]
