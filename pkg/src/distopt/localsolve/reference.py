"""Centralized solutions used as ground truth for distributed runs."""

from __future__ import annotations

import numpy as np
from scipy.linalg import block_diag

from ..errors import ConfigError, InfeasibleError
from ..problems.generators import CommonCostProblem, ConstraintCoupledProblem, CostCoupledProblem
from ..problems.oracles import L1Cost, QuadraticCost, SumCost
from .lexconvex import lex_convex_solve
from .qp import qp_solve
from .report import SolveReport
from .smooth import newton_solve, proximal_gradient_solve


def centralized_reference_solve(problem) -> SolveReport:
    """Optimal value and minimizer; for constraint-coupled problems also ``mu*``.

    For constraint-coupled instances ``x`` is the concatenation of the
    agents' blocks, ``info["blocks"]`` holds them separately and
    ``multipliers`` are the coupling multipliers ``mu*``.
    """
    if isinstance(problem, CostCoupledProblem):
        return _cost_coupled(problem)
    if isinstance(problem, CommonCostProblem):
        rep = lex_convex_solve(problem.cost, problem.constraints, problem.dim, problem.M)
        if rep.status == "infeasible":
            raise InfeasibleError("the constraint sets have an empty intersection")
        return rep
    if isinstance(problem, ConstraintCoupledProblem):
        return _constraint_coupled(problem)
    raise ConfigError(f"no reference solver for {type(problem).__name__}")


def _terms(cost):
    return cost.terms if isinstance(cost, SumCost) else [cost]


def _cost_coupled(problem: CostCoupledProblem) -> SolveReport:
    d = problem.dim
    terms = [t for f in problem.costs for t in _terms(f)]
    quads = [t for t in terms if isinstance(t, QuadraticCost)]
    l1 = [t for t in terms if isinstance(t, L1Cost)]
    if len(quads) == len(terms):
        H = sum(t.H for t in quads)
        q = sum(t.q for t in quads)
        x = np.linalg.solve(H, -q)
        rep = SolveReport(x, problem.total_cost(x), "optimal", residual=float(np.abs(H @ x + q).max()),
                          info={"method": "closed_form"})
        return rep
    if len(quads) + len(l1) == len(terms):
        smooth = QuadraticCost(sum(t.H for t in quads), sum(t.q for t in quads), sum(t.c0 for t in quads))
        rough = L1Cost(d, sum(t.weight for t in l1))
        rep = proximal_gradient_solve(smooth, rough, np.zeros(d), max_iter=200_000, tol=1e-14)
        rep.value = problem.total_cost(rep.x)
        rep.info["method"] = "proximal_gradient"
        return rep
    if all(f.smooth for f in problem.costs):
        total = SumCost(list(problem.costs))
        rep = newton_solve(total, np.zeros(d), tol=1e-14)
        rep.value = problem.total_cost(rep.x)
        rep.info["method"] = "newton"
        return rep
    raise ConfigError("no centralized method for this mix of cost terms")


def stacked_form(problem: ConstraintCoupledProblem):
    """Block data ``(H, q, A, b, E, e, G, h, offsets)`` of the joint problem."""
    pieces = problem.pieces
    H = block_diag(*[p.cost.H for p in pieces])
    q = np.concatenate([p.cost.q for p in pieces])
    A = block_diag(*[p.X.A for p in pieces])
    b = np.concatenate([p.X.b for p in pieces])
    E = block_diag(*[p.X.E for p in pieces]) if any(p.X.E.shape[0] for p in pieces) else np.zeros((0, len(q)))
    E = E.reshape(-1, len(q))
    e = np.concatenate([p.X.e for p in pieces])
    G = np.hstack([p.G for p in pieces])
    h = sum(p.h for p in pieces)
    offsets = np.cumsum([0] + [p.dim for p in pieces])
    return H, q, A, b, E, e, G, h, offsets


def _constraint_coupled(problem: ConstraintCoupledProblem) -> SolveReport:
    H, q, A, b, E, e, G, h, offsets = stacked_form(problem)
    S = len(h)
    x0 = np.concatenate(problem.slater)
    res = qp_solve(H, q, np.vstack([G, A]), np.concatenate([-h, b]), E if E.shape[0] else None,
                   e if E.shape[0] else None, x0=x0)
    rep = res.report
    if rep.status == "infeasible":
        raise InfeasibleError("the coupled problem has no feasible point")
    if not rep.ok:
        return rep
    mu = rep.multipliers[:S].copy()
    blocks = [rep.x[offsets[i]:offsets[i + 1]].copy() for i in range(problem.n_agents)]
    info = {"blocks": blocks, "method": "stacked_qp", "mu_l1": float(np.abs(mu).sum())}
    value = problem.total_cost(blocks)
    return SolveReport(rep.x, value, "optimal", mu, rep.iterations, rep.residual, info)
