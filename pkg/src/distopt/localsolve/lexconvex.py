"""Lexicographically minimal solutions over intersections of descriptor sets.

The cost is linear, or quadratic with a Hessian that is positive definite
on a subset of coordinates and zero elsewhere (the soft-margin SVM shape).
In the quadratic case the minimizer restricted to those coordinates is
unique, so it is computed first by the active-set QP and then held fixed
while the remaining coordinates are resolved by the lexicographic LP.
Smooth pieces (disks, epigraph caps) are handled by supporting-hyperplane
cuts added until every piece is satisfied to ``cut_tol``.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError, SolverError
from ..problems.descriptors import Descriptor
from ..problems.oracles import QuadraticCost
from .qp import qp_solve
from .report import SolveReport
from .simplex import box_rows, lex_lp_solve

CUT_TOL = 1e-10
MAX_CUT_ROUNDS = 500
SAME_TOL = 1e-9


def _gather(descriptors, n, M):
    rows, rhs, owner = [], [], []
    pieces = []
    for k, desc in enumerate(descriptors):
        A, b = desc.linear_rows(n)
        rows.append(A)
        rhs.append(b)
        owner += [k] * len(b)
        pieces += [(k, p) for p in desc.smooth_pieces()]
    if M is not None:
        A, b, _ = box_rows(n, M)
        rows.append(A)
        rhs.append(b)
        owner += [-1] * len(b)
    A = np.vstack(rows) if rows else np.zeros((0, n))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    return A.reshape(-1, n), b, owner, pieces


def _fixed_coordinates(cost: QuadraticCost):
    H = cost.H
    fixed = np.flatnonzero(np.abs(H).sum(axis=1) > 0)
    if fixed.size:
        off = np.delete(H[fixed], fixed, axis=1)
        if np.abs(off).max(initial=0.0) > 0:
            raise ConfigError("quadratic part must act on a coordinate subset only")
        if np.linalg.eigvalsh(H[np.ix_(fixed, fixed)]).min() <= 0:
            raise ConfigError("quadratic part must be positive definite on its coordinates")
    return fixed


def _cut_loop(solve, pieces, A, b, cut_tol, owner=None):
    """Re-solve with cuts until every smooth piece holds; returns (report, A, b, rounds).

    When ``owner`` is given, the owners of the added cuts are appended to it.
    """
    rounds = 0
    while True:
        rep = solve(A, b)
        if not rep.ok or not pieces:
            return rep, A, b, rounds
        worst = 0.0
        cuts, rhs = [], []
        for k, p in pieces:
            v = p.value(rep.x)
            if v > cut_tol:
                a, beta = p.cut(rep.x)
                cuts.append(a)
                rhs.append(beta)
                worst = max(worst, v)
                if owner is not None:
                    owner.append(k)
        if not cuts:
            return rep, A, b, rounds
        rounds += 1
        if rounds > MAX_CUT_ROUNDS:
            raise SolverError(f"cutting planes stalled with violation {worst:.3g}")
        A = np.vstack([A, cuts])
        b = np.concatenate([b, rhs])


def quadratic_stage(cost: QuadraticCost, descriptors, n: int, M: float | None, cut_tol: float = CUT_TOL,
                    warm=None) -> SolveReport:
    """Minimize the full cost (no lexicographic tie-break) over the intersection."""
    A, b, owner, pieces = _gather(descriptors, n, M)
    state = {"working": tuple(warm[1]) if warm else ()}
    x0 = warm[0] if warm else None

    def solve(A_, b_):
        res = qp_solve(cost.H, cost.q, A_, b_, x0=x0, working=state["working"])
        state["working"] = res.working
        return res.report

    owner = list(owner)
    rep, A, b, rounds = _cut_loop(solve, pieces, A, b, cut_tol, owner)
    rep.info["working"] = state["working"]
    rep.info["cut_rounds"] = rounds
    rep.info["rows"] = (A, b, owner)
    if rep.ok:
        rep.value = cost.value(rep.x)
    return rep


def lex_convex_solve(cost: QuadraticCost, descriptors, n: int, M: float | None = None,
                     cut_tol: float = CUT_TOL) -> SolveReport:
    """Lexicographically minimal minimizer of ``cost`` over the descriptors' intersection.

    ``info["active"]`` lists the descriptors (by position) that are tight at
    the solution.
    """
    descriptors = list(descriptors)
    fixed = _fixed_coordinates(cost)
    A, b, owner, pieces = _gather(descriptors, n, M)
    free = np.setdiff1d(np.arange(n), fixed)
    xfix = np.zeros(len(fixed))
    iterations = 0
    if fixed.size:
        rep = quadratic_stage(cost, descriptors, n, M, cut_tol)
        if not rep.ok:
            return rep
        xfix = rep.x[fixed]
        iterations += rep.iterations

    c_free = cost.q[free]

    def solve(A_, b_):
        rhs = b_ - A_[:, fixed] @ xfix
        Af = A_[:, free]
        # rows that no longer involve any free coordinate are checks only
        touch = np.abs(Af).sum(axis=1) > 0
        if (rhs[~touch] < -1e-9 * (1.0 + np.abs(b_[~touch]).max(initial=0.0))).any():
            return SolveReport(None, np.inf, "infeasible")
        if free.size == 0:
            return SolveReport(_assemble(n, fixed, xfix, free, np.zeros(0)), 0.0, "optimal")
        r, _ = lex_lp_solve(c_free, Af[touch], rhs[touch])
        if not r.ok:
            return r
        return SolveReport(_assemble(n, fixed, xfix, free, r.x), 0.0, "optimal", iterations=r.iterations)

    rep, A_all, b_all, rounds = _cut_loop(solve, pieces, A, b, cut_tol)
    if not rep.ok:
        return rep
    x = rep.x
    viol = [d.violation(x) for d in descriptors]
    scale = 1.0 + np.abs(x).max(initial=0.0)
    active = [k for k, v in enumerate(viol) if v >= -SAME_TOL * scale]
    info = {"active": active, "cut_rounds": rounds, "fixed": fixed.tolist()}
    resid = max(max(viol, default=0.0), 0.0)
    return SolveReport(x, cost.value(x), "optimal", None, iterations + rep.iterations, resid, info)


def _assemble(n, fixed, xfix, free, xfree):
    x = np.zeros(n)
    x[fixed] = xfix
    x[free] = xfree
    return x + 0.0


def same_point(x, y, tol: float = SAME_TOL) -> bool:
    x, y = np.asarray(x), np.asarray(y)
    return bool(np.abs(x - y).max(initial=0.0) <= tol * (1.0 + np.abs(x).max(initial=0.0)))


def _certified_essential(rep: SolveReport) -> set:
    """Descriptors whose removal provably lowers the QP value.

    When the active rows at the QP solution are linearly independent the
    multipliers are unique, so a strictly positive multiplier on a
    descriptor's row means no optimal multiplier can vanish there, and the
    relaxed problem has a strictly smaller value.
    """
    A, b, owner = rep.info["rows"]
    mult = rep.multipliers[: len(b)]
    x = rep.x
    scale = 1.0 + np.abs(b).max(initial=0.0)
    active = np.flatnonzero(np.abs(A @ x - b) <= 1e-9 * scale)
    if active.size == 0 or np.linalg.matrix_rank(A[active], tol=1e-9) < active.size:
        return set()
    mscale = 1.0 + np.abs(mult).max(initial=0.0)
    return {owner[r] for r in active if mult[r] > 1e-7 * mscale and owner[r] >= 0}


def minimal_support(cost: QuadraticCost, descriptors, n: int, M: float | None = None,
                    reference: SolveReport | None = None, tol: float = SAME_TOL):
    """Greedy drop-one reduction to a minimal subset with the same solution.

    Descriptors are visited in the given order.  Inactive ones are dropped
    without a re-solve (removing a slack constraint cannot change the
    lexicographic optimum of a convex program).  For quadratic costs a
    strict decrease of the QP value proves a descriptor essential before
    the lexicographic stage is run.
    Returns ``(kept descriptors, reference report)``.
    """
    descriptors = list(descriptors)
    ref = reference or lex_convex_solve(cost, descriptors, n, M)
    if not ref.ok:
        raise SolverError(f"cannot reduce an instance with status {ref.status}")
    keep = [descriptors[k] for k in ref.info["active"]]
    quadratic = bool(np.any(cost.H))
    certified = set()
    if quadratic:
        full = quadratic_stage(cost, keep, n, M, warm=(ref.x, ()))
        if full.ok:
            certified = {keep[k].payload() for k in _certified_essential(full)}
    for desc in list(keep):
        if desc.payload() in certified:
            continue
        trial = [d for d in keep if d is not desc]
        if quadratic:
            qrep = quadratic_stage(cost, trial, n, M, warm=(ref.x, ()))
            if qrep.ok and qrep.value < ref.value - tol * (1.0 + abs(ref.value)):
                continue
        rep = lex_convex_solve(cost, trial, n, M)
        if rep.ok and same_point(rep.x, ref.x, tol):
            keep = trial
    return keep, ref
