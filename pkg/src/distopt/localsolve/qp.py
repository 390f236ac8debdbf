"""Primal active-set method for convex quadratic programs.

Solves ``min 1/2 x^T H x + q^T x`` subject to ``A x <= b`` and ``E x = e``
with ``H`` positive semidefinite.  The feasible set must be bounded along
every direction of zero curvature (a bounding box is enough).  Steps are
computed in the null space of the working constraints; when the reduced
Hessian is singular and the reduced gradient has a component in its
kernel, the method follows that ray to the first blocking constraint.
The working set from a previous solve can be passed back in to warm start
a sequence of nearby problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import SolverError
from .report import SolveReport
from .simplex import simplex

STEP_TOL = 1e-12
MULT_TOL = 1e-10
FEAS_TOL = 1e-9


@dataclass
class QpResult:
    report: SolveReport
    working: tuple[int, ...]


def _null_space(M: np.ndarray, n: int) -> np.ndarray:
    if M.shape[0] == 0:
        return np.eye(n)
    Q, _ = np.linalg.qr(M.T, mode="complete")
    return Q[:, M.shape[0]:]


class _Orthonormal:
    """Growing orthonormal basis used to test rows for linear independence."""

    def __init__(self, n: int):
        self.Q = np.zeros((n, n))
        self.k = 0

    def add(self, row) -> bool:
        if self.k == len(self.Q):
            return False
        Q = self.Q[: self.k]
        r = row - (Q @ row) @ Q
        r = r - (Q @ r) @ Q
        nr = math.sqrt(r @ r)
        if nr <= 1e-9 * (1.0 + math.sqrt(row @ row)):
            return False
        self.Q[self.k] = r / nr
        self.k += 1
        return True


def qp_solve(
    H,
    q,
    A=None,
    b=None,
    E=None,
    e=None,
    x0=None,
    working=(),
    max_iter: int = 10_000,
) -> QpResult:
    """Solve a convex QP; multipliers are ordered inequality rows then equalities."""
    q = np.asarray(q, dtype=float).ravel()
    n = len(q)
    H = np.zeros((n, n)) if H is None else np.asarray(H, dtype=float)
    A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float).reshape(-1, n)
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float).ravel()
    E = np.zeros((0, n)) if E is None else np.asarray(E, dtype=float).reshape(-1, n)
    e = np.zeros(0) if e is None else np.asarray(e, dtype=float).ravel()
    m, k = len(b), len(e)
    scale = 1.0 + np.abs(b).max(initial=0.0) + np.abs(e).max(initial=0.0)
    ftol = FEAS_TOL * scale

    if x0 is not None:
        x = np.asarray(x0, dtype=float).copy()
        if (A @ x - b).max(initial=0.0) > ftol or np.abs(E @ x - e).max(initial=0.0) > ftol:
            x = None
    else:
        x = None
    if x is None:
        start = simplex(np.zeros((1, n)), A, b, E if k else None, e if k else None)
        if start.status == "infeasible":
            return QpResult(SolveReport(None, np.inf, "infeasible"), ())
        x = start.x
        working = tuple(start.tight) + tuple(working)

    # Keep an independent subset of the suggested rows that are active at x.
    W: list[int] = []
    basis = _Orthonormal(n)
    for row in E:
        basis.add(row)
    active = np.abs(A @ x - b) <= ftol
    for i in dict.fromkeys(int(i) for i in working):
        if active[i] and basis.add(A[i]):
            W.append(i)
    if E.shape[0] and np.linalg.matrix_rank(E) < E.shape[0]:
        raise SolverError("equality rows of the QP are linearly dependent")

    hscale = 1.0 + np.abs(H).max(initial=0.0)
    it = 0
    while True:
        it += 1
        if it > max_iter:
            return QpResult(SolveReport(x, _value(H, q, x), "max_iter", iterations=it), tuple(W))
        g = H @ x + q
        M = np.vstack([E, A[W]]) if W else E
        Z = _null_space(M, n)
        p = np.zeros(n)
        ray = False
        if Z.shape[1]:
            Hr = Z.T @ H @ Z
            gr = Z.T @ g
            lam, V = np.linalg.eigh(Hr)
            coef = V.T @ gr
            flat = lam <= 1e-10 * hscale
            gscale = 1.0 + np.abs(g).max()
            if np.abs(coef[flat]).max(initial=0.0) > 1e-11 * gscale:
                u = -V[:, flat] @ coef[flat]
                ray = True
            else:
                u = -V[:, ~flat] @ (coef[~flat] / lam[~flat])
            p = Z @ u
        if np.abs(p).max(initial=0.0) <= STEP_TOL * (1.0 + np.abs(x).max(initial=0.0)) and not ray:
            mult = np.linalg.lstsq(M.T, -g, rcond=None)[0] if M.shape[0] else np.zeros(0)
            mu_w = mult[k:]
            if not W or mu_w.min() >= -MULT_TOL * (1.0 + np.abs(g).max()):
                return QpResult(_finish(H, q, A, b, E, e, x, W, mult, it), tuple(W))
            drop = int(np.argmin(mu_w))
            W.pop(drop)
            continue
        Ap = A @ p
        slack = b - A @ x
        inw = np.zeros(m, dtype=bool)
        inw[W] = True
        block = np.flatnonzero((Ap > 1e-12 * (1.0 + np.abs(p).max())) & ~inw)
        alpha = np.inf if ray else 1.0
        hit = -1
        if block.size:
            ratios = np.maximum(slack[block], 0.0) / Ap[block]
            j = int(np.argmin(ratios))
            if ratios[j] < alpha:
                alpha = float(ratios[j])
                hit = int(block[j])
        if not np.isfinite(alpha):
            return QpResult(SolveReport(None, -np.inf, "unbounded", iterations=it), tuple(W))
        x = x + alpha * p
        if hit >= 0:
            W.append(hit)


def _value(H, q, x) -> float:
    return float(0.5 * x @ H @ x + q @ x)


def _finish(H, q, A, b, E, e, x, W, mult, it) -> SolveReport:
    n = len(x)
    M = np.vstack([E, A[W]]) if W else E
    rhs = np.concatenate([e, b[W]]) if W else e
    if M.shape[0] == n:
        x = np.linalg.solve(M, rhs)
    elif M.shape[0]:
        x = x + M.T @ np.linalg.solve(M @ M.T, rhs - M @ x)
    g = H @ x + q
    if M.shape[0]:
        mult = np.linalg.lstsq(M.T, -g, rcond=None)[0]
    k = E.shape[0]
    full = np.zeros(A.shape[0] + k)
    full[np.asarray(W, dtype=int)] = np.maximum(mult[k:], 0.0)
    full[A.shape[0]:] = mult[:k]
    resid = g + A.T @ full[: A.shape[0]] + E.T @ full[A.shape[0]:]
    viol = max((A @ x - b).max(initial=0.0), np.abs(E @ x - e).max(initial=0.0))
    res = max(float(np.abs(resid).max(initial=0.0)), float(viol))
    return SolveReport(x, _value(H, q, x), "optimal", full, it, res)
