"""Dense two-phase tableau simplex with Bland's rule and lexicographic objectives.

Variables are free; each one is split as ``x = x_plus - x_minus``.  Every
inequality row gets a slack, so a slack that ends nonbasic marks a tight
row.  Objectives are optimized one after another: stage ``k`` may only
pivot on columns whose reduced costs for the earlier stages are zero, so
the earlier optimal values stay fixed without any tolerance band.  Each
stage is a plain Bland's-rule simplex, which cannot cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SolverError
from .report import LpBasis, SolveReport

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-9
MAX_PIVOTS = 50_000


@dataclass
class SimplexResult:
    status: str
    x: np.ndarray | None
    tight: np.ndarray  # inequality rows whose slack is nonbasic
    multipliers: np.ndarray | None  # stage-0 multipliers of the inequality rows
    pivots: int
    values: np.ndarray | None = None


class _Tableau:
    def __init__(self, T: np.ndarray, basis: list[int], n_free: int, n_slack: int, n_art: int):
        self.T = T
        self.basis = basis
        self.n_free = n_free
        self.n_slack = n_slack
        self.n_art = n_art
        self.ncols = T.shape[1] - 1
        self.pivots = 0

    def pivot(self, r: int, q: int, R: np.ndarray):
        T = self.T
        T[r] /= T[r, q]
        col = T[:, q].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        R -= np.outer(R[:, q], T[r])
        np.maximum(T[:, -1], 0.0, out=T[:, -1])
        self.basis[r] = q
        self.pivots += 1
        if self.pivots > MAX_PIVOTS:
            raise SolverError("simplex exceeded the pivot limit")

    def optimize(self, R: np.ndarray, k: int, allowed: np.ndarray, tol: float) -> bool:
        """Bland's rule on objective row ``k``; returns False when unbounded."""
        T = self.T
        while True:
            rc = R[k, :-1]
            cand = np.flatnonzero(allowed & (rc < -tol))
            if cand.size:
                basic = np.zeros(self.ncols, dtype=bool)
                basic[self.basis] = True
                cand = cand[~basic[cand]]
            if not cand.size:
                return True
            q = int(cand[0])
            col = T[:, q]
            pos = np.flatnonzero(col > PIVOT_TOL)
            if not pos.size:
                return False
            ratios = T[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * (1.0 + abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, q, R)


def simplex(
    objectives: np.ndarray,
    A_ub: np.ndarray,
    b_ub: np.ndarray,
    A_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
) -> SimplexResult:
    """Lexicographically minimize the rows of ``objectives`` over a polyhedron.

    The feasible set is ``{x : A_ub x <= b_ub, A_eq x = b_eq}`` with ``x`` free.
    """
    objectives = np.atleast_2d(np.asarray(objectives, dtype=float))
    n = objectives.shape[1]
    A_ub = np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m, k = len(b_ub), len(b_eq)
    rows = m + k

    need_art = np.concatenate([b_ub < 0, np.ones(k, dtype=bool)])
    art_rows = np.flatnonzero(need_art)
    n_art = len(art_rows)
    ncols = 2 * n + m + n_art
    T = np.zeros((rows, ncols + 1))
    T[:m, :n] = A_ub
    T[:m, n:2 * n] = -A_ub
    T[:m, 2 * n:2 * n + m] = np.eye(m)
    T[:m, -1] = b_ub
    T[m:, :n] = A_eq
    T[m:, n:2 * n] = -A_eq
    T[m:, -1] = b_eq
    flip = T[:, -1] < 0
    T[flip] *= -1.0
    basis = [2 * n + i for i in range(m)] + [-1] * k
    for a, r in enumerate(art_rows):
        T[r, 2 * n + m + a] = 1.0
        basis[r] = 2 * n + m + a
    tab = _Tableau(T, basis, n, m, n_art)
    art_cols = np.zeros(ncols, dtype=bool)
    art_cols[2 * n + m:] = True

    if n_art:
        R1 = np.zeros((1, ncols + 1))
        R1[0, :-1][art_cols] = 1.0
        for r in art_rows:
            R1[0] -= T[r]
        tab.optimize(R1, 0, np.ones(ncols, dtype=bool), COST_TOL)
        scale = 1.0 + np.abs(np.concatenate([b_ub, b_eq])).max(initial=0.0)
        if -R1[0, -1] > FEAS_TOL * scale:
            return SimplexResult("infeasible", None, np.zeros(0, dtype=int), None, tab.pivots)
        keep = np.ones(rows, dtype=bool)
        for r in range(rows):
            if tab.basis[r] >= 2 * n + m:
                nz = np.flatnonzero((np.abs(tab.T[r, :-1]) > PIVOT_TOL) & ~art_cols)
                if nz.size:
                    tab.pivot(r, int(nz[0]), R1)
                else:
                    keep[r] = False
        if not keep.all():
            tab.T = tab.T[keep]
            tab.basis = [b for b, kp in zip(tab.basis, keep) if kp]

    L = objectives.shape[0]
    R = np.zeros((L, ncols + 1))
    R[:, :n] = objectives
    R[:, n:2 * n] = -objectives
    for r, bcol in enumerate(tab.basis):
        R -= np.outer(R[:, bcol], tab.T[r])
    scale = 1.0 + np.abs(objectives).max(initial=0.0)
    for stage in range(L):
        allowed = ~art_cols
        if stage:
            allowed = allowed & (np.abs(R[:stage, :-1]) <= COST_TOL * scale).all(axis=0)
        if not tab.optimize(R, stage, allowed, COST_TOL * scale):
            return SimplexResult("unbounded", None, np.zeros(0, dtype=int), None, tab.pivots)

    values = np.zeros(ncols)
    values[tab.basis] = tab.T[:, -1]
    x = values[:n] - values[n:2 * n] + 0.0
    basic = np.zeros(ncols, dtype=bool)
    basic[tab.basis] = True
    tight = np.flatnonzero(~basic[2 * n:2 * n + m])
    mult = np.maximum(R[0, 2 * n:2 * n + m], 0.0)
    return SimplexResult("optimal", x, tight, mult, tab.pivots, objectives @ x)


def lp_solve(c, A_ub, b_ub, A_eq=None, b_eq=None) -> SolveReport:
    """Minimize ``c^T x`` with multipliers for the inequality rows."""
    res = simplex(np.asarray(c, dtype=float)[None, :], A_ub, b_ub, A_eq, b_eq)
    if res.status != "optimal":
        return SolveReport(None, np.inf if res.status == "infeasible" else -np.inf, res.status, iterations=res.pivots)
    return SolveReport(res.x, float(np.dot(c, res.x)), "optimal", res.multipliers, res.pivots)


def box_rows(n: int, M: float) -> tuple[np.ndarray, np.ndarray, list]:
    """Rows ``x_k <= M`` and ``-x_k <= M`` with their tags."""
    A = np.vstack([np.eye(n), -np.eye(n)])
    b = np.full(2 * n, float(M))
    tags = [("box", k, 1) for k in range(n)] + [("box", k, -1) for k in range(n)]
    return A, b, tags


def lex_lp_solve(c, A, b, M: float | None = None, tags=None) -> tuple[SolveReport, LpBasis | None]:
    """Lexicographically minimal minimizer of ``c^T x`` subject to ``A x <= b``.

    The returned point is the vertex ``P^{-1} q`` of its basis, so solving
    the basis-only problem again reproduces it exactly.  With ``M`` the
    rows of the box ``-M <= x <= M`` are appended after the input rows.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = len(c)
    A = np.asarray(A, dtype=float).reshape(-1, n)
    b = np.asarray(b, dtype=float).ravel()
    tags = list(tags) if tags is not None else list(range(len(b)))
    if M is not None:
        Ab, bb, tb = box_rows(n, M)
        A, b, tags = np.vstack([A, Ab]), np.concatenate([b, bb]), tags + tb
    objs = np.vstack([c, np.eye(n)])
    res = simplex(objs, A, b)
    if res.status != "optimal":
        value = np.inf if res.status == "infeasible" else -np.inf
        return SolveReport(None, value, res.status, iterations=res.pivots), None
    if len(res.tight) == n:
        basis = _make_basis(A, b, res.tight, tags)
    else:
        basis = extract_basis(res.x, A, b, c, tags)
    x = basis.vertex if n else np.zeros(0)
    viol = float(np.max(A @ x - b, initial=0.0))
    if np.abs(x - res.x).max(initial=0.0) > 1e-6 * (1.0 + np.abs(x).max(initial=0.0)):
        raise SolverError("basis vertex disagrees with the simplex solution")
    mult = np.zeros(len(b))
    mult[: len(res.multipliers)] = res.multipliers
    report = SolveReport(x, float(c @ x), "optimal", mult, res.pivots, viol)
    return report, basis


def _make_basis(A, b, rows, tags) -> LpBasis:
    rows = tuple(int(r) for r in sorted(rows))
    return LpBasis(rows, A[list(rows)].copy(), b[list(rows)].copy(), tuple(tags[r] for r in rows))


def extract_basis(x, A, b, c, tags=None, tol: float = 1e-9) -> LpBasis:
    """``d`` rows among those active at ``x`` whose lexicographic optimum is ``x``.

    The simplex basis of the active-row problem is tried first.  If it does
    not reproduce ``x`` the active set is shrunk by greedy drop-one re-solves.
    """
    x = np.asarray(x, dtype=float)
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, len(x))
    b = np.asarray(b, dtype=float).ravel()
    tags = list(tags) if tags is not None else list(range(len(b)))
    n = len(x)
    scale = 1.0 + np.abs(b).max(initial=0.0) + np.abs(A).max(initial=0.0) * np.abs(x).max(initial=0.0)
    active = np.flatnonzero(np.abs(A @ x - b) <= tol * scale)
    objs = np.vstack([c, np.eye(n)])

    def lexmin_of(rows):
        res = simplex(objs, A[rows], b[rows])
        return res

    def matches(res):
        return res.status == "optimal" and np.abs(res.x - x).max(initial=0.0) <= 1e-7 * (1 + np.abs(x).max(initial=0.0))

    res = lexmin_of(active)
    if not matches(res):
        raise SolverError("active rows do not reproduce the lexicographic optimum")
    if len(res.tight) == n:
        cand = active[res.tight]
        basis = _make_basis(A, b, cand, tags)
        if np.linalg.matrix_rank(basis.P) == n and matches(lexmin_of(np.array(basis.rows))):
            return basis
    keep = list(active)
    for r in list(active):
        trial = [k for k in keep if k != r]
        if trial and matches(lexmin_of(np.array(trial))):
            keep = trial
    if len(keep) != n:
        raise SolverError(f"greedy basis extraction ended with {len(keep)} rows, expected {n}")
    return _make_basis(A, b, keep, tags)


def farkas_certificate(A_ub, b_ub, A_eq=None, b_eq=None) -> np.ndarray | None:
    """Multipliers ``y`` proving infeasibility of ``A_ub x <= b_ub, A_eq x = b_eq``.

    Returns ``y = (y_ub >= 0, y_eq)`` with ``A^T y = 0`` and ``b^T y = -1``,
    or ``None`` when the system is feasible.
    """
    A_ub = np.atleast_2d(np.asarray(A_ub, dtype=float))
    n = A_ub.shape[1]
    b_ub = np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    m, k = len(b_ub), len(b_eq)
    # unknowns (y_ub, y_eq); y_ub >= 0 as rows -y_ub <= 0
    A_all = np.vstack([A_ub, A_eq])
    eq = np.vstack([A_all.T, np.concatenate([b_ub, b_eq])[None, :]])
    rhs = np.concatenate([np.zeros(n), [-1.0]])
    ub = np.hstack([-np.eye(m), np.zeros((m, k))])
    res = simplex(np.zeros((1, m + k)), ub, np.zeros(m), eq, rhs)
    return res.x if res.status == "optimal" else None
