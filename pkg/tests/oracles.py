"""Brute-force reference solvers used only by the tests."""

import itertools

import numpy as np


def vertex_lexmin(c, A, b, tol=1e-9):
    """Lexicographic minimizer of ``c^T x`` over ``A x <= b`` by enumerating all vertices.

    Returns ``None`` when no vertex exists (empty or unbounded-below sets are
    not expected in the callers).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    verts = []
    for rows in itertools.combinations(range(len(b)), n):
        P = A[list(rows)]
        if abs(np.linalg.det(P)) < 1e-12:
            continue
        x = np.linalg.solve(P, b[list(rows)])
        if (A @ x - b).max() <= tol * (1 + np.abs(b).max()):
            verts.append(x)
    if not verts:
        return None
    verts = np.array(verts)
    key = np.column_stack([verts @ c, verts])
    best = key[0]
    for k in key[1:]:
        for a, bb in zip(k, best):
            if a < bb - tol:
                best = k
                break
            if a > bb + tol:
                break
    return best[1:]


def kkt_enumeration(H, q, A, b):
    """Minimizer and multipliers of ``1/2 x^T H x + q^T x`` s.t. ``A x <= b`` by trying every active set."""
    n = len(q)
    m = len(b)
    for k in range(0, min(n, m) + 1):
        for rows in itertools.combinations(range(m), k):
            rows = list(rows)
            K = np.block([[H, A[rows].T], [A[rows], np.zeros((k, k))]])
            rhs = np.concatenate([-q, b[rows]])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x, lam = sol[:n], sol[n:]
            if (A @ x - b).max(initial=0) <= 1e-9 and (lam >= -1e-9).all():
                mult = np.zeros(m)
                mult[rows] = lam
                return x, mult
    return None, None


def _inside(prob, pts):
    ok = np.ones(len(pts), dtype=bool)
    for c in prob.constraints:
        A, b = c.linear_rows(2)
        if len(b):
            ok &= (pts @ A.T <= b + 1e-12).all(axis=1)
        for piece in c.smooth_pieces():
            center, r = piece.data
            ok &= np.linalg.norm(pts - center, axis=1) <= r
    return ok


def grid_minimum(prob, axis=0, sign=1.0, half_width=5.0, points=401, refinements=4):
    """Smallest ``sign * x[axis]`` over a planar feasible set, by repeatedly refined grids."""
    lo = np.array([-half_width, -half_width])
    hi = np.array([half_width, half_width])
    best = None
    for _ in range(refinements + 1):
        h = (hi - lo) / (points - 1)
        X, Y = np.meshgrid(np.linspace(lo[0], hi[0], points), np.linspace(lo[1], hi[1], points))
        pts = np.stack([X.ravel(), Y.ravel()], axis=1)
        pts = pts[_inside(prob, pts)]
        if not len(pts):
            return best
        vals = sign * pts[:, axis]
        best = vals.min()
        near = pts[vals <= best + 2 * h[axis]]
        lo, hi = near.min(axis=0) - 2 * h, near.max(axis=0) + 2 * h
    return best
