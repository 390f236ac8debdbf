"""First- and second-order centralized solvers and the regularized argmin.

These are the building blocks agents call inside their local updates and
the oracles the tests compare against.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import ConfigError
from ..problems.oracles import ConvexSet, Cost, Reals, SumCost
from .qp import qp_solve
from .report import SolveReport

DEFAULT_MAX_ITER = 100_000
DEFAULT_TOL = 1e-9


def gradient_solve(f: Cost, x0, gamma: float, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> SolveReport:
    """Fixed-step gradient descent ``x <- x - gamma * grad f(x)``.

    Stops when the gradient norm drops below ``tol``.  Ten consecutive
    increases of the cost are reported as divergence.
    """
    if not f.smooth:
        raise ConfigError("gradient_solve needs a differentiable cost")
    if gamma <= 0 or (f.lipschitz and gamma >= 2.0 / f.lipschitz):
        raise ConfigError(f"step {gamma} outside (0, 2/L) with L = {f.lipschitz}")
    x = np.array(x0, dtype=float)
    last = f.value(x)
    rises = 0
    for it in range(max_iter + 1):
        g = f.gradient(x)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            return SolveReport(x, f.value(x), "optimal", iterations=it, residual=gnorm)
        x = x - gamma * g
        val = f.value(x)
        rises = rises + 1 if val > last else 0
        last = val
        if rises >= 10 or not np.isfinite(val):
            return SolveReport(x, val, "max_iter", iterations=it + 1, residual=gnorm, info={"diverging": True})
    return SolveReport(x, f.value(x), "max_iter", iterations=max_iter, residual=gnorm)


def newton_solve(f: Cost, x0, tol: float = 1e-12, max_iter: int = 200) -> SolveReport:
    """Damped Newton method with Armijo backtracking for smooth convex costs."""
    x = np.array(x0, dtype=float)
    for it in range(max_iter):
        g = f.gradient(x)
        if np.linalg.norm(g) <= tol * (1.0 + abs(f.value(x))):
            return SolveReport(x, f.value(x), "optimal", iterations=it, residual=float(np.linalg.norm(g)))
        step = -np.linalg.solve(f.hessian(x), g)
        t, fx, slope = 1.0, f.value(x), float(g @ step)
        # near the optimum the decrease falls below the resolution of f, so a
        # full step that shrinks the gradient is accepted as well
        if np.linalg.norm(f.gradient(x + step)) >= 0.5 * np.linalg.norm(g):
            while f.value(x + t * step) > fx + 0.25 * t * slope and t > 1e-12:
                t *= 0.5
        x = x + t * step
    g = f.gradient(x)
    return SolveReport(x, f.value(x), "max_iter", iterations=max_iter, residual=float(np.linalg.norm(g)))


def projected_subgradient_solve(
    f: Cost,
    project: Callable[[np.ndarray], np.ndarray] | None,
    schedule: Callable[[int], float],
    x0,
    max_iter: int = 10_000,
) -> SolveReport:
    """``x <- P_X(x - gamma^t g)``; returns the best iterate seen."""
    project = project or (lambda v: v)
    x = project(np.array(x0, dtype=float))
    best_x, best = x.copy(), f.value(x)
    for t in range(max_iter):
        x = project(x - schedule(t) * f.subgradient(x))
        val = f.value(x)
        if val < best:
            best, best_x = val, x.copy()
    return SolveReport(best_x, best, "max_iter", iterations=max_iter, info={"last": x})


def _fista(smooth_grad, lip: float, prox, x0, max_iter: int, tol: float, strong: float = 0.0):
    """Accelerated proximal gradient; ``prox(v, t)`` handles the rest of the cost."""
    x = np.array(x0, dtype=float)
    y, t = x.copy(), 1.0
    step = 1.0 / lip
    if strong > 0:
        q = strong / lip
        momentum = (1 - np.sqrt(q)) / (1 + np.sqrt(q))
    for it in range(1, max_iter + 1):
        x_new = prox(y - step * smooth_grad(y), step)
        if strong > 0:
            y = x_new + momentum * (x_new - x)
        else:
            t_new = 0.5 * (1 + np.sqrt(1 + 4 * t * t))
            y = x_new + ((t - 1) / t_new) * (x_new - x)
            t = t_new
        moved = float(np.linalg.norm(x_new - x))
        x = x_new
        if moved <= tol * (1.0 + np.linalg.norm(x)):
            return x, it, True
    return x, max_iter, False


def proximal_gradient_solve(smooth: Cost, rough: Cost, x0, max_iter: int = DEFAULT_MAX_ITER, tol: float = 1e-12) -> SolveReport:
    """Minimize ``smooth + rough`` with FISTA; ``rough`` must have a prox."""
    lip = smooth.lipschitz or 1.0
    x, it, ok = _fista(smooth.gradient, lip, rough.prox, x0, max_iter, tol, smooth.strong_convexity or 0.0)
    val = smooth.value(x) + rough.value(x)
    return SolveReport(x, val, "optimal" if ok else "max_iter", iterations=it)


def argmin_plus_quadratic(
    f: Cost | None,
    X: ConvexSet | None,
    Hq: np.ndarray,
    qq: np.ndarray,
    warm: tuple = (),
    x0=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SolveReport:
    """Minimize ``f(x) + 1/2 x^T Hq x + qq^T x`` over ``X``.

    Quadratic ``f`` over a polyhedral ``X`` is solved exactly (linear solve
    or active-set QP, warm-started from ``warm``); otherwise an accelerated
    proximal or projected gradient method runs to ``tol``.
    """
    qq = np.asarray(qq, dtype=float).ravel()
    n = len(qq)
    X = X or Reals(n)
    quad = f.quadratic if f is not None else (np.zeros((n, n)), np.zeros(n), 0.0)
    if quad is not None and X.polyhedron is not None:
        H = quad[0] + Hq
        q = quad[1] + qq
        A, b, E, e = X.polyhedron
        if A.shape[0] == 0 and E.shape[0] == 0:
            x, *_ = np.linalg.lstsq(H, -q, rcond=None)
            resid = float(np.abs(H @ x + q).max(initial=0.0))
            if resid > 1e-8 * (1.0 + np.abs(q).max(initial=0.0)):
                return SolveReport(None, -np.inf, "unbounded", residual=resid)
            val = float(0.5 * x @ H @ x + q @ x + quad[2])
            return SolveReport(x, val, "optimal", residual=resid)
        res = qp_solve(H, q, A, b, E, e, x0=x0, working=warm)
        rep = res.report
        rep.info["working"] = res.working
        if rep.ok:
            rep.value += quad[2]
        return rep

    if f is None:
        raise ConfigError("nothing to minimize")
    smooth, rough = (f.split() if isinstance(f, SumCost) else ((f, None) if f.smooth else (None, f)))
    if rough is not None and not rough.has_prox:
        raise ConfigError(f"{type(rough).__name__} needs a proximal operator for this solver")
    if rough is not None and not isinstance(X, Reals):
        raise ConfigError("a nonsmooth cost over a constraint set is not supported here")
    hq_eig = np.linalg.eigvalsh(Hq) if n else np.zeros(0)
    lip = (smooth.lipschitz if smooth is not None else 0.0) + float(hq_eig.max(initial=0.0))
    strong = float(hq_eig.min(initial=0.0))
    if smooth is not None and smooth.strong_convexity:
        strong += smooth.strong_convexity
    if lip <= 0:
        raise ConfigError("no curvature to bound the step size")

    def grad(v):
        g = Hq @ v + qq
        return g + smooth.gradient(v) if smooth is not None else g

    if rough is not None:
        prox = rough.prox
    else:
        prox = lambda v, t: X.project(v)
    start = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    x, it, ok = _fista(grad, lip, prox, start, max_iter, tol * 1e-2, strong)
    val = f.value(x) + float(0.5 * x @ Hq @ x + qq @ x)
    return SolveReport(x, val, "optimal" if ok else "max_iter", iterations=it)


def regularized_argmin(
    f: Cost | None,
    X: ConvexSet | None,
    linear=None,
    anchors=(),
    rho: float = 0.0,
    warm: tuple = (),
    x0=None,
    tol: float = DEFAULT_TOL,
) -> SolveReport:
    """``argmin_{x in X} f(x) + linear^T x + rho/2 * sum_k ||x - z_k||^2``.

    The reported value excludes the linear and proximal terms' constants
    only; it is the full objective at the minimizer.
    """
    if rho < 0:
        raise ConfigError("rho must be nonnegative")
    dim = f.dim if f is not None else (X.dim if X is not None else len(np.ravel(linear)))
    anchors = [np.asarray(z, dtype=float).ravel() for z in anchors]
    lin = np.zeros(dim) if linear is None else np.asarray(linear, dtype=float).ravel()
    K = len(anchors)
    Hq = (rho * K) * np.eye(dim)
    qq = lin - rho * (sum(anchors) if anchors else np.zeros(dim))
    rep = argmin_plus_quadratic(f, X, Hq, qq, warm=warm, x0=x0, tol=tol)
    if rep.x is not None:
        rep.value += 0.5 * rho * sum(float(z @ z) for z in anchors)
    return rep


def primal_dual_solve(
    f: Cost,
    X: ConvexSet | None,
    G,
    h,
    warm: tuple = (),
    x0=None,
) -> SolveReport:
    """Solve ``min f(x)`` s.t. ``x in X``, ``G x + h <= 0`` with multipliers.

    ``f`` must be quadratic (or linear) and ``X`` polyhedral; the returned
    ``multipliers`` are those of the ``G`` rows and ``info["set_multipliers"]``
    holds the ones of ``X``'s rows.  Infeasible problems carry a Farkas
    certificate in ``info["certificate"]``.
    """
    from .simplex import farkas_certificate

    if f.quadratic is None:
        raise ConfigError("primal_dual_solve handles quadratic and linear costs")
    n = f.dim
    X = X or Reals(n)
    if X.polyhedron is None:
        raise ConfigError("primal_dual_solve needs a polyhedral constraint set")
    A, b, E, e = X.polyhedron
    G = np.asarray(G, dtype=float).reshape(-1, n)
    h = np.asarray(h, dtype=float).ravel()
    H, q, c0 = f.quadratic
    AA = np.vstack([G, A])
    bb = np.concatenate([-h, b])
    res = qp_solve(H, q, AA, bb, E, e, x0=x0, working=warm)
    rep = res.report
    if rep.status == "infeasible":
        rep.info["certificate"] = farkas_certificate(AA, bb, E if E.shape[0] else None, e if E.shape[0] else None)
        return rep
    if not rep.ok:
        return rep
    rep.value += c0
    mult = rep.multipliers
    rep.info["working"] = res.working
    rep.info["set_multipliers"] = mult[len(h):]
    rep.multipliers = mult[: len(h)]
    return rep


def centralized_admm(
    G1: Cost | None,
    C1: ConvexSet | None,
    G2: Cost | None,
    C2: ConvexSet | None,
    A,
    B,
    c,
    rho: float,
    iters: int = 10_000,
    tol: float = 1e-9,
) -> SolveReport:
    """ADMM for ``min G1(x) + G2(z)`` s.t. ``A x + B z + c = 0``, ``x in C1``, ``z in C2``.

    Returns the stacked ``(x, z)``; ``info`` holds ``z``, the multiplier
    ``lam`` and the per-iteration multiplier step norms.
    """
    if rho <= 0:
        raise ConfigError("rho must be positive")
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    c = np.asarray(c, dtype=float).ravel()
    nx, nz = A.shape[1], B.shape[1]
    x, z, lam = np.zeros(nx), np.zeros(nz), np.zeros(len(c))
    steps = []
    warm_x, warm_z = (), ()
    HA, HB = rho * A.T @ A, rho * B.T @ B
    for it in range(1, iters + 1):
        v = B @ z + c + lam / rho
        rx = argmin_plus_quadratic(G1, C1, HA, rho * A.T @ v, warm=warm_x, x0=x)
        if rx.x is None:
            return SolveReport(None, np.nan, rx.status, iterations=it)
        x, warm_x = rx.x, rx.info.get("working", ())
        v = A @ x + c + lam / rho
        rz = argmin_plus_quadratic(G2, C2, HB, rho * B.T @ v, warm=warm_z, x0=z)
        if rz.x is None:
            return SolveReport(None, np.nan, rz.status, iterations=it)
        z_old, z, warm_z = z, rz.x, rz.info.get("working", ())
        r = A @ x + B @ z + c
        lam_new = lam + rho * r
        steps.append(float(np.linalg.norm(lam_new - lam)))
        lam = lam_new
        dual_res = rho * np.linalg.norm(A.T @ (B @ (z - z_old)))
        if np.linalg.norm(r) <= tol and dual_res <= tol:
            break
    status = "optimal" if np.linalg.norm(r) <= tol and dual_res <= tol else "max_iter"
    val = (G1.value(x) if G1 else 0.0) + (G2.value(z) if G2 else 0.0)
    return SolveReport(np.concatenate([x, z]), val, status, lam, it, float(np.linalg.norm(r)),
                       info={"x": x, "z": z, "lam": lam, "dual_steps": steps})
