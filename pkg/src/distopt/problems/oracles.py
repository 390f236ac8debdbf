"""Cost-function and constraint-set oracles.

Costs expose ``value`` and ``subgradient``; smooth ones add ``gradient``
and optionally ``hessian``.  Costs with a closed quadratic form carry it in
``quadratic`` so solvers can skip iterative methods, and costs with a cheap
proximal operator expose ``prox``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from ..errors import ConfigError


class Cost:
    dim: int
    smooth: bool = False
    lipschitz: float | None = None
    strong_convexity: float | None = None
    quadratic: tuple[np.ndarray, np.ndarray, float] | None = None

    def value(self, x) -> float:
        raise NotImplementedError

    def subgradient(self, x) -> np.ndarray:
        return self.gradient(x)

    def gradient(self, x) -> np.ndarray:
        raise ConfigError(f"{type(self).__name__} is not differentiable; use subgradient()")

    def hessian(self, x) -> np.ndarray:
        raise ConfigError(f"{type(self).__name__} has no Hessian oracle")

    def prox(self, v, t: float) -> np.ndarray:
        raise ConfigError(f"{type(self).__name__} has no proximal operator")

    @property
    def has_prox(self) -> bool:
        return type(self).prox is not Cost.prox

    def __add__(self, other: "Cost") -> "SumCost":
        return SumCost([self, other])


class QuadraticCost(Cost):
    """``1/2 x^T H x + q^T x + c0`` with symmetric positive semidefinite ``H``."""

    smooth = True

    def __init__(self, H, q, c0: float = 0.0):
        q = np.asarray(q, dtype=float).ravel()
        H = np.asarray(H, dtype=float).reshape(len(q), len(q))
        self.H = 0.5 * (H + H.T)
        self.q = q
        self.c0 = float(c0)
        self.dim = len(q)
        eig = np.linalg.eigvalsh(self.H) if self.dim else np.zeros(0)
        if eig.size and eig.min() < -1e-9 * (1 + abs(eig).max()):
            raise ConfigError("quadratic cost is not convex")
        self.lipschitz = float(eig.max(initial=0.0))
        self.strong_convexity = float(max(eig.min(initial=0.0), 0.0))
        self.quadratic = (self.H, self.q, self.c0)

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H @ x + self.q @ x + self.c0)

    def gradient(self, x) -> np.ndarray:
        return self.H @ np.asarray(x, dtype=float) + self.q

    def hessian(self, x) -> np.ndarray:
        return self.H


def linear_cost(c) -> QuadraticCost:
    c = np.asarray(c, dtype=float).ravel()
    return QuadraticCost(np.zeros((len(c), len(c))), c)


def least_squares_cost(D, b) -> QuadraticCost:
    """``||D x - b||^2``."""
    D = np.atleast_2d(np.asarray(D, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    return QuadraticCost(2.0 * D.T @ D, -2.0 * D.T @ b, float(b @ b))


class L1Cost(Cost):
    """``weight * ||x||_1``; the subgradient at a kink is 0."""

    def __init__(self, dim: int, weight: float):
        if weight < 0:
            raise ConfigError("l1 weight must be nonnegative")
        self.dim = dim
        self.weight = float(weight)

    def value(self, x) -> float:
        return self.weight * float(np.abs(x).sum())

    def subgradient(self, x) -> np.ndarray:
        return self.weight * np.sign(np.asarray(x, dtype=float))

    def prox(self, v, t: float) -> np.ndarray:
        return soft_threshold(v, t * self.weight)


def soft_threshold(v, tau: float) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


class LogisticCost(Cost):
    """Logistic loss over samples plus ``reg/2 ||w||^2``; variable is ``(w, b)``."""

    smooth = True

    def __init__(self, points, labels, reg: float):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.labels = np.asarray(labels, dtype=float).ravel()
        if not np.isin(self.labels, (-1.0, 1.0)).all():
            raise ConfigError("labels must be +1 or -1")
        self.reg = float(reg)
        d = self.points.shape[1]
        self.dim = d + 1
        aug = np.hstack([self.points, np.ones((len(self.labels), 1))])
        self._signed = aug * self.labels[:, None]
        self.lipschitz = 0.25 * float(np.linalg.eigvalsh(aug.T @ aug).max(initial=0.0)) + self.reg
        self.strong_convexity = 0.0

    def _margins(self, x) -> np.ndarray:
        return self._signed @ np.asarray(x, dtype=float)

    def value(self, x) -> float:
        w = np.asarray(x, dtype=float)[:-1]
        return float(np.logaddexp(0.0, -self._margins(x)).sum() + 0.5 * self.reg * w @ w)

    def gradient(self, x) -> np.ndarray:
        s = expit(-self._margins(x))
        g = -self._signed.T @ s
        g[:-1] += self.reg * np.asarray(x, dtype=float)[:-1]
        return g

    def hessian(self, x) -> np.ndarray:
        s = expit(-self._margins(x))
        wts = s * (1.0 - s)
        h = self._signed.T @ (self._signed * wts[:, None])
        h[np.arange(self.dim - 1), np.arange(self.dim - 1)] += self.reg
        return h


class MaxAffineCost(Cost):
    """Sum of pointwise maxima of affine pieces: ``sum_k max_j (G_kj x + h_kj)``.

    At a kink the subgradient is 0 when 0 belongs to the subdifferential and
    the midpoint of the active gradients otherwise.
    """

    def __init__(self, dim: int, groups):
        self.dim = dim
        self.groups = [(np.atleast_2d(np.asarray(G, dtype=float)), np.asarray(h, dtype=float).ravel())
                       for G, h in groups]

    def value(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(sum((G @ x + h).max() for G, h in self.groups))

    def subgradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(self.dim)
        for G, h in self.groups:
            vals = G @ x + h
            act = G[vals >= vals.max() - 1e-12 * (1.0 + abs(vals.max()))]
            if len(act) == 1:
                out += act[0]
            elif not _zero_in_hull(act):
                out += act.mean(axis=0)
        return out


def _zero_in_hull(G: np.ndarray) -> bool:
    from ..localsolve.qp import qp_solve

    k = len(G)
    res = qp_solve(G @ G.T, np.zeros(k), -np.eye(k), np.zeros(k), np.ones((1, k)), np.ones(1)).report
    return res.ok and res.value <= 1e-20


class SumCost(Cost):
    """Sum of cost terms over the same variable."""

    def __init__(self, terms):
        flat = []
        for t in terms:
            flat.extend(t.terms if isinstance(t, SumCost) else [t])
        dims = {t.dim for t in flat}
        if len(dims) != 1:
            raise ConfigError("summed costs must share the variable dimension")
        self.terms = flat
        self.dim = dims.pop()
        self.smooth = all(t.smooth for t in flat)
        if all(t.quadratic is not None for t in flat):
            H = sum(t.quadratic[0] for t in flat)
            q = sum(t.quadratic[1] for t in flat)
            self.quadratic = (H, q, sum(t.quadratic[2] for t in flat))
        if self.smooth and all(t.lipschitz is not None for t in flat):
            self.lipschitz = float(sum(t.lipschitz for t in flat))
        if all(t.strong_convexity is not None for t in flat):
            self.strong_convexity = float(sum(t.strong_convexity for t in flat))

    def value(self, x) -> float:
        return float(sum(t.value(x) for t in self.terms))

    def subgradient(self, x) -> np.ndarray:
        return sum(t.subgradient(x) for t in self.terms)

    def gradient(self, x) -> np.ndarray:
        if not self.smooth:
            raise ConfigError("sum contains a nonsmooth term; use subgradient()")
        return sum(t.gradient(x) for t in self.terms)

    def hessian(self, x) -> np.ndarray:
        return sum(t.hessian(x) for t in self.terms)

    def split(self) -> tuple["Cost | None", "Cost | None"]:
        """Smooth part and a single prox-friendly part, when the sum has that shape."""
        smooth = [t for t in self.terms if t.smooth]
        rough = [t for t in self.terms if not t.smooth]
        s = None if not smooth else (smooth[0] if len(smooth) == 1 else SumCost(smooth))
        if len(rough) > 1:
            return s, None
        return s, (rough[0] if rough else None)


# --- constraint sets ---------------------------------------------------------


class ConvexSet:
    dim: int

    def contains(self, x, tol: float = 1e-9) -> bool:
        raise NotImplementedError

    def project(self, x) -> np.ndarray:
        raise NotImplementedError

    polyhedron: tuple | None = None  # (A, b, E, e) when the set is polyhedral
    radius: float | None = None  # bounding radius around the origin, if compact


@dataclass
class Reals(ConvexSet):
    dim: int

    def contains(self, x, tol: float = 1e-9) -> bool:
        return True

    def project(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float).copy()

    @property
    def polyhedron(self):
        return (np.zeros((0, self.dim)), np.zeros(0), np.zeros((0, self.dim)), np.zeros(0))


@dataclass
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.asarray(self.upper, dtype=float).ravel()
        if (self.lower > self.upper).any():
            raise ConfigError("box lower bound exceeds upper bound")
        self.dim = len(self.lower)

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x)
        return bool((x >= self.lower - tol).all() and (x <= self.upper + tol).all())

    def project(self, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    @property
    def polyhedron(self):
        n = self.dim
        A = np.vstack([np.eye(n), -np.eye(n)])
        b = np.concatenate([self.upper, -self.lower])
        keep = np.isfinite(b)
        return A[keep], b[keep], np.zeros((0, n)), np.zeros(0)

    @property
    def radius(self):
        return float(np.linalg.norm(np.maximum(np.abs(self.lower), np.abs(self.upper))))


@dataclass
class Polyhedron(ConvexSet):
    """``{x : A x <= b, E x = e}``."""

    A: np.ndarray
    b: np.ndarray
    E: np.ndarray | None = None
    e: np.ndarray | None = None
    bound: float | None = None
    _last_working: tuple = field(default=(), repr=False)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.A = np.asarray(self.A, dtype=float).reshape(len(self.b), -1)
        self.dim = self.A.shape[1]
        if self.E is None:
            self.E, self.e = np.zeros((0, self.dim)), np.zeros(0)
        self.e = np.asarray(self.e, dtype=float).ravel()
        self.E = np.asarray(self.E, dtype=float).reshape(len(self.e), self.dim)
        self.radius = self.bound

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        ok = (self.A @ x - self.b).max(initial=0.0) <= tol
        return bool(ok and np.abs(self.E @ x - self.e).max(initial=0.0) <= tol)

    def project(self, x) -> np.ndarray:
        from ..localsolve.qp import qp_solve

        x = np.asarray(x, dtype=float)
        res = qp_solve(np.eye(self.dim), -x, self.A, self.b, self.E, self.e, working=self._last_working)
        if not res.report.ok:
            raise ConfigError("projection onto an empty polyhedron")
        self._last_working = res.working
        return res.report.x

    @property
    def polyhedron(self):
        return self.A, self.b, self.E, self.e


@dataclass
class Ball(ConvexSet):
    center: np.ndarray
    r: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float).ravel()
        self.dim = len(self.center)
        self.radius = float(np.linalg.norm(self.center) + self.r)

    def contains(self, x, tol: float = 1e-9) -> bool:
        return bool(np.linalg.norm(np.asarray(x) - self.center) <= self.r + tol)

    def project(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float) - self.center
        nv = np.linalg.norm(v)
        return self.center + (v if nv <= self.r else v * (self.r / nv))
