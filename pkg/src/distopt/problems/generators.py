"""Problem instances in the three set-up shapes and their generators."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import ortho_group

from ..errors import ConfigError, InfeasibleError
from .descriptors import Descriptor, Disk, Halfspace, LinearRows, SvmSample, from_payload
from .oracles import (
    ConvexSet,
    Cost,
    L1Cost,
    LogisticCost,
    Polyhedron,
    QuadraticCost,
    Reals,
    least_squares_cost,
    linear_cost,
)


@dataclass
class CostCoupledProblem:
    """``min sum_i f_i(x)`` over a shared set ``X``."""

    costs: list[Cost]
    X: ConvexSet
    dim: int
    meta: dict = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return len(self.costs)

    def total_cost(self, x) -> float:
        return float(sum(f.value(x) for f in self.costs))

    def sum_of_local_costs(self, xs) -> float:
        return float(sum(f.value(x) for f, x in zip(self.costs, xs)))


@dataclass
class CommonCostProblem:
    """``min f(x)`` over the intersection of private sets ``X_i``.

    ``cost`` is a :class:`QuadraticCost`; linear costs have a zero Hessian.
    ``constraints[i]`` is agent ``i``'s descriptor.  ``M`` is the radius of
    the artificial bounding box, or ``None``.
    """

    cost: QuadraticCost
    constraints: list[Descriptor]
    dim: int
    M: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return len(self.constraints)

    @property
    def linear(self) -> bool:
        return not np.any(self.cost.H)

    def max_violation(self, x) -> float:
        return max(c.violation(x) for c in self.constraints)


@dataclass
class LocalPiece:
    """Agent data of a constraint-coupled problem: ``f_i``, ``X_i`` and ``g_i(x) = G x + h``."""

    cost: QuadraticCost
    X: Polyhedron
    G: np.ndarray
    h: np.ndarray
    kind: str = ""
    power: np.ndarray | None = None  # indices of the power trajectory inside x

    @property
    def dim(self) -> int:
        return self.cost.dim

    def g(self, x) -> np.ndarray:
        return self.G @ np.asarray(x, dtype=float) + self.h


@dataclass
class ConstraintCoupledProblem:
    """``min sum_i f_i(x_i)`` s.t. ``x_i in X_i`` and ``sum_i g_i(x_i) <= 0``."""

    pieces: list[LocalPiece]
    S: int
    slater: list[np.ndarray]
    meta: dict = field(default_factory=dict)

    @property
    def n_agents(self) -> int:
        return len(self.pieces)

    def total_cost(self, xs) -> float:
        return float(sum(p.cost.value(x) for p, x in zip(self.pieces, xs)))

    def coupling(self, xs) -> np.ndarray:
        return sum(p.g(x) for p, x in zip(self.pieces, xs))

    def max_violation(self, xs) -> float:
        return float(self.coupling(xs).max())

    def radii(self) -> list[float]:
        return [float(p.X.radius) for p in self.pieces]


# --- cost-coupled generators -------------------------------------------------


def lasso_from_data(Ds, bs, rho: float) -> CostCoupledProblem:
    if rho < 0:
        raise ConfigError("rho must be nonnegative")
    Ds = [np.atleast_2d(np.asarray(D, dtype=float)) for D in Ds]
    N, d = len(Ds), Ds[0].shape[1]
    costs = [least_squares_cost(D, b) + L1Cost(d, rho / N) for D, b in zip(Ds, bs)]
    return CostCoupledProblem(costs, Reals(d), d, {"generator": "lasso", "rho": rho,
                                                    "data": {"D": [D.tolist() for D in Ds],
                                                             "b": [np.ravel(b).tolist() for b in bs]}})


def make_lasso(N: int, n_i: int, d: int, rho: float, seed: int) -> CostCoupledProblem:
    """``f_i(x) = ||D_i x - b_i||^2 + rho/N ||x||_1`` with Gaussian data."""
    if rho <= 0:
        raise ConfigError("rho must be positive")
    rng = np.random.default_rng(seed)
    Ds = [rng.standard_normal((n_i, d)) for _ in range(N)]
    bs = [rng.standard_normal(n_i) for _ in range(N)]
    prob = lasso_from_data(Ds, bs, rho)
    prob.meta.update({"seed": seed, "N": N, "n_i": n_i, "d": d})
    return prob


def logistic_from_data(points, labels, C: float) -> CostCoupledProblem:
    if C <= 0:
        raise ConfigError("C must be positive")
    N = len(points)
    costs = [LogisticCost(p, l, C / N) for p, l in zip(points, labels)]
    d = costs[0].dim
    return CostCoupledProblem(costs, Reals(d), d, {
        "generator": "logistic", "C": C,
        "data": {"points": [np.asarray(p).tolist() for p in points],
                 "labels": [np.asarray(l).tolist() for l in labels]}})


def make_logistic(N: int = 30, m_i: int = 10, d: int = 5, C: float = 0.01, seed: int = 0) -> CostCoupledProblem:
    """Logistic regression over ``(w, b)``: points ~ N(0, 2 I), labels uniform in {-1, +1}."""
    rng = np.random.default_rng(seed)
    points = [rng.normal(0.0, np.sqrt(2.0), (m_i, d)) for _ in range(N)]
    labels = [np.where(rng.random(m_i) < 0.5, -1.0, 1.0) for _ in range(N)]
    prob = logistic_from_data(points, labels, C)
    prob.meta.update({"seed": seed, "N": N, "m_i": m_i, "d": d})
    return prob


def make_random_qp(N: int = 10, d: int = 5, eig_range=(1.0, 10.0), seed: int = 0) -> CostCoupledProblem:
    """``f_i(x) = x^T Q_i x + r_i^T x`` with ``Q_i = U diag(lambda) U^T``."""
    lo, hi = eig_range
    if not 0 < lo <= hi:
        raise ConfigError("eigenvalue range must be positive")
    rng = np.random.default_rng(seed)
    Qs, rs = [], []
    for _ in range(N):
        U = ortho_group.rvs(d, random_state=rng) if d > 1 else np.ones((1, 1))
        lam = rng.uniform(lo, hi, d)
        Qs.append(U @ np.diag(lam) @ U.T)
        rs.append(rng.standard_normal(d))
    prob = qp_from_data(Qs, rs)
    prob.meta.update({"seed": seed, "N": N, "d": d, "eig_range": [lo, hi]})
    return prob


def qp_from_data(Qs, rs) -> CostCoupledProblem:
    Qs = [np.atleast_2d(np.asarray(Q, dtype=float)) for Q in Qs]
    costs = [QuadraticCost(Q + Q.T, r) for Q, r in zip(Qs, rs)]
    d = costs[0].dim
    return CostCoupledProblem(costs, Reals(d), d, {
        "generator": "random_qp", "data": {"Q": [Q.tolist() for Q in Qs], "r": [np.ravel(r).tolist() for r in rs]}})


# --- common-cost generators --------------------------------------------------


def svm_from_data(points, labels, C: float, M: float | None = 10.0) -> CommonCostProblem:
    """Soft-margin SVM over ``(w, b, xi)``; agent ``i`` holds sample ``i``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    labels = np.asarray(labels, dtype=float).ravel()
    N, d = points.shape
    n = d + 1 + N
    H = np.zeros((n, n))
    H[:d, :d] = np.eye(d)
    q = np.zeros(n)
    q[d + 1:] = C
    cons = [SvmSample(tuple(points[i]), float(labels[i]), i, N) for i in range(N)]
    meta = {"generator": "soft_svm", "C": C, "d": d,
            "data": {"points": points.tolist(), "labels": labels.tolist()}}
    if C == 0:
        meta["degenerate"] = True
    return CommonCostProblem(QuadraticCost(H, q), cons, n, M, meta)


def make_soft_svm(N: int = 30, d: int = 2, C: float = 100.0, seed: int = 0, M: float | None = 10.0,
                  means=None) -> CommonCostProblem:
    """Half the samples from N(0, I) labeled +1, the rest from N(mu, I) labeled -1."""
    rng = np.random.default_rng(seed)
    if means is None:
        second = np.zeros(d)
        second[:2] = [3.0, 2.0][:d]
        means = (np.zeros(d), second)
    n_pos = N // 2
    pts = np.vstack([rng.standard_normal((n_pos, d)) + means[0],
                     rng.standard_normal((N - n_pos, d)) + means[1]])
    labels = np.concatenate([np.ones(n_pos), -np.ones(N - n_pos)])
    prob = svm_from_data(pts, labels, C, M)
    prob.meta.update({"seed": seed, "N": N})
    return prob


def make_random_lp(N: int, d: int, seed: int, M: float = 100.0, integer: bool = True) -> CommonCostProblem:
    """One halfspace per agent, feasible at the origin, random cost vector.

    Integer data make degenerate vertices (several rows through one point)
    common, which exercises lexicographic tie-breaking.
    """
    rng = np.random.default_rng(seed)
    if integer:
        A = rng.integers(-4, 5, (N, d)).astype(float)
        A[~A.any(axis=1), 0] = 1.0
        b = rng.integers(1, 6, N).astype(float)
        c = rng.integers(-3, 4, d).astype(float)
    else:
        A = rng.standard_normal((N, d))
        b = rng.uniform(0.5, 1.5, N)
        c = rng.standard_normal(d)
    cons = [Halfspace(tuple(A[i]), float(b[i]), i) for i in range(N)]
    return CommonCostProblem(linear_cost(c), cons, d, M, {
        "generator": "random_lp", "seed": seed, "N": N, "d": d,
        "data": {"A": A.tolist(), "b": b.tolist(), "c": c.tolist()}})


def _cone_rows(apex, direction, half_angle, reach):
    """Three rows: two bounding the angle, one bounding the distance along ``direction``."""
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    rows, rhs = [], []
    for sgn in (1.0, -1.0):
        ang = np.arctan2(u[1], u[0]) + sgn * half_angle
        edge = np.array([np.cos(ang), np.sin(ang)])
        normal = sgn * np.array([-edge[1], edge[0]])
        rows.append(normal)
        rhs.append(float(normal @ apex))
    rows.append(u)
    rhs.append(float(u @ apex + reach))
    return np.array(rows), np.array(rhs)


def make_target_localization(N: int = 6, objective_axis: int = 0, sign: float = 1.0, seed: int = 0,
                             sensors=None, M: float = 100.0) -> CommonCostProblem:
    """Bounding-box computation for a target sensed by disks, cones and quadrants.

    ``sensors`` may list dicts ``{"type": "disk"|"cone"|"quadrant", ...}``;
    otherwise sensors are placed at random around a hidden target so that
    every sensing set contains it.
    """
    c = np.zeros(2)
    c[objective_axis] = sign
    cons: list[Descriptor] = []
    if sensors is None:
        rng = np.random.default_rng(seed)
        target = rng.uniform(-1, 1, 2)
        kinds = ["disk", "cone", "quadrant"]
        sensors = []
        for i in range(N):
            ang = rng.uniform(0, 2 * np.pi)
            pos = target + rng.uniform(1.0, 3.0) * np.array([np.cos(ang), np.sin(ang)])
            dist = float(np.linalg.norm(target - pos))
            sensors.append({"type": kinds[i % 3], "position": pos.tolist(),
                            "radius": dist + rng.uniform(0.2, 1.0),
                            "direction": (target - pos + rng.normal(0, 0.1, 2)).tolist(),
                            "half_angle": float(rng.uniform(0.3, 0.6)),
                            "reach": dist + rng.uniform(0.2, 1.0)})
    for i, s in enumerate(sensors):
        kind = s["type"]
        pos = np.asarray(s["position"], dtype=float)
        if kind == "disk":
            cons.append(Disk(tuple(pos), float(s["radius"]), i))
        elif kind in ("cone", "quadrant"):
            A, b = _cone_rows(pos, s["direction"], s["half_angle"], s["reach"])
            if kind == "cone":
                cons.append(LinearRows(tuple(map(tuple, A)), tuple(b), i))
            else:
                cons.append(Disk(tuple(pos), float(s["radius"]), i, tuple(map(tuple, A)), tuple(b)))
        else:
            raise ConfigError(f"unknown sensor type {kind!r}")
    prob = CommonCostProblem(linear_cost(c), cons, 2, M, {
        "generator": "target_localization", "seed": seed, "sensors": sensors,
        "objective_axis": objective_axis, "sign": sign})
    return prob


# --- constraint-coupled generators ------------------------------------------


def make_task_assignment(N: int, edges=None, costs=None, seed: int = 0) -> ConstraintCoupledProblem:
    """Relaxed assignment LP: ``x_i`` on a simplex, each task covered exactly once.

    ``edges`` lists allowed (agent, task) pairs (all pairs by default) and
    ``costs`` is an ``N x N`` matrix (random by default).
    """
    rng = np.random.default_rng(seed)
    if edges is None:
        edges = [(i, k) for i in range(N) for k in range(N)]
    costs = rng.uniform(0, 1, (N, N)) if costs is None else np.asarray(costs, dtype=float)
    big = np.full((N, N), np.inf)
    for i, k in edges:
        big[i, k] = costs[i, k]
    finite = np.where(np.isfinite(big), big, 1e9)
    rows, cols = linear_sum_assignment(finite)
    if np.isinf(big[rows, cols]).any():
        raise InfeasibleError("no perfect matching exists in the allowed agent-task pairs")
    pieces, slater = [], []
    for i in range(N):
        tasks = sorted(k for a, k in edges if a == i)
        K = len(tasks)
        Hsel = np.zeros((N, K))
        for col, k in enumerate(tasks):
            Hsel[k, col] = 1.0
        X = Polyhedron(np.vstack([np.eye(K), -np.eye(K)]), np.concatenate([np.ones(K), np.zeros(K)]),
                       np.ones((1, K)), np.ones(1), bound=1.0)
        G = np.vstack([Hsel, -Hsel])
        h = np.concatenate([-np.ones(N) / N, np.ones(N) / N])
        pieces.append(LocalPiece(linear_cost([costs[i, k] for k in tasks]), X, G, h, "task", None))
        slater.append(np.ones(K) / K)
    return ConstraintCoupledProblem(pieces, 2 * N, slater, {
        "generator": "task_assignment", "seed": seed, "N": N, "edges": [list(e) for e in edges],
        "costs": costs.tolist(), "slater_strict": False})


MICROGRID_DEFAULTS = {
    "n_gen": 4, "n_stor": 3, "n_conl": 2, "S": 12,
    "gen_p_min": 0.2, "gen_p_max": 3.0, "gen_ramp": 0.8,
    "gen_alpha1": [0.3, 0.6], "gen_alpha2": [0.05, 0.15],
    "stor_discharge": 1.0, "stor_charge": 1.0, "stor_q_max": 4.0, "stor_q0": 2.0, "stor_wear": 0.0,
    "conl_P": 3.0, "conl_desired": [0.8, 1.6], "conl_beta": 2.0,
    "trade_E": 2.0, "trade_c1": 0.2, "trade_c2": 0.5, "trade_wear": 0.0,
    "demand_base": 5.0, "demand_swing": 2.5,
}


def _generator(S, p_min, p_max, ramp, a1, a2, D, N, idx):
    # x = p (S); cost a1 p + a2 p^2
    D_ramp = np.diff(np.eye(S), axis=0)
    A = np.vstack([np.eye(S), -np.eye(S), D_ramp, -D_ramp])
    b = np.concatenate([np.full(S, p_max), np.full(S, -p_min), np.full(S - 1, ramp), np.full(S - 1, ramp)])
    X = Polyhedron(A, b, bound=float(np.sqrt(S) * p_max))
    cost = QuadraticCost(2 * a2 * np.eye(S), np.full(S, a1))
    return LocalPiece(cost, X, -np.eye(S), D / N, "generator", np.arange(S))


def _storage(S, dis, chg, q_max, q0, wear, D, N):
    # x = p (S), generation positive; charge level q^s = q0 - sum_{k<s} p^k for s = 1..S; cost wear p^2
    L = np.tril(np.ones((S, S)))
    A = np.vstack([np.eye(S), -np.eye(S), L, -L])
    b = np.concatenate([np.full(S, dis), np.full(S, chg), np.full(S, q0), np.full(S, q_max - q0)])
    X = Polyhedron(A, b, bound=float(np.sqrt(S) * max(dis, chg)))
    return LocalPiece(QuadraticCost(2 * wear * np.eye(S), np.zeros(S)), X, -np.eye(S), D / N, "storage", np.arange(S))


def _load(S, P, desired, beta, D, N):
    # x = (p, u) with u >= p - p_des, u >= 0, u <= 2P (shed-load epigraph)
    n = 2 * S
    I, Z = np.eye(S), np.zeros((S, S))
    A = np.vstack([np.hstack([I, Z]), np.hstack([-I, Z]),
                   np.hstack([I, -I]), np.hstack([Z, -I]), np.hstack([Z, I])])
    b = np.concatenate([np.full(S, P), np.full(S, P), desired, np.zeros(S), np.full(S, 2 * P)])
    X = Polyhedron(A, b, bound=float(np.sqrt(n) * 2 * P))
    q = np.concatenate([np.zeros(S), np.full(S, beta)])
    G = np.hstack([-I, Z])
    return LocalPiece(QuadraticCost(np.zeros((n, n)), q), X, G, D / N, "load", np.arange(S))


def _trade(S, E, c1, c2, wear, D, N):
    # x = (p, u) with u >= |p|, u <= E; cost -c1 p + c2 u + wear p^2
    n = 2 * S
    I, Z = np.eye(S), np.zeros((S, S))
    A = np.vstack([np.hstack([I, -I]), np.hstack([-I, -I]), np.hstack([Z, I])])
    b = np.concatenate([np.zeros(S), np.zeros(S), np.full(S, E)])
    X = Polyhedron(A, b, bound=float(np.sqrt(n) * E))
    q = np.concatenate([np.full(S, -c1), np.full(S, c2)])
    H = np.zeros((n, n))
    H[:S, :S] = 2 * wear * I
    return LocalPiece(QuadraticCost(H, q), X, np.hstack([-I, Z]), D / N, "trade", np.arange(S))


def make_microgrid(seed: int = 0, demand=None, **overrides) -> ConstraintCoupledProblem:
    """Microgrid scheduling over ``S`` slots with generators, storage, loads and a grid link.

    Power is positive when injected into the microgrid.  The coupling row
    of agent ``i`` for slot ``s`` is ``-p_i^s + D^s / N`` so the sum over
    agents reads ``D^s - sum_i p_i^s <= 0``.  Unknown keys raise.
    """
    unknown = set(overrides) - set(MICROGRID_DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown microgrid parameters: {sorted(unknown)}")
    prm = {**MICROGRID_DEFAULTS, **overrides}
    S = int(prm["S"])
    if prm["gen_p_min"] > prm["gen_p_max"] or prm["gen_ramp"] < 0:
        raise ConfigError("inconsistent generator bounds")
    if prm["stor_wear"] < 0 or prm["trade_wear"] < 0:
        raise ConfigError("wear coefficients must be nonnegative")
    if not 0 <= prm["stor_q0"] <= prm["stor_q_max"]:
        raise ConfigError("storage initial charge outside [0, q_max]")
    rng = np.random.default_rng(seed)
    if demand is None:
        s = np.arange(S)
        demand = prm["demand_base"] + prm["demand_swing"] * np.sin(2 * np.pi * (s - 3) / S) + rng.uniform(-0.3, 0.3, S)
    D = np.asarray(demand, dtype=float).ravel()
    if len(D) != S:
        raise ConfigError(f"demand profile has {len(D)} slots, expected {S}")
    N = prm["n_gen"] + prm["n_stor"] + prm["n_conl"] + 1
    pieces = []
    gen_params = []
    for g in range(prm["n_gen"]):
        a1 = float(rng.uniform(*prm["gen_alpha1"]))
        a2 = float(rng.uniform(*prm["gen_alpha2"]))
        gen_params.append([a1, a2])
        pieces.append(_generator(S, prm["gen_p_min"], prm["gen_p_max"], prm["gen_ramp"], a1, a2, D, N, g))
    for _ in range(prm["n_stor"]):
        pieces.append(_storage(S, prm["stor_discharge"], prm["stor_charge"], prm["stor_q_max"], prm["stor_q0"],
                               prm["stor_wear"], D, N))
    desired = []
    for _ in range(prm["n_conl"]):
        lo, hi = prm["conl_desired"]
        des = -rng.uniform(lo, hi, S)
        desired.append(des.tolist())
        pieces.append(_load(S, prm["conl_P"], des, prm["conl_beta"], D, N))
    pieces.append(_trade(S, prm["trade_E"], prm["trade_c1"], prm["trade_c2"], prm["trade_wear"], D, N))
    if prm["trade_c2"] < prm["trade_c1"]:
        raise ConfigError("trade transaction cost c2 must be at least the price c1 (else imports are free)")

    slater = [_max_supply(p) for p in pieces]
    supply = -sum(p.G @ x for p, x in zip(pieces, slater))
    if (supply <= D + 1e-6).any():
        s = int(np.argmin(supply - D))
        raise InfeasibleError(f"demand {D[s]:.6g} at slot {s} exceeds the maximum supply {supply[s]:.6g}")
    meta = {"generator": "microgrid", "seed": seed, "params": prm, "demand": D.tolist(),
            "generator_costs": gen_params, "desired_loads": desired, "N": N}
    return ConstraintCoupledProblem(pieces, S, slater, meta)


def _max_supply(piece: LocalPiece) -> np.ndarray:
    """A point of ``X_i`` maximizing the total injected power."""
    from ..localsolve.simplex import lp_solve

    A, b, E, e = piece.X.polyhedron
    c = piece.G.sum(axis=0)  # minimizing sum(G x) maximizes injected power
    rep = lp_solve(c, A, b, E if E.shape[0] else None, e if E.shape[0] else None)
    if not rep.ok:
        raise InfeasibleError(f"local set of a {piece.kind} is empty")
    return rep.x


# --- serialization ------------------------------------------------------------


def problem_to_json(prob) -> dict:
    """Self-describing dictionary: generator name, seed, parameters and realized data."""
    if isinstance(prob, CostCoupledProblem):
        out = {"setup": "cost_coupled", "dim": prob.dim}
    elif isinstance(prob, CommonCostProblem):
        out = {"setup": "common_cost", "dim": prob.dim, "M": prob.M,
               "cost": {"H": prob.cost.H.tolist(), "q": prob.cost.q.tolist()},
               "constraints": [c.payload().hex() for c in prob.constraints]}
    elif isinstance(prob, ConstraintCoupledProblem):
        out = {"setup": "constraint_coupled", "S": prob.S,
               "pieces": [{"kind": p.kind, "H": p.cost.H.tolist(), "q": p.cost.q.tolist(),
                           "A": p.X.A.tolist(), "b": p.X.b.tolist(), "E": p.X.E.tolist(), "e": p.X.e.tolist(),
                           "G": p.G.tolist(), "h": p.h.tolist(), "radius": p.X.radius}
                          for p in prob.pieces],
               "slater": [np.asarray(x).tolist() for x in prob.slater]}
    else:
        raise ConfigError(f"cannot serialize {type(prob).__name__}")
    out["meta"] = _jsonable(prob.meta)
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def problem_from_json(data: dict):
    setup = data.get("setup")
    meta = data.get("meta", {})
    if setup == "common_cost":
        cons = [from_payload(bytes.fromhex(h)) for h in data["constraints"]]
        return CommonCostProblem(QuadraticCost(data["cost"]["H"], data["cost"]["q"]), cons, data["dim"],
                                 data.get("M"), meta)
    if setup == "constraint_coupled":
        pieces = []
        for p in data["pieces"]:
            X = Polyhedron(p["A"], p["b"], np.reshape(p["E"], (-1, len(p["q"]))), p["e"], bound=p["radius"])
            pieces.append(LocalPiece(QuadraticCost(p["H"], p["q"]), X, np.asarray(p["G"]).reshape(-1, len(p["q"])),
                                     np.asarray(p["h"]), p["kind"]))
        return ConstraintCoupledProblem(pieces, data["S"], [np.asarray(x) for x in data["slater"]], meta)
    if setup == "cost_coupled":
        gen = meta.get("generator")
        dat = meta.get("data", {})
        if gen == "logistic":
            return logistic_from_data(dat["points"], dat["labels"], meta["C"])
        if gen == "random_qp":
            return qp_from_data(dat["Q"], dat["r"])
        if gen == "lasso":
            return lasso_from_data(dat["D"], dat["b"], meta["rho"])
    raise ConfigError(f"cannot rebuild a problem from setup {setup!r}")


def save_problem(prob, path) -> None:
    Path(path).write_text(json.dumps(problem_to_json(prob), sort_keys=True))


def load_problem(path):
    return problem_from_json(json.loads(Path(path).read_text()))


def export_matrix_csv(matrix, path) -> None:
    np.savetxt(path, np.atleast_2d(matrix), delimiter=",", fmt="%.17g")
