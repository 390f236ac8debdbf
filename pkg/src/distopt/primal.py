"""Consensus-based primal methods: distributed subgradient and gradient tracking.

Agents hold estimates of the common decision vector.  Each round they mix
their neighbors' estimates with a doubly stochastic weight matrix and take
a local (sub)gradient step.  Rounds follow Jacobi semantics: every agent
reads the round-``t`` values and all updates land together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SolverError
from .graph import WeightMatrix, contraction_factor
from .harness.trace import MetricsTrace, attach
from .problems.generators import CostCoupledProblem
from .problems.oracles import Cost


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes ``gamma^t``.

    ``constant``: ``gamma``; ``power``: ``c * (1 / max(t, 1)) ** eps``;
    ``harmonic``: ``c / (t + 1)``.
    """

    kind: str = "constant"
    gamma: float = 1e-3
    c: float = 1.0
    eps: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant", "power", "harmonic"):
            raise ConfigError(f"unknown step schedule {self.kind!r}")
        if self.kind == "constant" and self.gamma < 0:
            raise ConfigError("step size must be nonnegative")
        if self.kind != "constant" and (self.c < 0 or self.eps < 0):
            raise ConfigError("schedule parameters must be nonnegative")

    @classmethod
    def constant(cls, gamma: float) -> "StepSchedule":
        return cls("constant", gamma=gamma)

    @classmethod
    def power(cls, c: float, eps: float) -> "StepSchedule":
        return cls("power", c=c, eps=eps)

    @classmethod
    def harmonic(cls, c: float = 1.0) -> "StepSchedule":
        return cls("harmonic", c=c)

    def __call__(self, t: int) -> float:
        if self.kind == "constant":
            return self.gamma
        if self.kind == "power":
            return self.c * (1.0 / max(t, 1)) ** self.eps
        return self.c / (t + 1)

    @property
    def diminishing(self) -> bool:
        """Whether the steps are not summable but square summable."""
        if self.kind == "harmonic":
            return self.c > 0
        return self.kind == "power" and self.c > 0 and 0.5 < self.eps <= 1.0

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": self.gamma, "c": self.c, "eps": self.eps}


@dataclass(frozen=True)
class SubgradientAgentState:
    x: np.ndarray


@dataclass(frozen=True)
class TrackingAgentState:
    x: np.ndarray
    y: np.ndarray
    last_grad: np.ndarray

    @classmethod
    def start(cls, f: Cost, x0) -> "TrackingAgentState":
        x = np.array(x0, dtype=float)
        g = f.gradient(x)
        return cls(x, g.copy(), g)


def _mix(values, weights) -> np.ndarray:
    values = np.atleast_2d(np.asarray(values, dtype=float))
    weights = np.asarray(weights, dtype=float).ravel()
    if len(weights) != len(values):
        raise ConfigError(f"{len(weights)} weights for {len(values)} neighbor values")
    return weights @ values


def dsg_step(neighbor_x, weights, f: Cost, gamma: float, project=None) -> tuple[SubgradientAgentState, np.ndarray]:
    """Mix the neighbors' estimates into ``v``, then step along ``-subgradient(v)``.

    ``neighbor_x`` includes the agent itself, aligned with ``weights``.
    ``project`` maps the step onto a constraint set when given.
    Returns the new state and ``v``.
    """
    if gamma < 0:
        raise ConfigError("step size must be nonnegative")
    v = _mix(neighbor_x, weights)
    if v.shape[0] != f.dim:
        raise ConfigError(f"estimate has dimension {v.shape[0]}, cost expects {f.dim}")
    x = v if gamma == 0 else v - gamma * f.subgradient(v)
    if project is not None:
        x = project(x)
    return SubgradientAgentState(x), v


def gt_step(state: TrackingAgentState, neighbor_x, neighbor_y, weights, f: Cost, gamma: float) -> TrackingAgentState:
    """``x+ = sum a_ij x_j - gamma y_i``, then ``y+ = sum a_ij y_j + grad(x+) - grad(x)``."""
    if not f.smooth:
        raise ConfigError("gradient tracking needs differentiable local costs")
    x_new = _mix(neighbor_x, weights) - gamma * state.y
    g_new = f.gradient(x_new)
    y_new = _mix(neighbor_y, weights) + (g_new - state.last_grad)
    return TrackingAgentState(x_new, y_new, g_new)


def initial_estimates(n_agents: int, dim: int, policy: str = "zeros", seed: int = 0, point=None) -> np.ndarray:
    """Starting estimates: ``zeros``, ``gaussian`` (seeded) or ``point`` (every agent at ``point``)."""
    if policy == "zeros":
        return np.zeros((n_agents, dim))
    if policy == "gaussian":
        return np.random.default_rng(seed).standard_normal((n_agents, dim))
    if policy == "point":
        if point is None:
            raise ConfigError("policy 'point' needs a point")
        return np.tile(np.asarray(point, dtype=float).ravel(), (n_agents, 1))
    raise ConfigError(f"unknown initialization policy {policy!r}")


def _scale(vectors) -> float:
    return float(np.mean(np.linalg.norm(vectors, axis=1)))


def _check_finite(X, t, name):
    bad = ~np.isfinite(X).all(axis=1)
    if bad.any():
        raise SolverError(f"{name} became non-finite", round_index=t, agent=int(np.flatnonzero(bad)[0]))


PRIMAL_COLUMNS = [
    "cost_error",
    "normalized_cost_error",
    "consensus_error",
    "tracking_error",
    "distance_to_opt",
    "tracker_conservation",
    "average_dynamics",
    "contraction_gap",
]


def run_primal(
    problem: CostCoupledProblem,
    weights: WeightMatrix,
    algorithm: str,
    schedule: StepSchedule,
    rounds: int,
    x0=None,
    f_star: float | None = None,
    x_star=None,
    check_every: int = 1,
    on_row=None,
    sinks=(),
) -> MetricsTrace:
    """Simulate ``rounds`` rounds of ``dsg`` or ``gt``.

    Besides the error metrics the trace records, each round, the residuals
    of the identities the methods rely on: the tracker mean against the
    gradient mean (scaled by the mean gradient norm), the average dynamics
    and, for ``gt``, the excess over the consensus contraction bound
    (positive means violated).
    """
    if algorithm not in ("dsg", "gt"):
        raise ConfigError(f"unknown primal algorithm {algorithm!r}")
    if weights.stochasticity != "doubly":
        raise ConfigError("primal methods need doubly stochastic weights")
    N, d = problem.n_agents, problem.dim
    if weights.n_agents != N:
        raise ConfigError(f"weights are for {weights.n_agents} agents, problem has {N}")
    if algorithm == "gt" and schedule.kind != "constant":
        raise ConfigError("gradient tracking uses a constant step size")
    W = weights.entries
    sigma = contraction_factor(weights) if algorithm == "gt" else math.nan
    costs = problem.costs
    X = initial_estimates(N, d) if x0 is None else np.array(x0, dtype=float).reshape(N, d)
    trace = attach(MetricsTrace(PRIMAL_COLUMNS), sinks)
    trace.meta.update({"algorithm": algorithm, "schedule": schedule.to_dict(), "rounds": rounds,
                       "f_star": f_star, "sigma": sigma})
    if algorithm == "gt":
        G = np.array([f.gradient(x) for f, x in zip(costs, X)])
        Y = G.copy()
    else:
        G = Y = None

    def record(t, X, Y, G, conservation, avg_dyn, gap):
        xbar = X.mean(axis=0)
        total = problem.sum_of_local_costs(X)
        row = {
            "t": t,
            "consensus_error": float(np.linalg.norm(X - xbar, axis=1).sum()),
            "tracker_conservation": conservation,
            "average_dynamics": avg_dyn,
            "contraction_gap": gap,
        }
        if f_star is not None:
            row["cost_error"] = abs(total - f_star)
            row["normalized_cost_error"] = abs(total - f_star) / abs(f_star) if f_star else math.nan
        if x_star is not None:
            row["distance_to_opt"] = float(np.linalg.norm(X - x_star, axis=1).max())
        if Y is not None:
            row["tracking_error"] = float(np.linalg.norm(Y - Y.mean(axis=0), axis=1).sum())
        trace.add(**row)
        if on_row is not None:
            on_row(row)

    def conservation_residual(Y, G):
        return float(np.linalg.norm(Y.mean(axis=0) - G.mean(axis=0)) / max(_scale(G), 1e-300))

    record(0, X, Y, G, conservation_residual(Y, G) if Y is not None else math.nan, math.nan, math.nan)
    for t in range(rounds):
        gamma = schedule(t)
        check = (t + 1) % check_every == 0 or t + 1 == rounds
        xbar = X.mean(axis=0)
        if algorithm == "dsg":
            V = W @ X
            if gamma == 0:
                X_new = V
                S = np.zeros_like(V)
            else:
                S = np.array([f.subgradient(v) for f, v in zip(costs, V)])
                X_new = V - gamma * S
            _check_finite(X_new, t + 1, "estimate")
            avg = float(np.abs(X_new.mean(axis=0) - (xbar - gamma * S.mean(axis=0))).max()) if check else math.nan
            X = X_new
            record(t + 1, X, None, None, math.nan, avg, math.nan) if check else None
        else:
            ybar = Y.mean(axis=0)
            X_new = W @ X - gamma * Y
            _check_finite(X_new, t + 1, "estimate")
            G_new = np.array([f.gradient(x) for f, x in zip(costs, X_new)])
            Y_new = W @ Y + (G_new - G)
            _check_finite(Y_new, t + 1, "tracker")
            if check:
                avg = float(np.abs(X_new.mean(axis=0) - (xbar - gamma * ybar)).max())
                lhs = np.linalg.norm(X_new - X_new.mean(axis=0))
                rhs = sigma * np.linalg.norm(X - xbar) + gamma * np.linalg.norm(Y - ybar)
                gap = float(lhs - rhs)
            X, Y, G = X_new, Y_new, G_new
            if check:
                record(t + 1, X, Y, G, conservation_residual(Y, G), avg, gap)
    trace.final = {"x": X.copy()}
    if Y is not None:
        trace.final["y"] = Y.copy()
    return trace
