"""Duality-based distributed methods and their master-worker baselines.

Cost-coupled problems are handled by dual decomposition and ADMM over the
graph (one multiplier per directed edge).  Constraint-coupled problems are
handled by the distributed dual subgradient (consensus on the multipliers
of the coupling rows) and by RSDD, which relaxes each agent's share of the
coupling and exchanges auxiliary edge variables.

Every step function takes the messages an agent has gathered and returns
its new state; the ``run_*`` functions play the rounds with Jacobi
semantics and record metrics.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import ConfigError, SolverError
from .graph import CommGraph, WeightMatrix, is_connected
from .harness.trace import MetricsTrace, attach
from .localsolve.report import SolveReport
from .localsolve.smooth import primal_dual_solve, regularized_argmin
from .primal import StepSchedule
from .problems.generators import ConstraintCoupledProblem, CostCoupledProblem, LocalPiece
from .problems.oracles import ConvexSet, Cost, Polyhedron, QuadraticCost, Reals


class LocalArgmin:
    """``argmin_{x in X} f(x) + l^T x + rho/2 sum_k ||x - z_k||^2`` with caching.

    Unconstrained quadratics are solved with a Cholesky factor kept per
    curvature shift; polyhedral problems reuse the previous working set.
    With ``min_norm`` a linear cost whose minimizer is not unique is
    resolved to the minimum-norm minimizer.
    """

    def __init__(self, f: Cost, X: ConvexSet | None = None, min_norm: bool = False):
        self.f = f
        self.X = X or Reals(f.dim)
        self.min_norm = min_norm
        self.working: tuple = ()
        self.x_last = None
        self._factors: dict = {}
        quad = f.quadratic
        self._closed = quad is not None and isinstance(self.X, Reals)
        self._quad = quad

    def solve(self, linear, anchors=(), rho: float = 0.0) -> np.ndarray:
        n = self.f.dim
        lin = np.asarray(linear, dtype=float).ravel()
        K = len(anchors)
        if self._closed:
            shift = rho * K
            if shift not in self._factors:
                try:
                    self._factors[shift] = cho_factor(self._quad[0] + shift * np.eye(n))
                except np.linalg.LinAlgError:
                    raise ConfigError("local minimization is unbounded (cost not strongly convex on R^d)")
            rhs = -(self._quad[1] + lin)
            if K:
                rhs = rhs + rho * np.sum(anchors, axis=0)
            return cho_solve(self._factors[shift], rhs)
        rep = regularized_argmin(self.f, self.X, lin, anchors, rho, warm=self.working, x0=self.x_last)
        if rep.status == "unbounded":
            raise ConfigError("local minimization is unbounded (constraint set not compact)")
        if not rep.ok:
            raise SolverError(f"local minimization ended with status {rep.status}")
        self.working = rep.info.get("working", ())
        x = rep.x
        if self.min_norm and rho == 0 and self._quad is not None and not np.any(self._quad[0]):
            x = self._least_norm(self._quad[1] + lin, x)
        self.x_last = x
        return x

    def _least_norm(self, c, x):
        A, b, E, e = self.X.polyhedron
        level = float(c @ x)
        rows = np.vstack([A, c])
        rhs = np.concatenate([b, [level + 1e-12 * (1.0 + abs(level))]])
        from .localsolve.qp import qp_solve

        res = qp_solve(np.eye(len(x)), np.zeros(len(x)), rows, rhs, E if E.shape[0] else None,
                       e if E.shape[0] else None, x0=x)
        return res.report.x if res.report.ok else x


def _undirected_neighbors(graph: CommGraph) -> list[list[int]]:
    if graph.directed:
        raise ConfigError("this method needs an undirected graph")
    if not is_connected(graph):
        raise ConfigError("this method needs a connected graph")
    return [sorted(graph.neighbors(i)) for i in range(graph.n_agents)]


# --- distributed dual decomposition ------------------------------------------


@dataclass
class DualDecAgentState:
    x: np.ndarray
    lambda_out: dict
    lambda_in_cache: dict = field(default_factory=dict)

    @classmethod
    def start(cls, dim: int, neighbors) -> "DualDecAgentState":
        zero = {j: np.zeros(dim) for j in neighbors}
        return cls(np.zeros(dim), zero, {j: np.zeros(dim) for j in neighbors})


def ddec_primal(state: DualDecAgentState, lambda_in: dict, solver: LocalArgmin) -> DualDecAgentState:
    """``x_i = argmin f_i(x) + x^T sum_j (lambda_ij - lambda_ji)``."""
    if set(lambda_in) != set(state.lambda_out):
        raise ConfigError("received multipliers do not match the neighbor set")
    lin = sum((state.lambda_out[j] - lambda_in[j] for j in state.lambda_out), np.zeros(len(state.x)))
    x = solver.solve(lin)
    return DualDecAgentState(x, state.lambda_out, dict(lambda_in))


def ddec_dual(state: DualDecAgentState, neighbor_x: dict, gamma: float) -> DualDecAgentState:
    """``lambda_ij += gamma (x_i - x_j)`` for every neighbor ``j``."""
    out = {j: lam + gamma * (state.x - neighbor_x[j]) for j, lam in state.lambda_out.items()}
    return DualDecAgentState(state.x, out, state.lambda_in_cache)


def ddec_step(state: DualDecAgentState, lambda_in: dict, solver: LocalArgmin, gamma: float, gather_x) -> DualDecAgentState:
    """Both phases of a round; ``gather_x(x_i)`` returns the neighbors' new estimates."""
    state = ddec_primal(state, lambda_in, solver)
    return ddec_dual(state, gather_x(state.x), gamma)


def _lagrangian_value(f: Cost, x, lin) -> float:
    return f.value(x) + float(np.dot(lin, x))


def run_ddec(problem: CostCoupledProblem, graph: CommGraph, schedule: StepSchedule, rounds: int,
             f_star=None, x_star=None, min_norm: bool = True, check_every: int = 1, sinks=()) -> MetricsTrace:
    """Distributed dual decomposition; the dual value is ``q`` at the multipliers used in the round."""
    nbrs = _undirected_neighbors(graph)
    N, d = problem.n_agents, problem.dim
    if graph.n_agents != N:
        raise ConfigError("graph and problem disagree on the number of agents")
    X_sets = [problem.X] * N
    solvers = [LocalArgmin(f, X, min_norm) for f, X in zip(problem.costs, X_sets)]
    states = [DualDecAgentState.start(d, nbrs[i]) for i in range(N)]
    trace = attach(MetricsTrace(["cost_error", "normalized_cost_error", "dual_cost_error", "normalized_dual_cost_error",
                          "consensus_error", "distance_to_opt"]), sinks)
    trace.meta.update({"algorithm": "ddec", "schedule": schedule.to_dict(), "f_star": f_star})
    xs = np.zeros((N, d))
    for t in range(rounds):
        gamma = schedule(t)
        lam_in = [{j: states[j].lambda_out[i] for j in nbrs[i]} for i in range(N)]
        states = [ddec_primal(states[i], lam_in[i], solvers[i]) for i in range(N)]
        xs = np.array([s.x for s in states])
        if not np.isfinite(xs).all():
            raise SolverError("estimate became non-finite", t + 1, int(np.flatnonzero(~np.isfinite(xs).all(1))[0]))
        if (t + 1) % check_every == 0 or t + 1 == rounds:
            dual_val = sum(_lagrangian_value(problem.costs[i], xs[i],
                                             sum(states[i].lambda_out[j] - lam_in[i][j] for j in nbrs[i]))
                           for i in range(N))
            trace.add(**_cost_row(t + 1, problem.sum_of_local_costs(xs), xs, f_star, x_star, dual_val))
        states = [ddec_dual(states[i], {j: xs[j] for j in nbrs[i]}, gamma) for i in range(N)]
    trace.final = {"x": xs, "lambda": [s.lambda_out for s in states]}
    return trace


def _cost_row(t, total, xs, f_star, x_star, dual_val=None) -> dict:
    row = {"t": t, "consensus_error": float(np.linalg.norm(xs - xs.mean(axis=0), axis=1).sum())}
    if f_star is not None:
        row["cost_error"] = abs(total - f_star)
        row["normalized_cost_error"] = abs(total - f_star) / abs(f_star) if f_star else math.nan
        if dual_val is not None:
            row["dual_cost_error"] = abs(dual_val - f_star)
            row["normalized_dual_cost_error"] = abs(dual_val - f_star) / abs(f_star) if f_star else math.nan
    if x_star is not None:
        row["distance_to_opt"] = float(np.linalg.norm(xs - x_star, axis=1).max())
    return row


# --- distributed ADMM --------------------------------------------------------


@dataclass
class AdmmAgentState:
    """``lam[j]`` for ``j`` in the neighbors and ``lam[i]`` for the agent itself."""

    x: np.ndarray
    z: np.ndarray
    lam: dict
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigError("ADMM penalty rho must be positive")

    @classmethod
    def start(cls, i: int, dim: int, neighbors, rho: float) -> "AdmmAgentState":
        return cls(np.zeros(dim), np.zeros(dim), {j: np.zeros(dim) for j in [*neighbors, i]}, rho)


def dadmm_x(state: AdmmAgentState, i: int, neighbor_z: dict, solver: LocalArgmin) -> AdmmAgentState:
    """``x_i = argmin f_i + (sum_j lambda_ij + lambda_ii)^T x + rho/2 sum_{j in N_i + i} ||x - z_j||^2``."""
    lin = sum(state.lam.values())
    anchors = [neighbor_z[j] for j in state.lam if j != i] + [state.z]
    x = solver.solve(lin, anchors, state.rho)
    return replace(state, x=x)


def dadmm_z(state: AdmmAgentState, i: int, neighbor_x: dict, lambda_in: dict) -> AdmmAgentState:
    """Closed-form z-update from the neighbors' new ``x`` and the multipliers ``lambda_ji``."""
    k = len(neighbor_x) + 1
    z = (state.x + sum(neighbor_x.values())) / k + (sum(lambda_in.values()) + state.lam[i]) / (state.rho * k)
    return replace(state, z=z)


def dadmm_dual(state: AdmmAgentState, i: int, neighbor_z: dict) -> AdmmAgentState:
    """``lambda_ij += rho (x_i - z_j)`` and ``lambda_ii += rho (x_i - z_i)``."""
    lam = {j: v + state.rho * (state.x - (state.z if j == i else neighbor_z[j])) for j, v in state.lam.items()}
    return replace(state, lam=lam)


def dadmm_step(state: AdmmAgentState, i: int, neighbor_z: dict, solver: LocalArgmin, gather_x, gather_lambda,
               gather_z) -> AdmmAgentState:
    """The three phases of a round; the ``gather_*`` callables deliver the neighbors' messages."""
    state = dadmm_x(state, i, neighbor_z, solver)
    state = dadmm_z(state, i, gather_x(state.x), gather_lambda())
    return dadmm_dual(state, i, gather_z(state.z))


def run_dadmm(problem: CostCoupledProblem, graph: CommGraph, rho: float, rounds: int, f_star=None, x_star=None,
              check_every: int = 1, sinks=()) -> MetricsTrace:
    if rho <= 0:
        raise ConfigError("ADMM penalty rho must be positive")
    nbrs = _undirected_neighbors(graph)
    N, d = problem.n_agents, problem.dim
    solvers = [LocalArgmin(f, problem.X) for f in problem.costs]
    states = [AdmmAgentState.start(i, d, nbrs[i], rho) for i in range(N)]
    trace = attach(MetricsTrace(["cost_error", "normalized_cost_error", "consensus_error", "distance_to_opt",
                          "max_spread", "primal_residual"]), sinks)
    trace.meta.update({"algorithm": "admm", "rho": rho, "f_star": f_star})
    for t in range(rounds):
        z_old = [s.z for s in states]
        lam_old = [s.lam for s in states]
        states = [dadmm_x(states[i], i, {j: z_old[j] for j in nbrs[i]}, solvers[i]) for i in range(N)]
        xs = np.array([s.x for s in states])
        states = [dadmm_z(states[i], i, {j: xs[j] for j in nbrs[i]}, {j: lam_old[j][i] for j in nbrs[i]})
                  for i in range(N)]
        zs = [s.z for s in states]
        states = [dadmm_dual(states[i], i, {j: zs[j] for j in nbrs[i]}) for i in range(N)]
        if not np.isfinite(xs).all():
            raise SolverError("estimate became non-finite", t + 1)
        if (t + 1) % check_every == 0 or t + 1 == rounds:
            row = _cost_row(t + 1, problem.sum_of_local_costs(xs), xs, f_star, x_star)
            diff = xs[:, None, :] - xs[None, :, :]
            row["max_spread"] = float(np.linalg.norm(diff, axis=2).max())
            row["primal_residual"] = float(np.linalg.norm(xs - np.array(zs), axis=1).max())
            trace.add(**row)
    trace.final = {"x": np.array([s.x for s in states]), "z": np.array([s.z for s in states])}
    return trace


# --- parallel (master-worker) baselines ---------------------------------------


def parallel_ddec_round(lams: np.ndarray, solvers, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Workers minimize ``f_i + lambda_i^T x``; the master projects onto ``sum lambda_i = 0``."""
    xs = np.array([s.solve(l) for s, l in zip(solvers, lams)])
    lams = lams + gamma * (xs - xs.mean(axis=0))
    return xs, lams


def parallel_admm_round(z: np.ndarray, lams: np.ndarray, solvers, rho: float):
    """x-update per worker, ``z = mean(x) + mean(lambda) / rho``, then ``lambda_i += rho (x_i - z)``.

    The z-update is the minimizer of the augmented Lagrangian in ``z``; the
    multipliers used are those of the previous round.
    """
    if rho <= 0:
        raise ConfigError("ADMM penalty rho must be positive")
    xs = np.array([s.solve(l, [z], rho) for s, l in zip(solvers, lams)])
    z = xs.mean(axis=0) + lams.mean(axis=0) / rho
    lams = lams + rho * (xs - z)
    return xs, z, lams


def run_parallel(problem: CostCoupledProblem, algorithm: str, rounds: int, schedule: StepSchedule | None = None,
                 rho: float | None = None, f_star=None, x_star=None, check_every: int = 1, sinks=()) -> MetricsTrace:
    """Master-worker dual decomposition (``parallel_ddec``) or ADMM (``parallel_admm``)."""
    N, d = problem.n_agents, problem.dim
    if algorithm == "parallel_ddec":
        if schedule is None:
            raise ConfigError("parallel dual decomposition needs a step-size schedule")
    elif algorithm == "parallel_admm":
        if rho is None or rho <= 0:
            raise ConfigError("ADMM penalty rho must be positive")
    else:
        raise ConfigError(f"unknown master-worker algorithm {algorithm!r}")
    solvers = [LocalArgmin(f, problem.X) for f in problem.costs]
    lams = np.zeros((N, d))
    z = np.zeros(d)
    trace = attach(MetricsTrace(["cost_error", "normalized_cost_error", "consensus_error", "distance_to_opt",
                                 "multiplier_sum"]), sinks)
    trace.meta.update({"algorithm": algorithm, "f_star": f_star, "rho": rho,
                       "schedule": schedule.to_dict() if schedule is not None else None})
    xs = np.zeros((N, d))
    for t in range(rounds):
        if algorithm == "parallel_ddec":
            xs, lams = parallel_ddec_round(lams, solvers, schedule(t))
        else:
            xs, z, lams = parallel_admm_round(z, lams, solvers, rho)
        if not np.isfinite(xs).all():
            raise SolverError("estimate became non-finite", t + 1)
        if (t + 1) % check_every == 0 or t + 1 == rounds:
            row = _cost_row(t + 1, problem.sum_of_local_costs(xs), xs, f_star, x_star)
            row["multiplier_sum"] = float(np.abs(lams.sum(axis=0)).max())
            trace.add(**row)
    trace.final = {"x": xs, "lambda": lams, "z": z}
    return trace


# --- constraint-coupled problems ----------------------------------------------


def running_average_update(x_hat, x_new, t: int) -> np.ndarray:
    """Mean of ``t + 1`` iterates ``x^0..x^t`` from the mean of the first ``t``."""
    if t < 1:
        raise ConfigError("running averages start at t = 1")
    x_hat = np.asarray(x_hat, dtype=float)
    return x_hat + (np.asarray(x_new, dtype=float) - x_hat) / (t + 1)


@dataclass
class DualSubgrAgentState:
    """``x_hat`` is the mean of ``x^0..x^t``; it starts at ``x^0``."""

    mu: np.ndarray
    x: np.ndarray
    x_hat: np.ndarray
    t: int = 0

    @classmethod
    def start(cls, mu0, x0) -> "DualSubgrAgentState":
        mu0 = np.array(mu0, dtype=float)
        if (mu0 < 0).any():
            raise ConfigError("initial multipliers must be nonnegative")
        x0 = np.array(x0, dtype=float)
        return cls(mu0, x0, x0.copy(), 0)


def dual_subgradient_step(state: DualSubgrAgentState, neighbor_mu, weights, piece: LocalPiece, solver: LocalArgmin,
                          gamma: float) -> DualSubgrAgentState:
    """Mix multipliers, minimize the local Lagrangian, project the ascent step onto ``mu >= 0``.

    ``neighbor_mu`` includes the agent itself, aligned with ``weights``.
    """
    v = np.asarray(weights, dtype=float) @ np.atleast_2d(neighbor_mu)
    x = solver.solve(piece.G.T @ v)
    mu = np.maximum(v + gamma * piece.g(x), 0.0)
    if (mu < 0).any():
        raise SolverError("negative multiplier after projection")
    t = state.t + 1
    return DualSubgrAgentState(mu, x, running_average_update(state.x_hat, x, t), t)


@dataclass
class RsddAgentState:
    x: np.ndarray
    rho: float
    mu: np.ndarray
    lambda_out: dict
    M: float
    working: tuple = ()


def rsdd_local_problem(piece: LocalPiece, allocation, M: float, warm: tuple = (), x0=None) -> SolveReport:
    """``min f_i + M rho`` s.t. ``g_i(x) + allocation <= rho 1``, ``rho >= 0``, ``x in X_i``.

    Returns a report on the stacked variable ``(x, rho)`` whose multipliers
    are those of the ``S`` relaxed coupling rows.
    """
    n, S = piece.dim, len(piece.h)
    H = np.zeros((n + 1, n + 1))
    H[:n, :n] = piece.cost.H
    cost = QuadraticCost(H, np.concatenate([piece.cost.q, [M]]), piece.cost.c0)
    A, b, E, e = piece.X.polyhedron
    XA = np.vstack([np.hstack([A, np.zeros((len(b), 1))]), np.eye(1, n + 1, n) * -1.0])
    X = Polyhedron(XA, np.concatenate([b, [0.0]]), np.hstack([E, np.zeros((len(e), 1))]), e)
    G = np.hstack([piece.G, -np.ones((S, 1))])
    return primal_dual_solve(cost, X, G, piece.h + allocation, warm=warm, x0=x0)


def rsdd_step(state: RsddAgentState, lambda_in: dict, piece: LocalPiece) -> RsddAgentState:
    """Local relaxed problem with the allocation ``sum_j (lambda_ij - lambda_ji)``."""
    alloc = sum((state.lambda_out[j] - lambda_in[j] for j in state.lambda_out), np.zeros(len(piece.h)))
    x0 = None
    if state.x is not None:
        # raising rho keeps the previous point feasible for the warm start
        rho0 = max(float((piece.g(state.x) + alloc).max(initial=0.0)), state.rho, 0.0)
        x0 = np.concatenate([state.x, [rho0]])
    rep = rsdd_local_problem(piece, alloc, state.M, state.working, x0)
    if not rep.ok:
        raise SolverError(f"relaxed local problem returned {rep.status}; it is always feasible")
    return RsddAgentState(rep.x[:-1], max(float(rep.x[-1]), 0.0), np.maximum(rep.multipliers, 0.0),
                          state.lambda_out, state.M, rep.info.get("working", ()))


def rsdd_dual(state: RsddAgentState, neighbor_mu: dict, gamma: float) -> RsddAgentState:
    """``lambda_ij -= gamma (mu_i - mu_j)``."""
    out = {j: lam - gamma * (state.mu - neighbor_mu[j]) for j, lam in state.lambda_out.items()}
    return replace(state, lambda_out=out)


def _coupled_row(problem, t, xs, f_star, extra_cost=0.0):
    total = problem.total_cost(xs) + extra_cost
    coupling = problem.coupling(xs)
    row = {"t": t, "max_coupling_value": float(coupling.max()),
           "max_coupling_violation": max(float(coupling.max()), 0.0)}
    if f_star is not None:
        row["cost_error"] = abs(total - f_star)
        row["normalized_cost_error"] = abs(total - f_star) / abs(f_star) if f_star else math.nan
    return row


def default_penalty(mu_star, factor: float = 10.0) -> float:
    return factor * float(np.abs(mu_star).sum())


def run_rsdd(problem: ConstraintCoupledProblem, graph: CommGraph, schedule: StepSchedule, rounds: int,
             M: float | None = None, f_star=None, mu_star=None, check_every: int = 1, sinks=()) -> MetricsTrace:
    """RSDD from zero auxiliary variables.

    ``M`` defaults to ``10 * ||mu*||_1`` when ``mu_star`` is given.  The
    trace records the penalized cost error, the coupling violation, the sum
    of relaxations, the antisymmetry residual of the edge variables and,
    per agent, how far the local allocation is from the other agents'
    actual coupling contribution.
    """
    nbrs = _undirected_neighbors(graph)
    N, S = problem.n_agents, problem.S
    if M is None:
        if mu_star is None:
            raise ConfigError("RSDD needs M or an oracle multiplier to derive it")
        M = default_penalty(mu_star)
    if mu_star is None:
        warnings.warn("RSDD penalty M given without an oracle multiplier; it may be too small", stacklevel=2)
    elif M <= float(np.abs(mu_star).sum()):
        raise ConfigError(f"penalty M = {M} must exceed ||mu*||_1 = {np.abs(mu_star).sum()}")
    if not schedule.diminishing:
        raise ConfigError("RSDD needs a diminishing step-size schedule")
    states = [RsddAgentState(np.asarray(problem.slater[i], dtype=float), 0.0, np.zeros(S),
                             {j: np.zeros(S) for j in nbrs[i]}, M) for i in range(N)]
    cols = ["cost_error", "normalized_cost_error", "max_coupling_value", "max_coupling_violation", "sum_rho",
            "max_mu_l1", "antisymmetry", "rsdd_tracking"] + [f"rsdd_tracking_{i}" for i in range(N)]
    trace = attach(MetricsTrace(cols), sinks)
    trace.meta.update({"algorithm": "rsdd", "schedule": schedule.to_dict(), "M": M, "f_star": f_star})
    for t in range(rounds):
        gamma = schedule(t)
        lam_in = [{j: states[j].lambda_out[i] for j in nbrs[i]} for i in range(N)]
        try:
            states = [rsdd_step(states[i], lam_in[i], problem.pieces[i]) for i in range(N)]
        except SolverError as err:
            raise SolverError(str(err), t + 1) from err
        xs = [s.x for s in states]
        if (t + 1) % check_every == 0 or t + 1 == rounds:
            rho_sum = sum(s.rho for s in states)
            row = _coupled_row(problem, t + 1, xs, f_star, M * rho_sum)
            row["sum_rho"] = rho_sum
            row["max_mu_l1"] = max(float(s.mu.sum()) for s in states)
            allocs = [sum((states[i].lambda_out[j] - lam_in[i][j] for j in nbrs[i]), np.zeros(S)) for i in range(N)]
            row["antisymmetry"] = float(np.abs(sum(allocs)).max())
            gs = [p.g(x) for p, x in zip(problem.pieces, xs)]
            total_g = sum(gs)
            track = [float((total_g - gs[i] - allocs[i]).max()) for i in range(N)]
            for i in range(N):
                row[f"rsdd_tracking_{i}"] = track[i]
            row["rsdd_tracking"] = max(abs(v) for v in track)
            trace.add(**row)
        mus = [s.mu for s in states]
        states = [rsdd_dual(states[i], {j: mus[j] for j in nbrs[i]}, gamma) for i in range(N)]
    trace.final = {"x": [s.x for s in states], "rho": [s.rho for s in states], "mu": [s.mu for s in states],
                   "lambda": [s.lambda_out for s in states]}
    return trace


def run_dual_subgradient(problem: ConstraintCoupledProblem, weights: WeightMatrix, schedule: StepSchedule,
                         rounds: int, f_star=None, mu0=None, check_every: int = 1, sinks=()) -> MetricsTrace:
    """Distributed dual subgradient with running averages of the local minimizers."""
    if weights.stochasticity != "doubly":
        raise ConfigError("the dual subgradient method needs doubly stochastic weights")
    N, S = problem.n_agents, problem.S
    W = weights.entries
    nbrs = [np.flatnonzero(W[i]) for i in range(N)]
    solvers = [LocalArgmin(p.cost, p.X) for p in problem.pieces]
    mu = np.zeros((N, S)) if mu0 is None else np.array(mu0, dtype=float).reshape(N, S)
    states = [DualSubgrAgentState.start(mu[i], problem.slater[i]) for i in range(N)]
    trace = attach(MetricsTrace(["cost_error", "normalized_cost_error", "max_coupling_value", "max_coupling_violation",
                          "iterate_max_coupling_value", "mu_disagreement", "min_mu"]), sinks)
    trace.meta.update({"algorithm": "dual_subgradient", "schedule": schedule.to_dict(), "f_star": f_star})
    for t in range(rounds):
        gamma = schedule(t)
        mus = np.array([s.mu for s in states])
        states = [dual_subgradient_step(states[i], mus[nbrs[i]], W[i, nbrs[i]], problem.pieces[i], solvers[i], gamma)
                  for i in range(N)]
        if (t + 1) % check_every == 0 or t + 1 == rounds:
            x_hat = [s.x_hat for s in states]
            row = _coupled_row(problem, t + 1, x_hat, f_star)
            row["iterate_max_coupling_value"] = float(problem.coupling([s.x for s in states]).max())
            mus = np.array([s.mu for s in states])
            row["mu_disagreement"] = float(np.linalg.norm(mus - mus.mean(axis=0), axis=1).max())
            row["min_mu"] = float(mus.min())
            trace.add(**row)
    trace.final = {"x": [s.x for s in states], "x_hat": [s.x_hat for s in states],
                   "mu": np.array([s.mu for s in states])}
    return trace
