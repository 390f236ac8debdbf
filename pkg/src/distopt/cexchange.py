"""Constraint exchange: Constraints Consensus for LPs and convex programs.

Each agent keeps the lexicographically minimal solution of the problem made
of its own constraint, its current basis, its neighbors' bases and an
artificial bounding box, and forwards a new basis (a minimal subset of
those constraints with the same solution).  Bases travel as immutable
descriptors, so every message has a canonical byte form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, InfeasibleError, SolverError
from .graph import CommGraph, GraphSchedule, check_connectivity, diameter
from .harness.trace import MetricsTrace, attach
from .localsolve.lexconvex import lex_convex_solve, minimal_support
from .localsolve.simplex import lex_lp_solve
from .problems.descriptors import BOX_ORIGIN, Descriptor, Halfspace, box_descriptor
from .problems.generators import CommonCostProblem
from .problems.oracles import QuadraticCost

SAME_TOL = 1e-12


def _order(desc: Descriptor):
    # agents by index, box rows last; payload breaks ties deterministically
    return (desc.origin if desc.origin != BOX_ORIGIN else math.inf, desc.payload())


def box_halfspaces(n: int, M: float) -> list[Halfspace]:
    """The box ``-M <= x <= M`` as ``2n`` halfspaces owned by the box."""
    rows = []
    for sign in (1.0, -1.0):
        for k in range(n):
            a = np.zeros(n)
            a[k] = sign
            rows.append(Halfspace(tuple(a), float(M), BOX_ORIGIN))
    return rows


@dataclass(frozen=True)
class ExchBasis:
    """A basis as a tuple of constraint descriptors, sorted by origin."""

    descriptors: tuple
    kind: str = "lp"

    def __post_init__(self):
        if self.kind not in ("lp", "convex"):
            raise ConfigError(f"unknown basis kind {self.kind!r}")
        object.__setattr__(self, "descriptors", tuple(sorted(self.descriptors, key=_order)))

    def __len__(self) -> int:
        return len(self.descriptors)

    @property
    def origins(self) -> tuple:
        return tuple(d.origin for d in self.descriptors)

    @property
    def has_box_rows(self) -> bool:
        return BOX_ORIGIN in self.origins

    def payloads(self) -> tuple[bytes, ...]:
        return tuple(d.payload() for d in self.descriptors)


@dataclass(frozen=True)
class CCAgentState:
    x: np.ndarray | None
    basis: ExchBasis
    initial_constraint: Descriptor
    M: float
    value: float = math.nan
    infeasible: bool = False


@dataclass(frozen=True)
class HaltState:
    threshold: int
    stable_rounds: int = 0
    halted: bool = False

    def __post_init__(self):
        if self.threshold < 1:
            raise ConfigError("halting threshold must be positive")


def halting_threshold(schedule, T: int | None = None) -> int:
    """``2 diam + 1`` on a fixed graph, ``2 N T + 1`` on a T-strongly connected schedule."""
    if isinstance(schedule, CommGraph):
        schedule = GraphSchedule.fixed(schedule)
    if schedule.is_fixed():
        return 2 * diameter(schedule.at(0)) + 1
    if T is None:
        raise ConfigError("time-varying schedules need the joint-connectivity window T")
    return 2 * schedule.at(0).n_agents * T + 1


def halting_check(state: HaltState, changed: bool) -> tuple[HaltState, str]:
    """Count rounds without change; halt once the count reaches the threshold."""
    if state.halted:
        return state, "halt"
    stable = 0 if changed else state.stable_rounds + 1
    halted = stable >= state.threshold
    return HaltState(state.threshold, stable, halted), "halt" if halted else "continue"


def _pool(own: Descriptor, bases) -> list[Descriptor]:
    seen = {}
    for d in [own, *(d for b in bases for d in b.descriptors)]:
        seen.setdefault(d.payload(), d)
    return sorted(seen.values(), key=_order)


def _lp_solve_pool(c, pool: list[Descriptor], n: int):
    A = np.vstack([d.linear_rows(n)[0] for d in pool])
    b = np.concatenate([d.linear_rows(n)[1] for d in pool])
    return lex_lp_solve(c, A, b, tags=pool)


def cc_lp_init(own: Halfspace, c, M: float) -> CCAgentState:
    """Lex-optimal solution of the agent's own row inside the box."""
    return cc_lp_step(CCAgentState(None, ExchBasis(()), own, M), [], c)


def cc_lp_step(state: CCAgentState, neighbor_bases, c) -> CCAgentState:
    """Lex-solve own row, own basis, neighbor bases and the box; keep a ``d``-row basis."""
    if state.M <= 0:
        raise ConfigError("bounding box radius M must be positive")
    if state.infeasible:
        return state
    c = np.asarray(c, dtype=float).ravel()
    n = len(c)
    pool = _pool(state.initial_constraint, [state.basis, *neighbor_bases, ExchBasis(tuple(box_halfspaces(n, state.M)))])
    rep, basis = _lp_solve_pool(c, pool, n)
    if rep.status == "infeasible":
        return replace(state, x=None, infeasible=True)
    if not rep.ok:
        raise SolverError(f"local LP ended with status {rep.status}")
    return replace(state, x=rep.x, basis=ExchBasis(basis.tags, "lp"), value=float(c @ rep.x))


def cc_convex_init(own: Descriptor, cost: QuadraticCost, n: int, M: float) -> CCAgentState:
    return cc_convex_step(CCAgentState(None, ExchBasis((), "convex"), own, M), [], cost, n)


def cc_convex_step(state: CCAgentState, neighbor_bases, cost: QuadraticCost, n: int) -> CCAgentState:
    """Lex-solve the pooled descriptors, then reduce them to a minimal basis.

    Descriptors are offered for removal from the largest origin down, so
    among equivalent bases the one with the smallest origins is kept.
    """
    if state.infeasible:
        return state
    pool = _pool(state.initial_constraint, [state.basis, *neighbor_bases, ExchBasis((box_descriptor(n, state.M),), "convex")])
    pool = pool[::-1]
    rep = lex_convex_solve(cost, pool, n, None)
    if rep.status == "infeasible":
        return replace(state, x=None, infeasible=True)
    if not rep.ok:
        raise SolverError(f"local convex program ended with status {rep.status}")
    keep, _ = minimal_support(cost, pool, n, None, reference=rep)
    if len(keep) > n + 1:
        raise SolverError(f"basis with {len(keep)} descriptors exceeds the combinatorial bound {n + 1}")
    return replace(state, x=rep.x, basis=ExchBasis(tuple(keep), "convex"), value=float(cost.value(rep.x)))


def _changed(x_old, x_new) -> bool:
    if x_old is None or x_new is None:
        return (x_old is None) != (x_new is None)
    return bool(np.abs(x_new - x_old).max(initial=0.0) > SAME_TOL * (1.0 + np.abs(x_old).max(initial=0.0)))


def _lex_less(a, b, tol) -> bool:
    """Whether ``a`` is lexicographically smaller than ``b`` beyond ``tol``."""
    for u, v in zip(a, b):
        if u < v - tol:
            return True
        if u > v + tol:
            return False
    return False


@dataclass
class ExchangeResult:
    trace: MetricsTrace
    states: list
    halts: list
    halt_rounds: list
    verdict: str
    history: list = field(default_factory=list)  # per round, per agent cost


def run_constraints_consensus(problem: CommonCostProblem, schedule, max_rounds: int = 1000, M: float | None = None,
                              T: int | None = None, f_star: float | None = None, x_star=None,
                              keep_history: bool = False, sinks=()) -> ExchangeResult:
    """Simulate Constraints Consensus until every agent halts (or ``max_rounds``).

    Linear costs over halfspace descriptors use the LP variant; anything
    else uses the convex variant.  The trace records per round the range of
    local costs, the largest constraint value seen by any agent, the spread
    of the solutions, the number of halted agents and the largest basis.
    Violations of the monotone-cost and lexicographic-monotone properties
    are counted in ``trace.meta``.
    """
    if isinstance(schedule, CommGraph):
        schedule = GraphSchedule.fixed(schedule)
    N, n = problem.n_agents, problem.dim
    if schedule.at(0).n_agents != N:
        raise ConfigError("graph and problem disagree on the number of agents")
    M = M if M is not None else problem.M
    if M is None or M <= 0:
        raise ConfigError("Constraints Consensus needs a positive bounding box radius M")
    kind = "strong" if schedule.is_fixed() else ("T_strong" if T is not None else "jointly_strong")
    if not check_connectivity(schedule, kind, T):
        raise ConfigError("communication schedule is not (jointly) strongly connected")
    lp_mode = problem.linear and all(isinstance(d, Halfspace) for d in problem.constraints)
    cost = problem.cost
    if lp_mode:
        c = cost.q
        states = [cc_lp_init(d, c, M) for d in problem.constraints]
    else:
        states = [cc_convex_init(d, cost, n, M) for d in problem.constraints]
    threshold = halting_threshold(schedule, T)
    halts = [HaltState(threshold) for _ in range(N)]
    halt_rounds = [None] * N
    trace = attach(MetricsTrace(["cost_min", "cost_max", "cost_error", "max_constraint_value", "spread",
                                 "distance_to_opt", "n_halted", "max_basis_size"]), sinks)
    trace.meta.update({"algorithm": "constraints_consensus", "mode": "lp" if lp_mode else "convex", "M": M,
                       "threshold": threshold, "f_star": f_star})
    monotone_violations = 0
    lex_violations = 0
    history = []
    verdict = "max_rounds"

    def record(t):
        xs = [s.x for s in states if s.x is not None]
        vals = [s.value for s in states if s.x is not None]
        row = {"t": t, "n_halted": sum(h.halted for h in halts), "max_basis_size": max(len(s.basis) for s in states)}
        if xs:
            row["cost_min"], row["cost_max"] = min(vals), max(vals)
            row["max_constraint_value"] = max(problem.max_violation(x) for x in xs)
            X = np.array(xs)
            row["spread"] = float(np.abs(X - X[0]).max())
            if f_star is not None:
                row["cost_error"] = max(abs(v - f_star) for v in vals)
            if x_star is not None:
                row["distance_to_opt"] = float(np.abs(X - x_star).max())
        trace.add(**row)
        if keep_history:
            history.append(vals)

    record(0)
    for t in range(max_rounds):
        if all(s.infeasible for s in states):
            verdict = "infeasible"
            break
        if all(h.halted for h in halts):
            verdict = "optimal"
            break
        g = schedule.at(t)
        inbox = [[states[j].basis for j in g.in_neighbors(i)] for i in range(N)]
        flagged = [any(states[j].infeasible for j in g.in_neighbors(i)) for i in range(N)]
        new = []
        for i, s in enumerate(states):
            if halts[i].halted:
                new.append(s)
                continue
            if flagged[i]:
                new.append(replace(s, x=None, infeasible=True))
                continue
            if lp_mode:
                ns = cc_lp_step(s, inbox[i], c)
            else:
                ns = cc_convex_step(s, inbox[i], cost, n)
            if ns.x is not None and s.x is not None:
                scale = SAME_TOL * (1.0 + abs(s.value))
                if ns.value < s.value - scale:
                    monotone_violations += 1
                if abs(ns.value - s.value) <= scale and _lex_less(ns.x, s.x, SAME_TOL * (1.0 + np.abs(s.x).max())):
                    lex_violations += 1
            new.append(ns)
        for i in range(N):
            if halts[i].halted:
                continue
            halts[i], decision = halting_check(halts[i], _changed(states[i].x, new[i].x))
            if decision == "halt":
                halt_rounds[i] = t + 1
        states = new
        record(t + 1)
    else:
        if all(h.halted for h in halts):
            verdict = "optimal"
        elif all(s.infeasible for s in states):
            verdict = "infeasible"
    trace.meta.update({"monotone_violations": monotone_violations, "lex_violations": lex_violations,
                       "verdict": verdict})
    if verdict == "optimal" and any(s.basis.has_box_rows for s in states):
        warnings.warn("a final basis contains bounding-box rows; M may be too small", stacklevel=2)
    trace.final = {"x": [s.x for s in states], "halt_rounds": halt_rounds,
                   "bases": [list(s.basis.payloads()) for s in states]}
    return ExchangeResult(trace, states, halts, halt_rounds, verdict, history)


def pooled_lexmin(problem: CommonCostProblem, M: float | None = None):
    """Centralized lex-optimal solution over all agents' constraints and the box."""
    M = M if M is not None else problem.M
    n = problem.dim
    if problem.linear and all(isinstance(d, Halfspace) for d in problem.constraints):
        pool = sorted(list(problem.constraints) + box_halfspaces(n, M), key=_order)
        rep, _ = _lp_solve_pool(problem.cost.q, pool, n)
    else:
        rep = lex_convex_solve(problem.cost, list(problem.constraints) + [box_descriptor(n, M)], n, None)
    if rep.status == "infeasible":
        raise InfeasibleError("the constraint sets have an empty intersection")
    return rep
