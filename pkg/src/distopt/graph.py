"""Communication graphs, graph schedules and consensus weight matrices.

Agents are indexed ``0..n-1`` in memory.  The text serialization uses
1-based indices, one ``"i j"`` pair per line.  An edge ``(i, j)`` means
agent ``i`` can send to agent ``j``, so ``i`` is an in-neighbor of ``j``.
"""

from __future__ import annotations

import io
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, NoContractionError

STOCHASTICITY = ("row", "column", "doubly")
CONNECTIVITY_KINDS = ("strong", "connected", "jointly_strong", "T_strong")
MAX_RESAMPLES = 1000


@dataclass(frozen=True)
class CommGraph:
    """Static communication graph over agents ``0..n_agents-1``."""

    n_agents: int
    edges: frozenset[tuple[int, int]]
    directed: bool = False

    def __post_init__(self):
        if self.n_agents < 1:
            raise ConfigError("a graph needs at least one agent")
        edges = frozenset((int(i), int(j)) for i, j in self.edges)
        for i, j in edges:
            if i == j:
                raise ConfigError(f"self-loop on agent {i} is not stored in a graph")
            if not (0 <= i < self.n_agents and 0 <= j < self.n_agents):
                raise ConfigError(f"edge ({i}, {j}) out of range for {self.n_agents} agents")
        if not self.directed:
            edges = edges | frozenset((j, i) for i, j in edges)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def from_adjacency(cls, adj: np.ndarray, directed: bool = True) -> "CommGraph":
        adj = np.asarray(adj)
        n = adj.shape[0]
        edges = {(i, j) for i in range(n) for j in range(n) if i != j and adj[i, j]}
        return cls(n, frozenset(edges), directed)

    def adjacency(self) -> np.ndarray:
        """Boolean matrix with ``adj[i, j]`` true when ``i`` sends to ``j``."""
        adj = np.zeros((self.n_agents, self.n_agents), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = True
        return adj

    def in_neighbors(self, i: int) -> list[int]:
        return sorted(j for j, k in self.edges if k == i)

    def out_neighbors(self, i: int) -> list[int]:
        return sorted(k for j, k in self.edges if j == i)

    def neighbors(self, i: int) -> list[int]:
        """Neighbors of ``i`` in an undirected graph (in-neighbors otherwise)."""
        return self.in_neighbors(i)

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=0)

    def out_degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def union(self, other: "CommGraph") -> "CommGraph":
        if other.n_agents != self.n_agents:
            raise ConfigError("cannot merge graphs over different agent sets")
        return CommGraph(self.n_agents, self.edges | other.edges, self.directed or other.directed)

    def to_edge_list(self) -> str:
        pairs = sorted(self.edges)
        if not self.directed:
            pairs = [(i, j) for i, j in pairs if i < j]
        return "".join(f"{i + 1} {j + 1}\n" for i, j in pairs)

    @classmethod
    def from_edge_list(cls, text: str, n_agents: int | None = None, directed: bool = False) -> "CommGraph":
        pairs = []
        for line_no, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ConfigError(f"edge list line {line_no}: expected 'i j', got {line!r}")
            i, j = (int(p) for p in parts)
            if i < 1 or j < 1:
                raise ConfigError(f"edge list line {line_no}: indices are 1-based")
            pairs.append((i - 1, j - 1))
        n = n_agents if n_agents is not None else max((max(p) for p in pairs), default=-1) + 1
        return cls(n, frozenset(pairs), directed)


def complete_graph(n: int) -> CommGraph:
    return CommGraph(n, frozenset((i, j) for i in range(n) for j in range(n) if i != j))


def path_graph(n: int) -> CommGraph:
    return CommGraph(n, frozenset((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int, directed: bool = True) -> CommGraph:
    return CommGraph(n, frozenset((i, (i + 1) % n) for i in range(n) if n > 1), directed)


def reachable_from(adj: np.ndarray, source: int) -> np.ndarray:
    """Nodes reachable from ``source`` following directed edges (BFS)."""
    n = adj.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[source] = True
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in np.flatnonzero(adj[u]):
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return seen


def is_strongly_connected(g: CommGraph) -> bool:
    adj = g.adjacency()
    return bool(reachable_from(adj, 0).all() and reachable_from(adj.T, 0).all())


def is_connected(g: CommGraph) -> bool:
    """Weak connectivity (connectivity for undirected graphs)."""
    adj = g.adjacency()
    return bool(reachable_from(adj | adj.T, 0).all())


def diameter(g: CommGraph) -> int:
    """Longest shortest directed path; raises if the graph is not strongly connected."""
    adj = g.adjacency()
    worst = 0
    for s in range(g.n_agents):
        dist = np.full(g.n_agents, -1)
        dist[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(adj[u]):
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        if (dist < 0).any():
            raise ConfigError("diameter is undefined: graph is not strongly connected")
        worst = max(worst, int(dist.max()))
    return worst


def erdos_renyi_graph(
    n: int,
    p: float,
    seed: int,
    directed: bool = False,
    require: str | None = "auto",
) -> CommGraph:
    """Random graph with each pair (ordered if directed) present with probability ``p``.

    With ``require="auto"`` the graph is re-sampled until it is connected
    (undirected) or strongly connected (directed), unless ``p == 0``.  Pass
    ``require=None`` to take the first sample.
    """
    if n < 2:
        raise ConfigError("an Erdos-Renyi graph needs n >= 2")
    if not 0.0 <= p <= 1.0:
        raise ConfigError(f"edge probability {p} outside [0, 1]")
    if require == "auto":
        require = None if p == 0 else ("strong" if directed else "connected")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_RESAMPLES):
        draw = rng.random((n, n)) < p
        if directed:
            np.fill_diagonal(draw, False)
        else:
            draw = np.triu(draw, 1)
        g = CommGraph.from_adjacency(draw, directed=directed)
        if require is None:
            return g
        if require == "strong" and is_strongly_connected(g):
            return g
        if require == "connected" and is_connected(g):
            return g
    raise ConfigError(f"no {require} graph after {MAX_RESAMPLES} samples (n={n}, p={p})")


@dataclass(frozen=True)
class GraphSchedule:
    """Time-varying graph given as a pure function of the round index.

    ``period`` makes the schedule periodic so connectivity over all rounds
    can be decided from one period.  ``trace`` is an optional finite
    recording used instead when no period is known.
    """

    n_agents: int
    generator: Callable[[int], CommGraph]
    period: int | None = None
    trace: tuple[CommGraph, ...] | None = None
    window: int | None = None

    @classmethod
    def fixed(cls, g: CommGraph) -> "GraphSchedule":
        return cls(g.n_agents, lambda t: g, period=1)

    @classmethod
    def cyclic(cls, graphs: Sequence[CommGraph], window: int | None = None) -> "GraphSchedule":
        graphs = tuple(graphs)
        if not graphs:
            raise ConfigError("a cyclic schedule needs at least one graph")
        n = graphs[0].n_agents
        if any(g.n_agents != n for g in graphs):
            raise ConfigError("all graphs of a schedule must share the agent set")
        return cls(n, lambda t: graphs[t % len(graphs)], period=len(graphs), window=window)

    def at(self, t: int) -> CommGraph:
        g = self.generator(t)
        if g.n_agents != self.n_agents:
            raise ConfigError(f"schedule emitted a graph with {g.n_agents} agents at round {t}")
        return g

    def is_fixed(self) -> bool:
        return self.period == 1

    def recorded(self) -> list[CommGraph]:
        if self.period is not None:
            return [self.at(t) for t in range(self.period)]
        if self.trace is not None:
            return list(self.trace)
        raise ConfigError("aperiodic schedule without a recorded trace: connectivity is undecidable")


def _union_all(graphs: Iterable[CommGraph]) -> CommGraph:
    graphs = list(graphs)
    merged = graphs[0]
    for g in graphs[1:]:
        merged = merged.union(g)
    return merged


def check_connectivity(s: GraphSchedule | CommGraph, kind: str, T: int | None = None) -> bool:
    """Decide a connectivity property of a graph or schedule.

    ``kind`` is one of ``strong``, ``connected``, ``jointly_strong`` or
    ``T_strong`` (which needs ``T``).  Periodic schedules are checked over
    every phase of the period; aperiodic ones over their recorded trace.
    """
    if isinstance(s, CommGraph):
        s = GraphSchedule.fixed(s)
    if kind not in CONNECTIVITY_KINDS:
        raise ConfigError(f"unknown connectivity kind {kind!r}")
    graphs = s.recorded()
    if kind == "strong":
        return all(is_strongly_connected(g) for g in graphs)
    if kind == "connected":
        return all(is_connected(g) for g in graphs)
    periodic = s.period is not None
    if kind == "jointly_strong":
        if periodic:
            return is_strongly_connected(_union_all(graphs))
        # on a finite trace, every suffix must still reach strong connectivity
        return all(is_strongly_connected(_union_all(graphs[k:])) for k in range(len(graphs)))
    if T is None or T < 1:
        raise ConfigError("T_strong connectivity needs a window T >= 1")
    if periodic:
        cycle = graphs * (T // len(graphs) + 2)
        starts = range(len(graphs))
    else:
        cycle = graphs
        starts = range(len(graphs) - T + 1)
        if len(graphs) < T:
            return False
    return all(is_strongly_connected(_union_all(cycle[k:k + T])) for k in starts)


@dataclass(frozen=True)
class WeightMatrix:
    """Consensus weights ``a_ij`` with a declared stochasticity."""

    entries: np.ndarray
    stochasticity: str = "doubly"
    graph: CommGraph | None = field(default=None, compare=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ConfigError("weight matrix must be square")
        if self.stochasticity not in STOCHASTICITY:
            raise ConfigError(f"unknown stochasticity {self.stochasticity!r}")
        if (a < 0).any():
            raise ConfigError("weights must be nonnegative")
        if self.stochasticity in ("row", "doubly") and np.abs(a.sum(axis=1) - 1).max() > 1e-12:
            raise ConfigError("rows of the weight matrix do not sum to 1")
        if self.stochasticity in ("column", "doubly") and np.abs(a.sum(axis=0) - 1).max() > 1e-12:
            raise ConfigError("columns of the weight matrix do not sum to 1")
        if self.stochasticity == "doubly" and (np.diag(a) <= 0).any():
            raise ConfigError("doubly stochastic weights need positive self-weights")
        if self.graph is not None:
            allowed = self.graph.adjacency().T | np.eye(a.shape[0], dtype=bool)
            if (a[~allowed] != 0).any():
                raise ConfigError("nonzero weight on a pair that is not an edge")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n_agents(self) -> int:
        return self.entries.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        np.savetxt(buf, self.entries, delimiter=",", fmt="%.17g")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, stochasticity: str = "doubly") -> "WeightMatrix":
        a = np.loadtxt(io.StringIO(text), delimiter=",", ndmin=2)
        return cls(a, stochasticity)


def metropolis_hastings_weights(g: CommGraph) -> WeightMatrix:
    """Doubly stochastic weights ``1 / (max(d_i, d_j) + 1)`` on every edge."""
    if g.directed:
        raise ConfigError("Metropolis-Hastings weights need an undirected graph")
    if not is_connected(g):
        raise ConfigError("Metropolis-Hastings weights need a connected graph")
    deg = g.degrees()
    a = np.zeros((g.n_agents, g.n_agents))
    for i, j in g.edges:
        a[i, j] = 1.0 / (max(deg[i], deg[j]) + 1)
    np.fill_diagonal(a, 1.0 - a.sum(axis=1))
    return WeightMatrix(a, "doubly", g)


def push_sum_weights(g: CommGraph) -> WeightMatrix:
    """Column-stochastic weights ``b_ij = 1 / (out_degree(j) + 1)`` including the self-loop."""
    out = g.out_degrees()
    b = np.zeros((g.n_agents, g.n_agents))
    for j, i in g.edges:
        b[i, j] = 1.0 / (out[j] + 1)
    for j in range(g.n_agents):
        b[j, j] = 1.0 / (out[j] + 1)
    return WeightMatrix(b, "column", g)


def contraction_factor(w: WeightMatrix, tol: float = 1e-10) -> float:
    """Spectral radius of ``A - 11^T / N`` for doubly stochastic ``A``.

    Raises :class:`NoContractionError` when the factor is 1 (within ``tol``),
    which happens exactly when the underlying graph is disconnected.
    """
    if w.stochasticity != "doubly":
        raise ConfigError("the contraction factor is defined for doubly stochastic weights")
    a = w.entries
    n = a.shape[0]
    if n == 1:
        return 0.0
    centered = a - np.full((n, n), 1.0 / n)
    if np.allclose(a, a.T, atol=1e-15, rtol=0):
        sigma = float(np.abs(np.linalg.eigvalsh(centered)).max())
    else:
        sigma = float(np.abs(np.linalg.eigvals(centered)).max())
    if sigma >= 1.0 - tol:
        raise NoContractionError(f"no contraction: sigma_A = {sigma:.12g}")
    return sigma


def power_iteration_radius(m: np.ndarray, iters: int = 20_000, seed: int = 0) -> float:
    """Dominant-eigenvalue magnitude of a symmetric matrix by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(m.shape[0])
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        u = m @ v
        nrm = np.linalg.norm(u)
        if nrm == 0:
            return 0.0
        v = u / nrm
        new = abs(float(v @ m @ v))
        if abs(new - est) < 1e-15:
            return new
        est = new
    return est


def read_edge_list(path: str | Path, n_agents: int | None = None, directed: bool = False) -> CommGraph:
    return CommGraph.from_edge_list(Path(path).read_text(), n_agents, directed)


def write_edge_list(g: CommGraph, path: str | Path) -> None:
    Path(path).write_text(g.to_edge_list())
