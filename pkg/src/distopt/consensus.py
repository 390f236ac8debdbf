"""Average consensus, push-sum and dynamic average consensus.

Every step is a pure function from the old state to a new state.  States
hold one row per agent, so ``z[i]`` is agent ``i``'s estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, SolverError
from .graph import WeightMatrix


def _rows(z) -> np.ndarray:
    z = np.array(z, dtype=float)
    return z.reshape(len(z), -1) if z.ndim == 1 else z


@dataclass(frozen=True)
class ConsensusState:
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", _rows(self.z))

    @property
    def mean(self) -> np.ndarray:
        return self.z.mean(axis=0)


@dataclass(frozen=True)
class PushSumState:
    phi: np.ndarray
    s: np.ndarray

    @classmethod
    def start(cls, z0) -> "PushSumState":
        s = _rows(z0)
        return cls(np.ones(len(s)), s)

    @property
    def z(self) -> np.ndarray:
        return self.s / self.phi[:, None]


@dataclass(frozen=True)
class DynAvgState:
    z: np.ndarray
    last_r: np.ndarray

    @classmethod
    def start(cls, r0) -> "DynAvgState":
        r = _rows(r0)
        return cls(r.copy(), r.copy())


def _check(w: WeightMatrix, n: int, kinds: tuple[str, ...]):
    if w.n_agents != n:
        raise ConfigError(f"weights are for {w.n_agents} agents, state has {n}")
    if w.stochasticity not in kinds:
        raise ConfigError(f"expected {' or '.join(kinds)} stochastic weights, got {w.stochasticity}")


def average_consensus_step(st: ConsensusState, w: WeightMatrix) -> ConsensusState:
    """One round of ``z_i <- sum_j a_ij z_j``."""
    _check(w, len(st.z), ("doubly",))
    return ConsensusState(w.entries @ st.z)


def push_sum_step(st: PushSumState, w: WeightMatrix) -> PushSumState:
    """Apply the same column-stochastic map to the masses and the numerators."""
    _check(w, len(st.s), ("column", "doubly"))
    phi = w.entries @ st.phi
    if (phi <= 0).any():
        raise SolverError(f"push-sum mass became nonpositive at agent {int(np.argmin(phi))}")
    return PushSumState(phi, w.entries @ st.s)


def dynamic_average_step(st: DynAvgState, w: WeightMatrix, r_next) -> DynAvgState:
    """``z_i <- sum_j a_ij z_j + (r_i^{t+1} - r_i^t)``."""
    _check(w, len(st.z), ("doubly",))
    r_next = _rows(r_next)
    if r_next.shape != st.last_r.shape:
        raise ConfigError(f"signal shape changed from {st.last_r.shape} to {r_next.shape}")
    return DynAvgState(w.entries @ st.z + (r_next - st.last_r), r_next)


def disagreement(z: np.ndarray) -> float:
    """Largest distance of an agent estimate from the network mean."""
    z = _rows(z)
    return float(np.linalg.norm(z - z.mean(axis=0), axis=1).max())
