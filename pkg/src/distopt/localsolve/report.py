"""Result containers returned by every solver in :mod:`distopt.localsolve`."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

STATUSES = ("optimal", "infeasible", "unbounded", "max_iter")


@dataclass
class SolveReport:
    """Outcome of a (sub)problem solve.

    ``multipliers`` holds one nonnegative entry per inequality row followed
    by one free entry per equality row, when the solver provides them.
    """

    x: np.ndarray | None
    value: float
    status: str = "optimal"
    multipliers: np.ndarray | None = None
    iterations: int = 0
    residual: float = 0.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def to_dict(self) -> dict:
        out = {
            "status": self.status,
            "value": float(self.value),
            "x": None if self.x is None else np.asarray(self.x, dtype=float).ravel().tolist(),
            "multipliers": None if self.multipliers is None else np.asarray(self.multipliers).ravel().tolist(),
            "iterations": int(self.iterations),
            "residual": float(self.residual),
        }
        extra = {k: v for k, v in self.info.items() if isinstance(v, (int, float, str, bool))}
        if extra:
            out["info"] = extra
        return out

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, used to tie traces to their oracle."""
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True)
class LpBasis:
    """``d`` constraint rows whose lexicographic optimum is the LP solution.

    ``rows`` are indices into the row list the basis was extracted from and
    ``tags`` carry caller-supplied identities (for example the agent that
    owns the row, or ``("box", k, sign)`` for bounding-box rows).
    """

    rows: tuple[int, ...]
    P: np.ndarray
    q: np.ndarray
    tags: tuple = ()

    @property
    def vertex(self) -> np.ndarray:
        return np.linalg.solve(self.P, self.q)

    @property
    def has_box_rows(self) -> bool:
        return any(isinstance(t, tuple) and t and t[0] == "box" for t in self.tags)
