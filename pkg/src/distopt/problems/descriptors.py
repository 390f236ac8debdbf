"""Exchangeable constraint-set descriptors.

Each descriptor is one agent's constraint set ``X_i``, built from linear
rows and at most a few smooth convex pieces.  Descriptors are immutable,
hashable by content, and have a canonical byte serialization:

    tag (8 ASCII bytes, space padded) | origin (int64) | count (int64) | float64 values

All integers and floats are little-endian.  ``origin`` is the owning
agent's index, or -1 for the bounding box.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

BOX_ORIGIN = -1


def _pack(tag: str, origin: int, values) -> bytes:
    vals = np.asarray(values, dtype="<f8").ravel()
    return tag.encode("ascii").ljust(8) + struct.pack("<qq", origin, len(vals)) + vals.tobytes()


def _unpack(payload: bytes) -> tuple[str, int, np.ndarray]:
    tag = payload[:8].decode("ascii").strip()
    origin, count = struct.unpack("<qq", payload[8:24])
    vals = np.frombuffer(payload[24:24 + 8 * count], dtype="<f8")
    return tag, origin, vals


class Descriptor:
    tag: str = ""
    origin: int

    def linear_rows(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros((0, n)), np.zeros(0)

    def smooth_pieces(self) -> list["SmoothPiece"]:
        return []

    def _values(self) -> np.ndarray:
        raise NotImplementedError

    def payload(self) -> bytes:
        return _pack(self.tag, self.origin, self._values())

    def violation(self, x) -> float:
        """Largest constraint value at ``x`` (positive means violated)."""
        x = np.asarray(x, dtype=float)
        A, b = self.linear_rows(len(x))
        vals = list(A @ x - b)
        vals += [p.value(x) for p in self.smooth_pieces()]
        return float(max(vals)) if vals else -np.inf

    def key(self) -> tuple:
        return (self.origin, self.payload())

    def __eq__(self, other):
        return isinstance(other, Descriptor) and self.payload() == other.payload()

    def __hash__(self):
        return hash(self.payload())


@dataclass(frozen=True, eq=False)
class SmoothPiece:
    """Scalar smooth convex constraint ``phi(x) <= 0``, linearizable for cuts."""

    kind: str
    data: tuple

    def value(self, x) -> float:
        if self.kind == "disk":
            center, r = self.data
            n = len(center)
            return float(np.linalg.norm(x[:n] - center) - r)
        H, q, t_index = self.data
        xs = np.delete(x, t_index)
        return float(0.5 * xs @ H @ xs + q @ xs - x[t_index])

    def cut(self, x) -> tuple[np.ndarray, float]:
        """Linearization ``a^T y <= beta`` valid for the whole piece."""
        x = np.asarray(x, dtype=float)
        a = np.zeros(len(x))
        if self.kind == "disk":
            center, r = self.data
            n = len(center)
            d = x[:n] - center
            nd = np.linalg.norm(d)
            u = d / nd if nd > 0 else np.eye(n)[0]
            a[:n] = u
            return a, float(u @ center + r)
        H, q, t_index = self.data
        mask = np.ones(len(x), dtype=bool)
        mask[t_index] = False
        xs = x[mask]
        g = H @ xs + q
        a[mask] = g
        a[t_index] = -1.0
        # phi(x) + grad^T (y - x) <= 0
        return a, float(a @ x - self.value(x))


@dataclass(frozen=True, eq=False)
class Halfspace(Descriptor):
    a: tuple
    b: float
    origin: int = 0
    tag = "half"

    def linear_rows(self, n):
        return np.asarray(self.a, dtype=float).reshape(1, n), np.array([self.b], dtype=float)

    def _values(self):
        return np.concatenate([self.a, [self.b]])


@dataclass(frozen=True, eq=False)
class LinearRows(Descriptor):
    """Several rows ``A x <= b`` (a sensing cone, a box, a polytope)."""

    A: tuple
    b: tuple
    origin: int = 0
    tag = "rows"

    def linear_rows(self, n):
        return np.asarray(self.A, dtype=float).reshape(-1, n), np.asarray(self.b, dtype=float)

    def _values(self):
        A = np.asarray(self.A, dtype=float)
        return np.concatenate([[A.shape[0], A.shape[1]], A.ravel(), self.b])


@dataclass(frozen=True, eq=False)
class Disk(Descriptor):
    """``||x[:k] - center|| <= radius`` optionally intersected with rows (a quadrant)."""

    center: tuple
    radius: float
    origin: int = 0
    A: tuple = ()
    b: tuple = ()
    tag = "disk"

    def linear_rows(self, n):
        if not self.b:
            return np.zeros((0, n)), np.zeros(0)
        return np.asarray(self.A, dtype=float).reshape(-1, n), np.asarray(self.b, dtype=float)

    def smooth_pieces(self):
        return [SmoothPiece("disk", (np.asarray(self.center, dtype=float), float(self.radius)))]

    def _values(self):
        A = np.asarray(self.A, dtype=float).ravel()
        return np.concatenate([[len(self.center), len(self.b)], self.center, [self.radius], A, self.b])


@dataclass(frozen=True, eq=False)
class SvmSample(Descriptor):
    """One labeled sample of a soft-margin SVM over ``(w, b, xi_1..xi_N)``.

    Rows: ``-label (w^T p + b) - xi_k <= -1`` and ``-xi_k <= 0``.
    """

    point: tuple
    label: float
    origin: int = 0
    n_samples: int = 1
    tag = "svm"

    def linear_rows(self, n):
        d = len(self.point)
        A = np.zeros((2, n))
        A[0, :d] = -self.label * np.asarray(self.point)
        A[0, d] = -self.label
        A[0, d + 1 + self.origin] = -1.0
        A[1, d + 1 + self.origin] = -1.0
        return A, np.array([-1.0, 0.0])

    def _values(self):
        return np.concatenate([[len(self.point), self.n_samples], self.point, [self.label]])


@dataclass(frozen=True, eq=False)
class EpigraphCap(Descriptor):
    """``1/2 y^T H y + q^T y <= t`` where ``y`` is ``x`` without coordinate ``t_index``."""

    H: tuple
    q: tuple
    t_index: int
    origin: int = 0
    tag = "epi"

    def smooth_pieces(self):
        n = len(self.q)
        H = np.asarray(self.H, dtype=float).reshape(n, n)
        return [SmoothPiece("epi", (H, np.asarray(self.q, dtype=float), self.t_index))]

    def _values(self):
        return np.concatenate([[len(self.q), self.t_index], np.ravel(self.H), self.q])


def box_descriptor(n: int, M: float) -> LinearRows:
    A = np.vstack([np.eye(n), -np.eye(n)])
    return LinearRows(tuple(map(tuple, A)), tuple([float(M)] * (2 * n)), BOX_ORIGIN)


def from_payload(payload: bytes) -> Descriptor:
    """Inverse of :meth:`Descriptor.payload`."""
    tag, origin, v = _unpack(payload)
    if tag == "half":
        return Halfspace(tuple(v[:-1]), float(v[-1]), origin)
    if tag == "rows":
        r, c = int(v[0]), int(v[1])
        A = v[2:2 + r * c].reshape(r, c)
        return LinearRows(tuple(map(tuple, A)), tuple(v[2 + r * c:]), origin)
    if tag == "disk":
        k, m = int(v[0]), int(v[1])
        center = tuple(v[2:2 + k])
        radius = float(v[2 + k])
        rest = v[3 + k:]
        b = tuple(rest[len(rest) - m:]) if m else ()
        A = rest[: len(rest) - m]
        A = tuple(map(tuple, A.reshape(m, -1))) if m else ()
        return Disk(center, radius, origin, A, b)
    if tag == "svm":
        d, ns = int(v[0]), int(v[1])
        return SvmSample(tuple(v[2:2 + d]), float(v[2 + d]), origin, ns)
    if tag == "epi":
        n, ti = int(v[0]), int(v[1])
        return EpigraphCap(tuple(v[2:2 + n * n]), tuple(v[2 + n * n:]), ti, origin)
    raise ConfigError(f"unknown descriptor tag {tag!r}")
