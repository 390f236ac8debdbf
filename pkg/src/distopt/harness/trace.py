"""Per-round metric traces and their CSV / summary representation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class MetricsTrace:
    """Column-oriented table of per-round metrics.

    ``meta`` carries run-level facts (the oracle's optimal value and its
    report digest, algorithm parameters) and ``final`` the last agent
    states.  Columns are fixed at construction so the CSV header is known
    before the first row arrives.
    """

    columns: list[str]
    data: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)
    final: dict = field(default_factory=dict)
    sinks: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if "t" not in self.columns:
            self.columns = ["t"] + list(self.columns)
        for c in self.columns:
            self.data.setdefault(c, [])

    def add(self, **row) -> None:
        unknown = set(row) - set(self.columns)
        if unknown:
            raise KeyError(f"unknown trace columns {sorted(unknown)}")
        values = [float(row.get(c, math.nan)) for c in self.columns]
        for c, v in zip(self.columns, values):
            self.data[c].append(v)
        for sink in self.sinks:
            sink(values)

    def __len__(self) -> int:
        return len(self.data["t"])

    def select(self, columns) -> "MetricsTrace":
        """Copy restricted to ``columns`` (``t`` is always kept)."""
        missing = set(columns) - set(self.columns)
        if missing:
            raise KeyError(f"unknown trace columns {sorted(missing)}")
        keep = [c for c in self.columns if c == "t" or c in columns]
        return MetricsTrace(keep, {c: list(self.data[c]) for c in keep}, dict(self.meta), self.final)

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.data[name], dtype=float)

    def last(self, name: str) -> float:
        return self.data[name][-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for k in range(len(self)):
            w.writerow([_fmt(self.data[c][k]) for c in self.columns])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MetricsTrace":
        rows = list(csv.reader(io.StringIO(text)))
        tr = cls(rows[0])
        for r in rows[1:]:
            tr.add(**{c: float(v) for c, v in zip(rows[0], r)})
        return tr

    def summary(self, tail: float = 0.2) -> dict:
        """Final values and log-linear decay rates fitted over the last ``tail`` fraction."""
        out = {"rounds": len(self), "final": {}, "decay_rate": {}, "r_squared": {}}
        for c in self.columns:
            if c == "t" or not len(self):
                continue
            out["final"][c] = _clean(self.data[c][-1])
            rate, r2 = fit_decay(self.column("t"), self.column(c), tail)
            out["decay_rate"][c] = _clean(rate)
            out["r_squared"][c] = _clean(r2)
        out["meta"] = self.meta
        return out

    def write(self, out_dir, stem: str) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"{stem}.csv"
        json_path = out_dir / f"{stem}.summary.json"
        csv_path.write_text(self.to_csv())
        json_path.write_text(json.dumps(self.summary(), sort_keys=True, indent=1, default=json_default))
        return csv_path, json_path


class CsvStream:
    """Appends trace rows to a CSV file as they arrive, flushing after each row.

    Attach with ``trace.sinks.append(stream.bind(trace))``; the header is
    written on binding.  ``columns`` restricts the output to a subset.
    """

    def __init__(self, path, columns=None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.columns = columns
        self._fh = None

    def bind(self, trace: MetricsTrace):
        if self.columns:
            missing = set(self.columns) - set(trace.columns)
            if missing:
                raise KeyError(f"unknown trace columns {sorted(missing)}")
        self._keep = [k for k, c in enumerate(trace.columns) if not self.columns or c == "t" or c in self.columns]
        self._fh = self.path.open("w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow([trace.columns[k] for k in self._keep])
        self._fh.flush()
        return self

    def __call__(self, values) -> None:
        self._writer.writerow([_fmt(values[k]) for k in self._keep])
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def attach(trace: MetricsTrace, sinks) -> MetricsTrace:
    """Bind each sink (an object with ``bind(trace)``) to ``trace``."""
    for sink in sinks:
        trace.sinks.append(sink.bind(trace))
    return trace


def _fmt(v: float) -> str:
    return repr(float(v))


def _clean(v):
    return None if v is None or not math.isfinite(v) else float(v)


def json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serializable: {type(o).__name__}")


def fit_decay(t, values, tail: float = 0.2) -> tuple[float, float]:
    """Slope and R^2 of ``log(values)`` against ``t`` over the last ``tail`` fraction.

    Non-positive and non-finite values are skipped; ``nan`` is returned when
    fewer than three points remain.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    start = int(len(t) * (1.0 - tail))
    t, v = t[start:], v[start:]
    ok = np.isfinite(v) & (v > 0)
    if ok.sum() < 3:
        return math.nan, math.nan
    x, y = t[ok], np.log(v[ok])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
    return float(coef[0]), r2
