"""Versioned JSON run configurations and their validation.

A configuration names a problem generator, a graph generator, one
algorithm with its parameters, the metric sampling and the output
location::

    {
      "version": 1,
      "problem":   {"generator": "random_qp", "params": {"N": 10}, "seed": 0},
      "graph":     {"generator": "erdos_renyi", "params": {"p": 0.2}, "seed": 0},
      "algorithm": {"id": "admm", "params": {"rho": 0.1}, "rounds": 5000},
      "metrics":   {"check_every": 1},
      "output":    {"dir": "runs", "stem": "admm", "format": "csv"}
    }

Unknown keys anywhere in the document are errors.  The graph's ``n`` may
be omitted; it is then taken from the problem.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

SCHEMA_VERSION = 1

PROBLEM_KINDS = {
    "lasso": "cost_coupled",
    "logistic": "cost_coupled",
    "random_qp": "cost_coupled",
    "soft_svm": "common_cost",
    "random_lp": "common_cost",
    "target_localization": "common_cost",
    "task_assignment": "constraint_coupled",
    "microgrid": "constraint_coupled",
}

GRAPH_GENERATORS = {
    "erdos_renyi": {"n", "p", "directed"},
    "path": {"n"},
    "cycle": {"n", "directed"},
    "complete": {"n"},
    "edge_list": {"n", "path", "text", "directed"},
}

ALGORITHMS = {
    "dsg": ("cost_coupled", {"schedule"}),
    "gt": ("cost_coupled", {"gamma"}),
    "ddec": ("cost_coupled", {"schedule", "min_norm"}),
    "admm": ("cost_coupled", {"rho"}),
    "parallel_ddec": ("cost_coupled", {"schedule"}),
    "parallel_admm": ("cost_coupled", {"rho"}),
    "dual_subgradient": ("constraint_coupled", {"schedule"}),
    "rsdd": ("constraint_coupled", {"schedule", "M", "M_factor"}),
    "cc": ("common_cost", {"M", "T"}),
}

NEEDS_GRAPH = {a for a in ALGORITHMS if not a.startswith("parallel_")}
SCHEDULE_KEYS = {"kind", "gamma", "c", "eps"}
FORMATS = ("csv",)

_TOP = {"version", "problem", "graph", "algorithm", "metrics", "output"}
_SECTIONS = {
    "problem": {"generator", "params", "seed"},
    "graph": {"generator", "params", "seed"},
    "algorithm": {"id", "params", "rounds"},
    "metrics": {"check_every", "columns"},
    "output": {"dir", "stem", "format"},
}


def _reject_unknown(where: str, got, allowed) -> None:
    if not isinstance(got, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = set(got) - set(allowed)
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


@dataclass
class RunConfig:
    """One validated run: problem, graph, algorithm, metrics and output settings."""

    problem: dict
    algorithm: dict
    graph: dict | None = None
    metrics: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    version: int = SCHEMA_VERSION

    def __post_init__(self):
        validate(self)

    @property
    def problem_kind(self) -> str:
        return PROBLEM_KINDS[self.problem["generator"]]

    @property
    def rounds(self) -> int:
        return int(self.algorithm.get("rounds", 0))

    @property
    def check_every(self) -> int:
        return int(self.metrics.get("check_every", 1))

    @property
    def stem(self) -> str:
        return self.output.get("stem") or f"{self.problem['generator']}-{self.algorithm['id']}"

    def to_dict(self) -> dict:
        out = {"version": self.version, "problem": self.problem, "algorithm": self.algorithm,
               "metrics": self.metrics, "output": self.output}
        if self.graph is not None:
            out["graph"] = self.graph
        return copy.deepcopy(out)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        _reject_unknown("config", data, _TOP)
        if data.get("version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config version {data.get('version')!r}; expected {SCHEMA_VERSION}")
        for key in ("problem", "algorithm"):
            if key not in data:
                raise ConfigError(f"config is missing the {key!r} section")
        data = copy.deepcopy(data)
        return cls(problem=data["problem"], algorithm=data["algorithm"], graph=data.get("graph"),
                   metrics=data.get("metrics", {}), output=data.get("output", {}), version=data["version"])

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from err
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"config {path} is not valid JSON: {err}") from err
        return cls.from_dict(data)

    def with_overrides(self, seed: int | None = None, rounds: int | None = None, out_dir=None,
                       fmt: str | None = None) -> "RunConfig":
        """Copy with CLI overrides; ``seed`` replaces both the problem and the graph seed."""
        data = self.to_dict()
        if seed is not None:
            data["problem"]["seed"] = seed
            if "graph" in data:
                data["graph"]["seed"] = seed
        if rounds is not None:
            data["algorithm"]["rounds"] = rounds
        if out_dir is not None:
            data["output"]["dir"] = str(out_dir)
        if fmt is not None:
            data["output"]["format"] = fmt
        return RunConfig.from_dict(data)


def validate(cfg: RunConfig) -> None:
    """Check field types and the algorithm / problem / graph compatibility."""
    if cfg.version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config version {cfg.version!r}")
    _reject_unknown("problem", cfg.problem, _SECTIONS["problem"])
    _reject_unknown("algorithm", cfg.algorithm, _SECTIONS["algorithm"])
    _reject_unknown("metrics", cfg.metrics, _SECTIONS["metrics"])
    _reject_unknown("output", cfg.output, _SECTIONS["output"])

    gen = cfg.problem.get("generator")
    if gen not in PROBLEM_KINDS:
        raise ConfigError(f"unknown problem generator {gen!r}; choose from {sorted(PROBLEM_KINDS)}")
    _check_params("problem.params", cfg.problem.get("params", {}))
    _check_int("problem.seed", cfg.problem.get("seed", 0), 0)

    algo = cfg.algorithm.get("id")
    if algo not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algo!r}; choose from {sorted(ALGORITHMS)}")
    kind, allowed = ALGORITHMS[algo]
    if PROBLEM_KINDS[gen] != kind:
        raise ConfigError(f"algorithm {algo!r} needs a {kind.replace('_', '-')} problem; "
                          f"{gen!r} is {PROBLEM_KINDS[gen].replace('_', '-')}")
    params = cfg.algorithm.get("params", {})
    _reject_unknown("algorithm.params", params, allowed)
    _check_int("algorithm.rounds", cfg.algorithm.get("rounds", 0), 0)
    if "schedule" in allowed:
        if "schedule" not in params:
            raise ConfigError(f"algorithm {algo!r} needs a step-size schedule")
        _reject_unknown("algorithm.params.schedule", params["schedule"], SCHEDULE_KEYS)
    for key in ("rho", "gamma", "M", "M_factor"):
        if key in params:
            _check_positive(f"algorithm.params.{key}", params[key])
    for key in ("rho",):
        if key in allowed and key not in params:
            raise ConfigError(f"algorithm {algo!r} needs {key!r}")
    if algo == "gt" and "gamma" not in params:
        raise ConfigError("gradient tracking needs a constant step 'gamma'")
    if "T" in params and params["T"] is not None:
        _check_int("algorithm.params.T", params["T"], 1)

    if algo in NEEDS_GRAPH:
        if cfg.graph is None:
            raise ConfigError(f"algorithm {algo!r} needs a graph section")
    if cfg.graph is not None:
        _reject_unknown("graph", cfg.graph, _SECTIONS["graph"])
        g = cfg.graph.get("generator")
        if g not in GRAPH_GENERATORS:
            raise ConfigError(f"unknown graph generator {g!r}; choose from {sorted(GRAPH_GENERATORS)}")
        _reject_unknown("graph.params", cfg.graph.get("params", {}), GRAPH_GENERATORS[g])
        _check_int("graph.seed", cfg.graph.get("seed", 0), 0)
        directed = cfg.graph.get("params", {}).get("directed", False)
        if directed and algo in ("ddec", "admm", "rsdd", "dsg", "gt", "dual_subgradient"):
            raise ConfigError(f"algorithm {algo!r} runs on undirected graphs")

    _check_int("metrics.check_every", cfg.metrics.get("check_every", 1), 1)
    cols = cfg.metrics.get("columns")
    if cols is not None and not (isinstance(cols, list) and all(isinstance(c, str) for c in cols)):
        raise ConfigError("metrics.columns must be a list of column names")
    fmt = cfg.output.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"unsupported output format {fmt!r}; choose from {list(FORMATS)}")


def _check_params(where, params) -> None:
    if not isinstance(params, dict):
        raise ConfigError(f"{where} must be a JSON object")


def _check_int(where, value, lo) -> None:
    if isinstance(value, bool) or not isinstance(value, int) or value < lo:
        raise ConfigError(f"{where} must be an integer >= {lo}, got {value!r}")


def _check_positive(where, value) -> None:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
        raise ConfigError(f"{where} must be a positive number, got {value!r}")
