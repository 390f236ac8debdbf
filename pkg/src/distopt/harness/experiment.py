"""Build problems and graphs from a configuration, solve the oracle, run, emit."""

from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..cexchange import pooled_lexmin, run_constraints_consensus
from ..dual import run_dadmm, run_ddec, run_dual_subgradient, run_parallel, run_rsdd
from ..errors import ConfigError
from ..graph import (CommGraph, complete_graph, cycle_graph, erdos_renyi_graph, metropolis_hastings_weights,
                     path_graph, read_edge_list)
from ..localsolve.reference import centralized_reference_solve
from ..localsolve.report import SolveReport
from ..primal import StepSchedule, run_primal
from ..problems import generators as gens
from .config import RunConfig
from .trace import CsvStream, MetricsTrace, json_default

OUT_DIR_ENV = "DISTOPT_OUT_DIR"

LASSO_DEFAULTS = {"N": 10, "n_i": 20, "d": 5, "rho": 0.1}

_PROBLEM_BUILDERS = {
    "lasso": lambda seed, **p: gens.make_lasso(seed=seed, **{**LASSO_DEFAULTS, **p}),
    "logistic": lambda seed, **p: gens.make_logistic(seed=seed, **p),
    "random_qp": lambda seed, **p: gens.make_random_qp(seed=seed, **p),
    "soft_svm": lambda seed, **p: gens.make_soft_svm(seed=seed, **p),
    "random_lp": lambda seed, **p: gens.make_random_lp(seed=seed, **{"N": 10, "d": 2, **p}),
    "target_localization": lambda seed, **p: gens.make_target_localization(seed=seed, **p),
    "task_assignment": lambda seed, **p: gens.make_task_assignment(seed=seed, **{"N": 5, **p}),
    "microgrid": lambda seed, **p: gens.make_microgrid(seed=seed, **p),
}


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV, "runs"))


def build_problem(spec: dict):
    params = copy.deepcopy(spec.get("params", {}))
    try:
        return _PROBLEM_BUILDERS[spec["generator"]](int(spec.get("seed", 0)), **params)
    except TypeError as err:
        raise ConfigError(f"bad parameters for problem generator {spec['generator']!r}: {err}") from err


def build_graph(spec: dict, n_agents: int) -> CommGraph:
    params = dict(spec.get("params", {}))
    n = int(params.pop("n", n_agents))
    if n != n_agents:
        raise ConfigError(f"graph has {n} nodes but the problem has {n_agents} agents")
    gen = spec["generator"]
    if gen == "erdos_renyi":
        if "p" not in params:
            raise ConfigError("erdos_renyi graphs need an edge probability 'p'")
        return erdos_renyi_graph(n, float(params["p"]), int(spec.get("seed", 0)), bool(params.get("directed", False)))
    if gen == "path":
        return path_graph(n)
    if gen == "cycle":
        return cycle_graph(n, bool(params.get("directed", True)))
    if gen == "complete":
        return complete_graph(n)
    directed = bool(params.get("directed", False))
    if "text" in params:
        g = CommGraph.from_edge_list(params["text"], n, directed)
    elif "path" in params:
        g = read_edge_list(params["path"], n, directed)
    else:
        raise ConfigError("edge_list graphs need 'path' or 'text'")
    return g


def solve_oracle(cfg: RunConfig, problem) -> SolveReport:
    """Centralized reference: pooled lexmin for Constraints Consensus, else the problem's own oracle."""
    if cfg.algorithm["id"] == "cc":
        return pooled_lexmin(problem, cfg.algorithm.get("params", {}).get("M"))
    return centralized_reference_solve(problem)


def _schedule(params: dict) -> StepSchedule:
    s = dict(params["schedule"])
    return StepSchedule(s.pop("kind", "constant"), **s)


@dataclass
class ExperimentResult:
    config: RunConfig
    trace: MetricsTrace
    oracle: SolveReport
    final: dict = field(default_factory=dict)
    paths: tuple = ()


def run_experiment(cfg: RunConfig, out_dir=None, emit: bool = True) -> ExperimentResult:
    """Run one configuration; the CSV is streamed row by row when ``emit`` is true.

    The output directory is ``out_dir``, else the config's ``output.dir``,
    else the ``DISTOPT_OUT_DIR`` environment variable, else ``runs``.
    """
    problem = build_problem(cfg.problem)
    oracle = solve_oracle(cfg, problem)
    if not oracle.ok:
        raise ConfigError(f"centralized oracle finished with status {oracle.status!r}")
    graph = build_graph(cfg.graph, problem.n_agents) if cfg.graph is not None else None

    directory = Path(out_dir or cfg.output.get("dir") or default_out_dir())
    columns = cfg.metrics.get("columns")
    stream = CsvStream(directory / f"{cfg.stem}.csv", columns) if emit else None
    sinks = (stream,) if stream is not None else ()
    algo = cfg.algorithm["id"]
    params = cfg.algorithm.get("params", {})
    rounds, every = cfg.rounds, cfg.check_every
    f_star = float(oracle.value)
    try:
        if algo in ("dsg", "gt"):
            sched = _schedule(params) if algo == "dsg" else StepSchedule.constant(params["gamma"])
            trace = run_primal(problem, metropolis_hastings_weights(graph), algo, sched, rounds,
                               f_star=f_star, x_star=oracle.x, check_every=every, sinks=sinks)
        elif algo == "ddec":
            trace = run_ddec(problem, graph, _schedule(params), rounds, f_star, oracle.x,
                             min_norm=params.get("min_norm", True), check_every=every, sinks=sinks)
        elif algo == "admm":
            trace = run_dadmm(problem, graph, params["rho"], rounds, f_star, oracle.x, every, sinks=sinks)
        elif algo in ("parallel_ddec", "parallel_admm"):
            trace = run_parallel(problem, algo, rounds, _schedule(params) if "schedule" in params else None,
                                 params.get("rho"), f_star, oracle.x, every, sinks=sinks)
        elif algo == "dual_subgradient":
            trace = run_dual_subgradient(problem, metropolis_hastings_weights(graph), _schedule(params), rounds,
                                         f_star, check_every=every, sinks=sinks)
        elif algo == "rsdd":
            M = params.get("M")
            if M is None and "M_factor" in params:
                M = params["M_factor"] * float(abs(oracle.multipliers[: problem.S]).sum())
            trace = run_rsdd(problem, graph, _schedule(params), rounds, M, f_star, oracle.multipliers[: problem.S],
                             every, sinks=sinks)
        else:
            res = run_constraints_consensus(problem, graph, rounds or 1000, params.get("M"), params.get("T"),
                                            f_star, oracle.x, sinks=sinks)
            trace = res.trace
    finally:
        if stream is not None:
            stream.close()
    trace.meta.update({"oracle_digest": oracle.digest(), "f_star": f_star, "config": cfg.to_dict()})
    paths = ()
    if emit:
        summary = emit_summary(trace, directory, cfg.stem, columns)
        paths = (stream.path, summary)
    return ExperimentResult(cfg, trace, oracle, trace.final, paths)


def emit_summary(trace: MetricsTrace, out_dir, stem: str, columns=None) -> Path:
    path = Path(out_dir) / f"{stem}.summary.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    summary = trace.select(columns).summary() if columns else trace.summary()
    path.write_text(json.dumps(summary, sort_keys=True, indent=1, default=json_default))
    return path


def emit_trace(trace: MetricsTrace, out_dir, stem: str, fmt: str = "csv", columns=None) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and ``<stem>.summary.json`` under ``out_dir``."""
    if fmt != "csv":
        raise ConfigError(f"unsupported output format {fmt!r}")
    trace = trace.select(columns) if columns else trace
    csv_path, _ = trace.write(out_dir, stem)
    return csv_path, emit_summary(trace, out_dir, stem)


# --- presets ------------------------------------------------------------------


def _cfg(problem, graph, algorithm, stem, check_every=1) -> dict:
    return {"version": 1, "problem": problem, "graph": graph, "algorithm": algorithm,
            "metrics": {"check_every": check_every}, "output": {"stem": stem, "format": "csv"}}


_LOGISTIC = {"generator": "logistic", "params": {"N": 30, "m_i": 10, "d": 5, "C": 0.01}, "seed": 0}
_QP = {"generator": "random_qp", "params": {"N": 10, "d": 5, "eig_range": [1.0, 10.0]}, "seed": 0}
_MICROGRID = {"generator": "microgrid", "params": {}, "seed": 0}
_SVM = {"generator": "soft_svm", "params": {"N": 30, "C": 100.0, "M": 10.0}, "seed": 0}
_LP = {"generator": "random_lp", "params": {"N": 20, "d": 2}, "seed": 0}
_MG_STEP = {"kind": "power", "c": 0.1, "eps": 0.7}

PRESETS = {
    "ch2-logistic": [
        _cfg(_LOGISTIC, {"generator": "erdos_renyi", "params": {"p": 0.2}, "seed": 0},
             {"id": "dsg", "params": {"schedule": {"kind": "power", "c": 1.0, "eps": 0.8}}, "rounds": 20000},
             "ch2-logistic-dsg"),
        _cfg(_LOGISTIC, {"generator": "erdos_renyi", "params": {"p": 0.2}, "seed": 0},
             {"id": "gt", "params": {"gamma": 1e-3}, "rounds": 20000}, "ch2-logistic-gt"),
    ],
    "ch3-qp": [
        _cfg(_QP, {"generator": "erdos_renyi", "params": {"p": 0.2}, "seed": 0},
             {"id": "admm", "params": {"rho": 0.1}, "rounds": 5000}, "ch3-qp-admm"),
        _cfg(_QP, {"generator": "erdos_renyi", "params": {"p": 0.2}, "seed": 0},
             {"id": "ddec", "params": {"schedule": {"kind": "power", "c": 1.0, "eps": 0.7}}, "rounds": 50000},
             "ch3-qp-ddec"),
    ],
    "ch3-microgrid": [
        _cfg(_MICROGRID, {"generator": "erdos_renyi", "params": {"p": 0.2}, "seed": 0},
             {"id": "rsdd", "params": {"schedule": _MG_STEP, "M_factor": 10.0}, "rounds": 4000},
             "ch3-microgrid-rsdd"),
        _cfg(_MICROGRID, {"generator": "erdos_renyi", "params": {"p": 0.2}, "seed": 0},
             {"id": "dual_subgradient", "params": {"schedule": _MG_STEP}, "rounds": 4000},
             "ch3-microgrid-dual_subgradient"),
    ],
    "ch4-svm": [
        _cfg(_SVM, {"generator": "erdos_renyi", "params": {"p": 0.1}, "seed": 0},
             {"id": "cc", "params": {"M": 10.0}, "rounds": 200}, "ch4-svm-cc"),
    ],
    "ch4-lp": [
        _cfg(_LP, {"generator": "erdos_renyi", "params": {"p": 0.3, "directed": True}, "seed": 0},
             {"id": "cc", "params": {}, "rounds": 200}, "ch4-lp-cc"),
    ],
}


def preset_configs(name: str) -> list[RunConfig]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return [RunConfig.from_dict(copy.deepcopy(d)) for d in PRESETS[name]]
