"""Command-line entry point: ``distopt run|preset|oracle|validate``.

Exit codes: 0 on success, 2 on a configuration error, 3 when a solver fails.
"""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import ConfigError, SolverError
from .config import RunConfig
from .experiment import OUT_DIR_ENV, PRESETS, build_problem, preset_configs, run_experiment, solve_oracle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3


class _Parser(argparse.ArgumentParser):
    """Argument errors exit with the configuration-error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="override the problem and graph seeds")
    common.add_argument("--rounds", type=int, help="override the number of rounds")
    common.add_argument("--out-dir", help=f"output directory (default: ${OUT_DIR_ENV} or ./runs)")
    common.add_argument("--format", choices=["csv"], default=None, help="trace format")

    p = _Parser(prog="distopt", description="Simulate distributed optimization algorithms.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("run", parents=[common], help="run a JSON config").add_argument("config")
    pre = sub.add_parser("preset", parents=[common], help="run a named experiment preset")
    pre.add_argument("name", help=f"one of: {', '.join(sorted(PRESETS))}")
    sub.add_parser("oracle", parents=[common], help="solve the centralized problem only").add_argument("config")
    sub.add_parser("validate", help="check a config without running it").add_argument("config")
    return p


def _overrides(cfg: RunConfig, args) -> RunConfig:
    return cfg.with_overrides(seed=args.seed, rounds=args.rounds, out_dir=args.out_dir, fmt=args.format)


def _report(result) -> None:
    tr = result.trace
    last = {c: tr.last(c) for c in tr.columns if len(tr)}
    shown = {k: v for k, v in last.items() if k != "t" and v == v}
    print(f"{result.config.stem}: {len(tr)} rows, f* = {result.oracle.value:.12g}")
    for k in sorted(shown):
        print(f"  {k} = {shown[k]:.6g}")
    for path in result.paths:
        print(f"  wrote {path}")


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        if args.command == "validate":
            cfg = RunConfig.load(args.config)
            print(f"{args.config}: ok ({cfg.algorithm['id']} on {cfg.problem['generator']})")
        elif args.command == "oracle":
            cfg = _overrides(RunConfig.load(args.config), args)
            rep = solve_oracle(cfg, build_problem(cfg.problem))
            out = rep.to_dict()
            out["digest"] = rep.digest()
            print(json.dumps(out, indent=1))
            if not rep.ok:
                return EXIT_SOLVER
        elif args.command == "run":
            _report(run_experiment(_overrides(RunConfig.load(args.config), args)))
        else:
            for cfg in preset_configs(args.name):
                _report(run_experiment(_overrides(cfg, args)))
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as err:
        print(f"I/O error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
