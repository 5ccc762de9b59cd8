"""Command-line interface.

Subcommands: ``build``, ``simulate``, ``sweep``, ``evaluate-clinical``.
Exit codes: 0 success, 1 configuration error, 2 computation error.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__, pipeline
from .config import load_config
from .errors import ConfigError, ParseError, TauspreadError


def _add_common(parser, solver_flags=True):
    parser.add_argument("--config", required=True, help="path to the YAML run config")
    parser.add_argument("--out", default=None, help="override output.dir")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for enumeration/sweeps (0 = auto)")
    if solver_flags:
        parser.add_argument("--rtol", type=float, default=None, help="override solver.rtol")
        parser.add_argument("--atol", type=float, default=None, help="override solver.atol")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tauspread",
        description="Amyloid/tau propagation on brain connectome graphs",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser("build", help="write graph and spectrum artifacts")
    _add_common(p_build, solver_flags=False)

    p_sim = sub.add_parser("simulate", help="run one simulation and report the pattern")
    _add_common(p_sim)

    p_sweep = sub.add_parser("sweep", help="evaluate a (gamma3, c_w) grid against a reference")
    _add_common(p_sweep)

    p_eval = sub.add_parser("evaluate-clinical",
                            help="compute the clinical deterioration pattern")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--out", default=None)
    return parser


def _threads(value: int) -> int:
    if value == 0:
        return os.cpu_count() or 1
    if value < 0:
        raise ConfigError(f"--threads must be >= 0, got {value}")
    return value


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    if args.out is not None:
        overrides["output.dir"] = args.out
    try:
        cfg = load_config(args.config, overrides=overrides)
        threads = _threads(getattr(args, "threads", 1))
    except (ConfigError, ParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "build":
            report = pipeline.cmd_build(cfg, threads=threads)
            print(f"artifacts written to {report['out_dir']} "
                  f"({report['vertices']} vertices, {report['edges']} edges)")
        elif args.command == "simulate":
            report = pipeline.cmd_simulate(cfg, threads=threads,
                                           rtol=args.rtol, atol=args.atol)
            print(f"pattern {report['pattern']} "
                  f"(report: {cfg.out_dir / 'report.json'})")
        elif args.command == "sweep":
            report = pipeline.cmd_sweep(cfg, threads=threads,
                                        rtol=args.rtol, atol=args.atol)
            rep = report["representative"]
            if rep is None:
                print("sweep completed: every grid point failed "
                      f"(report: {cfg.out_dir / 'sweep.json'})")
            else:
                print(f"min HD {report['min_hd']} at gamma3={rep['gamma3']} "
                      f"c_w={rep['c_w']} pattern {rep['pattern']} "
                      f"(report: {cfg.out_dir / 'sweep.json'})")
        elif args.command == "evaluate-clinical":
            report = pipeline.cmd_evaluate_clinical(cfg)
            print(f"clinical pattern {report['pattern']} "
                  f"(report: {cfg.out_dir / 'clinical.json'})")
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (TauspreadError, ValueError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
