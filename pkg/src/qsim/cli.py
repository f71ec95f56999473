"""Command-line entry point.

    qsim <protocol> --config <path> [--out <dir>] [--workers N] [--cutoff N] [--tol X]

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 convergence-gate failure.
"""

from __future__ import annotations

import argparse
import sys

from .lindblad import SolverError
from .scenarios import (
    PROTOCOLS,
    ConfigError,
    ConvergenceError,
    ScenarioConfig,
    run_protocol,
    write_report,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_GATE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsim",
        description="Dissipative qubit-mechanics protocols: cooling, squeezing, "
                    "cat trapping, dark-state detection, and model validation.",
    )
    parser.add_argument("protocol", choices=sorted(PROTOCOLS),
                        help="protocol to run; must match the config document")
    parser.add_argument("--config", required=True, metavar="PATH",
                        help="JSON configuration file")
    parser.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (overrides the config's output_dir)")
    parser.add_argument("--workers", type=int, default=1, metavar="N",
                        help="parallel worker processes for sweep points")
    parser.add_argument("--cutoff", type=int, default=None, metavar="N",
                        help="override the Fock-space cutoff")
    parser.add_argument("--tol", type=float, default=None, metavar="X",
                        help="override the integrator relative tolerance")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.workers < 1:
        print("qsim: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    overrides = {
        "fock_cutoff": args.cutoff,
        "integrator_rtol": args.tol,
        "output_dir": args.out,
    }
    try:
        cfg = ScenarioConfig.from_json_file(args.config, overrides)
        if cfg.protocol != args.protocol:
            raise ConfigError(
                f"command-line protocol {args.protocol!r} does not match the "
                f"config's {cfg.protocol!r}")
        report = run_protocol(cfg, workers=args.workers)
    except ConvergenceError as exc:
        print(f"qsim: convergence gate failed: {exc}", file=sys.stderr)
        return EXIT_GATE
    except SolverError as exc:
        print(f"qsim: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:   # ConfigError and parameter-domain errors
        print(f"qsim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    print(f"protocol: {report.protocol}")
    for key in sorted(report.headline):
        print(f"  {key} = {report.headline[key]:.6g}")
    if report.convergence is not None:
        rec = report.convergence
        print(f"  convergence gate: passed "
              f"(cutoff {rec.cutoff_base} -> {rec.cutoff_refined}, "
              f"rtol {rec.rtol_base:g} -> {rec.rtol_refined:g}, "
              f"max drift {max(rec.drift.values()):.2e})")
    out_dir = args.out or cfg.output_dir or "."
    for path in write_report(report, out_dir):
        print(f"  wrote {path}")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
