#!/usr/bin/env python3

# Copyright 2026 Canonical Ltd.
# See LICENSE file for licensing details.

"""Command line entry point for the broadcast anonymity simulator."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from adversary import InvalidPosteriorError, MissingObservationError, UnsupportedViewError
from experiment import OracleMismatchError, RegionBoundViolationError, run_experiment
from graph import InvalidAdversaryPlacementError, InvalidTopologyError, WardComputationError
from metrics import InvalidMappingError
from plot import InvalidCsvSchemaError, emit_svg
from spreading import InvalidObservationLogError, StemDeadEndError, UnreachableNodesError
from state.experiment import ExperimentConfig, ExperimentKind, InvalidExperimentConfigError
from theory import InvalidBoundParameterError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_INVARIANT_VIOLATION = 2

_CONFIG_ERRORS = (
    InvalidExperimentConfigError,
    InvalidTopologyError,
    InvalidAdversaryPlacementError,
    InvalidBoundParameterError,
    InvalidCsvSchemaError,
    UnreachableNodesError,
    StemDeadEndError,
    UnsupportedViewError,
    OSError,
)
_INVARIANT_ERRORS = (
    RegionBoundViolationError,
    OracleMismatchError,
    InvalidPosteriorError,
    InvalidMappingError,
    InvalidObservationLogError,
    MissingObservationError,
    WardComputationError,
)


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON experiment configuration")
    parser.add_argument("--seed", type=int, help="base seed; random when absent")
    parser.add_argument("--trials", type=int, help="trials per point")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--workers", type=int, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser.

    Returns:
        The parser with one subcommand per experiment kind plus ``plot``.
    """
    parser = argparse.ArgumentParser(
        prog="broadcast-anonymity",
        description="Simulate broadcast protocols against spy adversaries.",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging level",
    )
    subcommands = parser.add_subparsers(dest="command", required=True)
    for kind in ExperimentKind:
        _add_run_flags(subcommands.add_parser(kind.value, help=f"run a {kind.value} experiment"))
    plot = subcommands.add_parser("plot", help="render result CSVs as SVG")
    plot.add_argument("--points", type=Path, help="points CSV")
    plot.add_argument("--bounds", type=Path, help="bounds CSV")
    plot.add_argument("--p", type=float, help="adversarial fraction of the shaded corner")
    plot.add_argument("--out", type=Path, required=True, help="SVG file to write")
    return parser


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """Resolve the configuration of a run subcommand.

    Args:
        args: Parsed arguments.

    Returns:
        The file or built-in configuration with flags applied.
    """
    kind = ExperimentKind(args.command)
    overrides: dict[str, Any] = {
        "kind": kind.value,
        "seed": args.seed,
        "trials": args.trials,
        "out": str(args.out) if args.out else None,
        "workers": args.workers,
    }
    if args.config:
        return ExperimentConfig.from_file(args.config, overrides)
    return ExperimentConfig.default(kind, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line interface.

    Args:
        argv: Arguments without the program name; defaults to ``sys.argv``.

    Returns:
        0 on success, 1 on configuration errors, 2 on invariant violations.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "plot":
            emit_svg(args.points, args.bounds, args.out, args.p)
        else:
            manifest = run_experiment(load_config(args))
            logger.info("Run finished with seed %s", manifest.config["seed"])
    except _INVARIANT_ERRORS as exc:
        logger.error("Invariant violated: %s", exc)
        return EXIT_INVARIANT_VIOLATION
    except _CONFIG_ERRORS as exc:
        logger.error("Aborted: %s", exc)
        return EXIT_CONFIG_ERROR
    return EXIT_OK


if __name__ == "__main__":  # pragma: nocover
    sys.exit(main())
