#!/usr/bin/env python3
"""
DLC Privacy Tradeoff - Main Entry Point

Simulates direct load control of thermostatically controlled loads under
reduced smart-meter sampling, and computes how much privacy each sampling
period leaves a consumer.

Usage:
    python main.py <command> [options]

Examples:
    # Population file for the default scenario
    python main.py gen-population --out out/run

    # One closed-loop trial, plus the trace of TCL 7
    python main.py simulate --trace-tcl 7 --out out/run

    # Tracking error versus sampling period, 4 worker processes
    python main.py sweep --h-list 1 5 15 30 --trials 100 --threads 4

    # Privacy of the bundled income scenario with the footnote parameter table
    python main.py privacy --scaling explicit-table --methods map-exact lecam-pinsker fano

    # Utility and privacy side by side
    python main.py tradeoff --h-list 1 2 5 10 15 30 60 --verbose
"""

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

from src import __version__
from src.config import EXIT_CODES, LOGGING_CONFIG, PRIVACY_METHODS, config
from src.utils import setup_logging
from src.dlc_privacy.model import ConfigurationError, NumericalError, RunResult
from src.dlc_privacy.orchestrator import Orchestrator

logger = logging.getLogger(__name__)


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64), got {value}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def create_argument_parser() -> argparse.ArgumentParser:
    """
    Create and configure the command-line argument parser.

    Returns:
        Configured ArgumentParser instance
    """
    parser = argparse.ArgumentParser(
        description="Load-control utility versus inferential privacy of smart-meter sampling",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s simulate --no-control              # Uncontrolled baseline trajectory
  %(prog)s sweep --trials 500 --threads 8     # Tracking error per sampling period
  %(prog)s privacy --methods map-exact map-mc  # Exact and Monte Carlo MAP error
  %(prog)s tradeoff --out results/recs         # Joined utility/privacy table
        """
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"DLC Privacy Tradeoff {__version__}"
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config", "-c",
        type=Path,
        default=None,
        help="Simulation config JSON (default: built-in defaults)"
    )
    common.add_argument(
        "--seed",
        type=_seed,
        default=None,
        help=f"Base seed (default: config value, {config.BASE_SEED})"
    )
    common.add_argument(
        "--out", "-o",
        type=Path,
        default=Path("out/run"),
        help="Output prefix; files are written as <prefix>_<kind>.csv/json (default: out/run)"
    )
    common.add_argument(
        "--threads", "-j",
        type=_positive_int,
        default=config.THREADS,
        help="Worker processes; outputs are identical for any value (default: 1)"
    )
    common.add_argument(
        "--verbose", "-v",
        action="store_true",
        help="Enable verbose output"
    )

    sweep_flags = argparse.ArgumentParser(add_help=False)
    sweep_flags.add_argument(
        "--h-list",
        type=float,
        nargs="+",
        default=None,
        help=f"Sampling periods in minutes (default: {list(config.SWEEP_H_LIST)})"
    )
    sweep_flags.add_argument(
        "--trials",
        type=_positive_int,
        default=None,
        help=f"Trials per period (default: {config.SWEEP_TRIALS})"
    )

    privacy_flags = argparse.ArgumentParser(add_help=False)
    privacy_flags.add_argument(
        "--scenario",
        type=str,
        default=None,
        help=f"Privacy scenario JSON or bundled name (default: {config.PRIVACY_SCENARIO})"
    )
    privacy_flags.add_argument(
        "--methods",
        nargs="+",
        choices=PRIVACY_METHODS,
        default=None,
        help="Privacy computations to run (default: all but map-mc)"
    )
    privacy_flags.add_argument(
        "--n-mc",
        type=_positive_int,
        default=None,
        help=f"Monte Carlo draws per period for map-mc (default: {config.PRIVACY_N_MC})"
    )
    privacy_flags.add_argument(
        "--scaling",
        choices=("location-shift", "explicit-table"),
        default=None,
        help="Override the scenario's per-period scaling rule"
    )

    commands = parser.add_subparsers(dest="command", required=True, metavar="command")
    commands.add_parser(
        "gen-population", parents=[common],
        help="Sample a TCL population and write it as JSON")

    simulate = commands.add_parser(
        "simulate", parents=[common],
        help="Run one closed-loop trial and write its trajectory")
    simulate.add_argument(
        "--control", dest="control", action=argparse.BooleanOptionalAction, default=None,
        help="Enable or disable direct load control (default: config value)")
    simulate.add_argument(
        "--trace-tcl", type=int, default=None, metavar="ID",
        help="Also write the temperature trace of TCL ID")

    sweep = commands.add_parser(
        "sweep", parents=[common, sweep_flags],
        help="Box statistics of the tracking error per sampling period")
    sweep.add_argument(
        "--include-uncontrolled", action="store_true",
        help="Add an h_min=0 row computed without control")

    privacy = commands.add_parser(
        "privacy", parents=[common, privacy_flags],
        help="Inferential privacy per sampling period")
    privacy.add_argument(
        "--h-list", type=float, nargs="+", default=None,
        help="Sampling periods in minutes (default: 1..window, or the table's periods)")

    commands.add_parser(
        "tradeoff", parents=[common, sweep_flags, privacy_flags],
        help="Join mean tracking error and privacy on shared periods")
    return parser


def setup_application_logging(verbose: bool = False) -> None:
    """
    Set up application logging based on verbosity level.

    Args:
        verbose: Whether to enable verbose (DEBUG) logging
    """
    log_config = copy.deepcopy(LOGGING_CONFIG)

    if verbose:
        log_config["handlers"]["default"]["level"] = "DEBUG"
        log_config["loggers"][""]["level"] = "DEBUG"

    setup_logging(log_config)


def run_command(orchestrator: Orchestrator, args: argparse.Namespace) -> RunResult:
    """Dispatch the parsed subcommand to the matching orchestrator method."""
    common = {"seed": args.seed, "out": args.out}
    if args.command == "gen-population":
        return orchestrator.gen_population(config_path=args.config, **common)
    if args.command == "simulate":
        return orchestrator.simulate(config_path=args.config, control=args.control,
                                     trace_tcl=args.trace_tcl, **common)
    if args.command == "sweep":
        return orchestrator.sweep(config_path=args.config, h_list=args.h_list,
                                  trials=args.trials,
                                  include_uncontrolled=args.include_uncontrolled, **common)
    if args.command == "privacy":
        return orchestrator.privacy(scenario_source=args.scenario, h_list=args.h_list,
                                    methods=args.methods, n_mc=args.n_mc,
                                    scaling=args.scaling, **common)
    return orchestrator.tradeoff(config_path=args.config, scenario_source=args.scenario,
                                 h_list=args.h_list, trials=args.trials, methods=args.methods,
                                 n_mc=args.n_mc, scaling=args.scaling, **common)


def print_run_results(result: RunResult) -> None:
    """
    Print a human-readable summary of one command.

    Args:
        result: RunResult returned by the orchestrator
    """
    print(f"\n{result.command} results:")
    print("=" * 40)

    if result.success:
        print(f"✅ {result.command} completed successfully!")
        print(f"   Processing time: {result.processing_time:.2f} seconds")
        for key, value in result.summary.items():
            shown = f"{value:.6g}" if isinstance(value, float) else value
            print(f"   {key.replace('_', ' ').capitalize()}: {shown}")

        print("\n   📄 Generated files:")
        for output_file in result.output_files:
            print(f"     • {output_file}")

        if result.warnings:
            print(f"\n   ⚠️  Warnings: {len(result.warnings)}")
            for warning in result.warnings:
                print(f"     • {warning}")
    else:
        print(f"❌ {result.command} failed!")
        print(f"   Error: {result.error_message}")


def main(argv=None) -> int:
    """
    Main entry point.

    Returns:
        Exit code: 0 on success, 2 for configuration errors, 3 for numerical
        or unexpected runtime errors
    """
    parser = create_argument_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, which matches CONFIG_ERROR
        return EXIT_CODES["SUCCESS"] if exc.code in (0, None) else EXIT_CODES["CONFIG_ERROR"]

    setup_application_logging(args.verbose or config.VERBOSE)
    try:
        orchestrator = Orchestrator(threads=args.threads)
        logger.info("🚀 Starting %s", args.command)
        result = run_command(orchestrator, args)
        print_run_results(result)
        return EXIT_CODES["SUCCESS"] if result.success else EXIT_CODES["NUMERICAL_ERROR"]

    except (ConfigurationError, json.JSONDecodeError) as e:
        logger.error("Configuration error: %s", e)
        print(f"\n❌ Configuration error: {e}", file=sys.stderr)
        return EXIT_CODES["CONFIG_ERROR"]

    except NumericalError as e:
        logger.error("Numerical error: %s", e)
        print(f"\n❌ Numerical error: {e}", file=sys.stderr)
        return EXIT_CODES["NUMERICAL_ERROR"]

    except KeyboardInterrupt:
        print("\n⏹️  Interrupted by user", file=sys.stderr)
        return EXIT_CODES["NUMERICAL_ERROR"]

    except Exception as e:
        logger.exception("Unexpected error occurred")
        print(f"\n❌ Unexpected error: {e}", file=sys.stderr)
        return EXIT_CODES["NUMERICAL_ERROR"]


if __name__ == "__main__":
    sys.exit(main())
