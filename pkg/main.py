#!/usr/bin/env python3
"""
SSSTA Designer - Main Entry Point

Designs sparse spatially stretched tripole arrays from TOML run
configurations.

Usage:
    python main.py run config/presets/broadside.toml
    python main.py sweep config/presets/broadside.toml --axis M --values 101 201 301
    python main.py eval output/broadside/report.json --pattern-step 0.05
    python main.py --help

Requirements:
    - Python 3.11+
"""

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Add project root to path
PROJECT_ROOT = Path(__file__).parent
sys.path.insert(0, str(PROJECT_ROOT))

from config import get_settings
from sssta.errors import EXIT_INVALID_CONFIG, EXIT_OK, DesignError, exit_code_for
from sssta.logging_config import get_logger, setup_logging
from sssta.schemas.config import load_run_config
from sssta.services import SWEEP_AXES, DesignService, SweepService

logger = get_logger("sssta.cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="design",
        description="SSSTA Designer - sparse spatially stretched tripole array design",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  design run config/presets/broadside.toml
  design sweep config/presets/broadside.toml --axis alpha --values 0.35 0.5 0.65
  design sweep config/presets/off_broadside_1.toml --axis theta_ml --values 10 20 30 --jobs 3
  design eval output/broadside/report.json --pattern-step 0.1

Exit codes: 0 ok, 2 invalid config, 3 no solution, 4 solver failure, 1 unexpected.
Set SSSTA_OUTPUT_DIR to override the config file's output_dir.
        """,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Design one array and write its report")
    run.add_argument("config", type=Path, help="TOML run configuration")

    sweep = commands.add_parser("sweep", help="Repeat a design over values of one parameter")
    sweep.add_argument("config", type=Path, help="Base TOML run configuration")
    sweep.add_argument("--axis", choices=SWEEP_AXES, required=True, help="Parameter to vary")
    sweep.add_argument("--values", type=float, nargs="*", default=[], help="Values to run, in table order")
    sweep.add_argument("--jobs", type=int, default=1, help="Worker processes (default: 1)")

    evaluate = commands.add_parser("eval", help="Re-evaluate a saved report")
    evaluate.add_argument("report", type=Path, help="report.json written by 'run'")
    evaluate.add_argument(
        "--pattern-step",
        type=float,
        default=0.1,
        help="Beam pattern resolution in degrees (default: 0.1)",
    )
    return parser


def _run(args: argparse.Namespace) -> int:
    settings = get_settings()
    config = load_run_config(args.config)
    outcome = DesignService().run(config, settings.resolve_output_dir(config.output_dir))
    report = outcome.report
    dipoles = len(report.placements)
    print(f"{report.method}: {report.status}, {dipoles} dipoles")
    return outcome.exit_code


def _sweep(args: argparse.Namespace) -> int:
    settings = get_settings()
    config = load_run_config(args.config)
    service = SweepService(settings.LOG_LEVEL, settings.LOG_JSON)
    path = service.run(
        config,
        args.axis,
        args.values,
        settings.resolve_output_dir(config.output_dir),
        jobs=args.jobs,
    )
    print(f"sweep {args.axis}: {len(args.values)} points -> {path}")
    return EXIT_OK


def _eval(args: argparse.Namespace) -> int:
    if args.pattern_step <= 0:
        print("--pattern-step must be positive", file=sys.stderr)
        return EXIT_INVALID_CONFIG
    outcome = DesignService().evaluate(args.report, args.pattern_step)
    metrics = outcome.report.metrics
    if metrics is None:
        print(f"{outcome.report.method}: {outcome.report.status}, nothing to evaluate")
        return outcome.exit_code
    sidelobe = "NA" if metrics.closest_sidelobe_db is None else format(metrics.closest_sidelobe_db, ".6g")
    print(
        f"{outcome.report.method}: {metrics.dipole_count} dipoles, "
        f"mainlobe {metrics.achieved_mainlobe_deg:.6g} deg, closest sidelobe {sidelobe} dB"
    )
    return outcome.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point."""
    args = build_parser().parse_args(argv)
    settings = get_settings()
    setup_logging(settings.LOG_LEVEL, settings.log_file, settings.LOG_JSON)

    handlers = {"run": _run, "sweep": _sweep, "eval": _eval}
    try:
        return handlers[args.command](args)
    except DesignError as e:
        code = exit_code_for(e)
        logger.error("cli.failed", command=args.command, error=str(e), exit_code=code)
        print(f"error: {e}", file=sys.stderr)
        return code
    except Exception as e:
        logger.exception("cli.unexpected", command=args.command)
        print(f"unexpected error: {e}", file=sys.stderr)
        return exit_code_for(e)


if __name__ == "__main__":
    sys.exit(main())
