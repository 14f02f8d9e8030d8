#!/usr/bin/env python
"""
Run script for epsilon-kit.
Runs one or more scenario files, or the whole bundled fixture suite, and
writes report.csv and SVG figures.
"""

import argparse
import os
import sys
from pathlib import Path

import pandas as pd


def check_dependencies():
    """Check if all required dependencies are installed."""
    try:
        import numpy
        import scipy
        import pandas
        import networkx
        import matplotlib
        import sklearn
        return True
    except ImportError as e:
        print(f"Missing dependency: {str(e)}")
        print("Please run setup.py first to install all required dependencies.")
        return False


def build_parser():
    parser = argparse.ArgumentParser(description="Compute and check eps-subdifferentials, conjugates and value functions.")
    parser.add_argument("--window", type=float, help="Window radius R (EPSKIT_WINDOW)")
    parser.add_argument("--set-tol", type=float, help="Set equality tolerance (EPSKIT_SET_TOL)")
    parser.add_argument("--eta-ladder", type=str, help="Comma separated eta values (EPSKIT_ETA_LADDER)")
    parser.add_argument("--gamma-splits", type=int, help="Samples of each split of gamma (EPSKIT_GAMMA_SPLITS)")
    parser.add_argument("--dirs", type=int, help="Support directions in 2D and 3D (EPSKIT_DIRS)")
    parser.add_argument("--out-dir", type=str, help="Report directory (EPSKIT_OUT_DIR)")
    parser.add_argument("--format", choices=["csv", "svg", "both"], help="Report format (EPSKIT_FORMAT)")
    parser.add_argument("--no-timing", action="store_true", help="Leave the millis column empty for byte-identical reports")

    sub = parser.add_subparsers(dest="command")
    scenario = sub.add_parser("scenario", help="Run scenario files")
    scenario.add_argument("paths", nargs="+", type=Path)
    suite = sub.add_parser("suite", help="Run every bundled fixture")
    suite.add_argument("--fixtures", type=Path, default=None, help="Fixture directory")
    return parser


def cli_overrides(args):
    return {
        "window_radius": args.window,
        "set_tol": args.set_tol,
        "eta_ladder": args.eta_ladder,
        "gamma_splits": args.gamma_splits,
        "support_dirs": args.dirs,
    }


def main(argv=None):
    """Main run function."""
    args = build_parser().parse_args(argv)

    print("=" * 60)
    print("epsilon-kit")
    print("=" * 60)

    if not check_dependencies():
        return 2

    from app_config import configure_logging, load_output_settings
    from src.cli import REPORT_COLUMNS, exit_code, run_suite
    from src.data_loader import ScenarioLoader
    from src.errors import EpsKitError

    configure_logging()
    try:
        output = load_output_settings(args.out_dir, args.format)
        if args.command == "scenario":
            paths = args.paths
        else:
            fixtures = getattr(args, "fixtures", None)
            paths = ScenarioLoader.fixture_paths(fixtures) if fixtures else None
        table, _ = run_suite(paths, cli_overrides(args), os.environ, output, timing=not args.no_timing)
    except EpsKitError as e:
        print(f"Error: {e}")
        return 2

    with pd.option_context("display.max_rows", None, "display.width", 160):
        print(table[REPORT_COLUMNS + ["ref", "description"]].to_string(index=False))
    print("-" * 60)
    passed = int(table["pass"].sum())
    print(f"{passed}/{len(table)} scenarios passed")
    if output.wants_csv:
        print(f"Report written to {Path(output.out_dir) / 'report.csv'}")
    return exit_code(table)


if __name__ == "__main__":
    sys.exit(main())
