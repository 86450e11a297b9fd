"""Run the default seven-model battery at full scale and write reports.

Usage:
    python scripts/run_default_battery.py [--seed N] [--reps N] [--out DIR]
"""
import argparse
import sys

from cfslab.cli import main as cli_main


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=2026)
    parser.add_argument("--reps", type=int, default=100_000)
    parser.add_argument("--workers", type=int, default=8)
    parser.add_argument("--out", default=".")
    args = parser.parse_args()
    return cli_main([
        "battery",
        "--seed", str(args.seed),
        "--reps", str(args.reps),
        "--workers", str(args.workers),
        "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
