"""Tune the full operating grid and write the shipped lookup table.

    python scripts/build_table.py [--out data/ampc_table.json] [--seed 0]

Runs at the configured PSO budget (15 generations x 20 particles per grid
point), which takes the better part of an hour on one core.
"""
import argparse
import sys
from pathlib import Path

from ampc.cli import main

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(ROOT / "data/ampc_table.json"))
    parser.add_argument("--grid", default=str(ROOT / "configs/grid.yaml"))
    parser.add_argument("--config", default=str(ROOT / "configs/default.yaml"))
    parser.add_argument("--seed", default="0")
    args = parser.parse_args()
    sys.exit(main(["tune", "--grid", args.grid, "--config", args.config, "--seed", args.seed, "--out", args.out]))
