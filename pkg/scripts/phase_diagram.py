"""Sweep (m1, m2) on a small grid and write the predicted-vs-observed table.

Example:
    python scripts/phase_diagram.py configs/sweep_line.ini --grid m1=0.5:16:5,m2=0.5:16:5
"""
import argparse
import os
import sys

from chemotax.cli import parse_grid, sweep
from chemotax.config import load_config


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("config")
    ap.add_argument("--grid", default="m1=0.5:16:5,m2=0.5:16:5")
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="phase_diagram.csv")
    args = ap.parse_args(argv)
    text = sweep(load_config(args.config), parse_grid(args.grid), args.jobs, args.seed)
    with open(args.out, "w") as fh:
        fh.write(text)
    print(text, end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
