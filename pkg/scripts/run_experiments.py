"""Depth sweeps of all applicable methods on the builtin problems, written as CSV tables.

Each table has the sweep columns (depth, method, ivp, width, wall_ms, bound,
order) and supports width vs depth, time vs depth, and width vs time plots.
"""

import argparse
import sys
from pathlib import Path

from eulerdom.cli import main as cli

DEFAULTS = {"A": "e1,e2,rk", "B": "e1,e2,rk", "C": "e1,e2", "D": "e1,e2"}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ivps", default="ABCD")
    ap.add_argument("--from", dest="lo", type=int, default=2)
    ap.add_argument("--to", dest="hi", type=int, default=14)
    ap.add_argument("--bits", type=int, default=128)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    args = ap.parse_args()

    args.outdir.mkdir(parents=True, exist_ok=True)
    for ivp in args.ivps:
        out = args.outdir / f"compare_{ivp}.csv"
        argv = ["compare", "--ivp", ivp, "--methods", DEFAULTS[ivp], "--from", str(args.lo), "--to", str(args.hi),
                "--bits", str(args.bits), "--jobs", str(args.jobs), "--out", str(out)]
        code = cli(argv)
        if code:
            return code
        print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
