"""Antipodal mutual information against measurement rate and its peak.

    python scripts/mutual_info_scan.py --L 256 --size 32 --traj 8
"""

import argparse
from pathlib import Path

import numpy as np

from qamipt import analysis, experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="QA_CLIFFORD_ENTANGLEMENT")
    ap.add_argument("--L", type=int, default=256)
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--p", type=float, nargs=3, default=[0.09, 0.19, 0.01], metavar=("LO", "HI", "STEP"))
    ap.add_argument("--traj", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/mi")
    args = ap.parse_args()

    lo, hi, step = args.p
    grid = np.round(np.arange(lo, hi + step / 2, step), 10)
    scan = experiments.mutual_info_scan(args.model, args.L, grid, args.traj, size=args.size, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_csv(out / "mutual_info.csv", analysis.series_rows(scan.series))
    analysis.write_report(out / "mi.txt", {"peak": scan.peak})
    for p, m, e in zip(scan.series.x, scan.series.mean, scan.series.stderr):
        print(f"p={p:.3f} I={m:.3f} +- {e:.3f}")
    print(f"peak={scan.peak!r}")


if __name__ == "__main__":
    main()
