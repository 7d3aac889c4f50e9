"""Locate the critical point of a bit-string family from the curvature of
the mean Hamming distance in log-log coordinates.

    python scripts/scan_pc.py --model QA_PURIFICATION --p 0.131 0.134 0.137 0.140 0.143
    python scripts/scan_pc.py --model QA_NONCLIFFORD --p 0.045 0.049 0.053 0.057 0.061
"""

import argparse
from pathlib import Path

from qamipt import analysis, dp


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="QA_PURIFICATION")
    ap.add_argument("--p", type=float, nargs="+", required=True)
    ap.add_argument("--L", type=int, nargs="+", default=[512])
    ap.add_argument("--T", type=int, default=30_000, help="fit window is [100, T/10]")
    ap.add_argument("--trials", type=int, default=600)
    ap.add_argument("--boundary", default="open")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="out/pc")
    args = ap.parse_args()

    cp = dp.scan_critical_point(args.model, args.p, args.L, args.T, args.trials,
                                boundary=args.boundary, master_seed=args.seed)
    report = {"p_c": cp.p_c, "ci": cp.ci, "window": cp.window, "p_grid": cp.p_grid, "curvature": cp.curvature}
    report.update({f"L{L}.p_c": v for L, v in cp.per_L.items()})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_report(out / f"pc_{args.model}.txt", report)
    for k, v in report.items():
        print(f"{k}={analysis._fmt(v)}")


if __name__ == "__main__":
    main()
