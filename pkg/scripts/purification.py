"""Purification dynamics: S(t) for several L, power-law fits and a time collapse.

    python scripts/purification.py --model QA_PURIFICATION --p 0.137 --L 64 128 256 --traj 60 40 20
"""

import argparse
from pathlib import Path

from qamipt import analysis, experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="QA_PURIFICATION")
    ap.add_argument("--p", type=float, default=0.137)
    ap.add_argument("--L", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--traj", type=int, nargs="+", default=[60, 40, 20])
    ap.add_argument("--z-T", type=float, default=experiments.Z_DP, help="T = 3 L**z_T")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/purification")
    args = ap.parse_args()

    study = experiments.purification_study(args.model, dict(zip(args.L, args.traj)), args.p, z_T=args.z_T, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_csv(out / "purification.csv", [r for s in study.curves.values() for r in analysis.series_rows(s)])
    report = {}
    for L, f in study.fits.items():
        if f is None:
            report[f"L{L}.exponent"] = "unresolved"
            continue
        report[f"L{L}.exponent"] = f.slope
        report[f"L{L}.stderr"] = f.stderr
        report[f"L{L}.window"] = f.window
    report["collapse.z"] = study.collapse.exponent
    for z, v in study.collapse.reference.items():
        report[f"collapse.objective_at_{z!r}"] = v
    analysis.write_report(out / "purification.txt", report)
    for k, v in report.items():
        print(f"{k}={analysis._fmt(v)}")


if __name__ == "__main__":
    main()
