"""Steady-state entanglement profile and entanglement growth at a critical point.

Reports alpha2 (S against log chord of L_A) per L, alpha1 (S against log t at
the largest L) and their ratio.

    python scripts/entanglement_alpha.py --p 0.137 --L 128 256 512 --traj 20 12 6
"""

import argparse
from pathlib import Path

from qamipt import analysis, experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="QA_CLIFFORD_ENTANGLEMENT")
    ap.add_argument("--p", type=float, default=0.137)
    ap.add_argument("--L", type=int, nargs="+", default=[128, 256, 512])
    ap.add_argument("--traj", type=int, nargs="+", default=[20, 12, 6])
    ap.add_argument("--z-T", type=float, default=experiments.Z_DP, help="T = 2 L**z_T")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/alpha")
    args = ap.parse_args()

    st = experiments.alpha_study(args.model, dict(zip(args.L, args.traj)), args.p, z_T=args.z_T, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [r for s in st.profiles.values() for r in analysis.series_rows(s)]
    analysis.write_csv(out / "entropy_LA.csv", rows)
    analysis.write_csv(out / "entropy_t.csv", analysis.series_rows(st.growth))
    report = {f"L{L}.alpha2": f.slope for L, f in st.alpha2.items()}
    report.update({f"L{L}.r2": f.r2 for L, f in st.alpha2.items()})
    report.update({"alpha1": st.alpha1.slope, "alpha1.window": st.alpha1.window,
                   "ratio": st.ratio, "ratio.stderr": st.ratio_stderr})
    analysis.write_report(out / "alpha.txt", report)
    for k, v in report.items():
        print(f"{k}={analysis._fmt(v)}")


if __name__ == "__main__":
    main()
