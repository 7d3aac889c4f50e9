"""Non-automaton Clifford contrast: purification collapse and entanglement
slopes, expected to scale with z = 1.

    python scripts/nonqa_contrast.py --p 0.178
"""

import argparse
from pathlib import Path

from qamipt import analysis, experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=0.178)
    ap.add_argument("--L", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--traj", type=int, nargs="+", default=[60, 40, 20])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/nonqa")
    args = ap.parse_args()

    sizes = dict(zip(args.L, args.traj))
    pur = experiments.purification_study("NONQA_PURIFICATION", sizes, args.p, z_T=1.0, T_factor=4.0,
                                         window=(10, min(args.L) / 2), seed=args.seed)
    alpha = experiments.alpha_study("NONQA_CLIFFORD", sizes, args.p, z_T=1.0, T_factor=4.0, seed=args.seed)
    report = {"collapse.z": pur.collapse.exponent}
    report.update({f"collapse.objective_at_{z!r}": v for z, v in pur.collapse.reference.items()})
    report.update({f"L{L}.alpha2": f.slope for L, f in alpha.alpha2.items()})
    report.update({"alpha1": alpha.alpha1.slope, "ratio": alpha.ratio, "ratio.stderr": alpha.ratio_stderr})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    analysis.write_report(out / "nonqa.txt", report)
    for k, v in report.items():
        print(f"{k}={analysis._fmt(v)}")


if __name__ == "__main__":
    main()
