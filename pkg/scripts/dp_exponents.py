"""Bit-string difference dynamics at a critical point: density decay and
single-seed growth exponents, plus the bond-DP reference.

    python scripts/dp_exponents.py --p 0.137 --L 512 --T 10000 --trials 2000
"""

import argparse
from pathlib import Path

import numpy as np

from qamipt import analysis, dp, experiments


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="QA_PURIFICATION")
    ap.add_argument("--p", type=float, default=0.137)
    ap.add_argument("--L", type=int, default=512)
    ap.add_argument("--T", type=int, default=10_000)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed-trials", type=int, default=8000)
    ap.add_argument("--window", type=float, nargs=2, default=[100, 1000])
    ap.add_argument("--seed-window", type=float, nargs=2, default=[10, 1000])
    ap.add_argument("--bond-p", type=float, default=0.3553)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/dp")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    decay = experiments.hamming(args.model, args.L, args.p, args.T, args.trials, seed=args.seed)
    growth = experiments.hamming(args.model, args.L, args.p, args.T, args.seed_trials,
                                 init="single-difference", seed=args.seed + 1)
    analysis.write_csv(out / "hamming.csv", analysis.series_rows(decay) + analysis.series_rows(growth, "single-difference"))
    f_decay = analysis.fit_power_law(decay, tuple(args.window))
    f_growth = analysis.fit_power_law(growth, tuple(args.seed_window))

    lat = dp.BondDPLattice(args.bond_p, args.L, 2000, "fully-occupied")
    N = dp.bond_dp_ensemble(lat, 200, args.seed)
    ts = dp.log_times(2000)
    bond = analysis.fit_power_law(analysis.Series.from_samples("time", ts, N[:, ts] / args.L), (100, 1000))

    report = {
        "decay.exponent": f_decay.slope, "decay.stderr": f_decay.stderr,
        "theta": f_growth.slope, "theta.stderr": f_growth.stderr,
        "bond_dp.exponent": bond.slope, "bond_dp.stderr": bond.stderr,
        "reference.decay": -dp.DP.beta_over_nu_par, "reference.theta": dp.DP.theta,
    }
    analysis.write_report(out / "dp.txt", report)
    for k, v in report.items():
        print(f"{k}={analysis._fmt(v)}")


if __name__ == "__main__":
    np.seterr(divide="ignore")
    main()
