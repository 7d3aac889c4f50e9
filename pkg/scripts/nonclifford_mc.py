"""Non-Clifford automaton circuits: replica Monte Carlo entropies against
the dense oracle on small systems, then S2(t) on a larger one.

    python scripts/nonclifford_mc.py --L-small 10 --circuits 20 --L 24 --T 40
"""

import argparse
from pathlib import Path

import numpy as np

from qamipt import analysis, automaton_mc as mc, oracle, rng as streams
from qamipt.circuit import CircuitSpec, Model, generate_circuit


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=float, default=0.1)
    ap.add_argument("--L-small", type=int, default=10)
    ap.add_argument("--circuits", type=int, default=20)
    ap.add_argument("--L", type=int, default=24)
    ap.add_argument("--T", type=int, default=40)
    ap.add_argument("--samples", type=int, default=20_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/mc")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    z = []
    for k in range(args.circuits):
        c = generate_circuit(CircuitSpec(Model.QA_NONCLIFFORD, args.L_small, 20, args.p, "periodic", args.seed, k))
        exact = oracle.renyi2_exact(oracle.run_circuit(c), range(args.L_small // 2))
        gen = streams.seed_for(args.seed, k, streams.SAMPLES)
        s2, se, _ = mc.estimate_renyi2(c, range(args.L_small // 2), args.samples, gen)
        z.append((s2 - exact) / se if se > 0 else 0.0)
        print(f"circuit {k}: exact {exact:.4f} mc {s2:.4f} +- {se:.4f}")
    print(f"max |z| = {np.max(np.abs(z)):.2f}")

    c = generate_circuit(CircuitSpec(Model.QA_NONCLIFFORD, args.L, args.T, args.p, "periodic", args.seed))
    gen = streams.seed_for(args.seed, 0, streams.SAMPLES)
    ts = np.unique(np.round(np.logspace(0, np.log10(args.T), 8)).astype(int))
    vals = []
    for t in ts:
        try:
            s2, se, _ = mc.estimate_renyi2(mc.truncate(c, int(t)), range(args.L // 2), args.samples, gen)
        except mc.UnresolvableEntropyError:
            s2, se = np.nan, np.nan
        vals.append((t, s2, se))
        print(f"t={t} S2={s2:.4f} +- {se:.4f}")
    ok = [v for v in vals if np.isfinite(v[1])]
    s = analysis.Series("time", [v[0] for v in ok], [v[1] for v in ok], [v[2] for v in ok], 1,
                        {"model": Model.QA_NONCLIFFORD.value, "L": args.L, "p": args.p, "seed": args.seed})
    analysis.write_csv(out / "s2_t.csv", analysis.series_rows(s))


if __name__ == "__main__":
    main()
