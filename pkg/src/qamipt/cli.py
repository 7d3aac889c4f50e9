"""Command line entry point.

Exit codes: 0 success, 2 configuration or output error, 3 unresolvable MC
estimate (rows are still written, flagged), 4 cross-check or replay
mismatch.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, crosscheck, runner
from .config import ConfigError, load_config

EXIT_OK, EXIT_CONFIG, EXIT_UNRESOLVED, EXIT_MISMATCH = 0, 2, 3, 4


def _load(args):
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out = args.out
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    cfg = _load(args)
    res = runner.run(cfg, cfg.out, workers=cfg.workers, overwrite=args.overwrite)
    for f in res.files:
        print(f)
    if res.unresolved:
        print(f"{res.unresolved} rows flagged unresolvable", file=sys.stderr)
        return EXIT_UNRESOLVED
    return EXIT_OK


def cmd_scan_pc(args) -> int:
    cfg = _load(args)
    cp, _ = runner.scan_pc(cfg, cfg.out, overwrite=args.overwrite)
    print(f"p_c={cp.p_c!r}")
    print(f"ci={cp.ci[0]!r},{cp.ci[1]!r}")
    return EXIT_OK


def _series_from_csv(path, L=None, p=None) -> dict[tuple[int, float], analysis.Series]:
    groups: dict[tuple[int, float], list] = {}
    for row in analysis.read_csv(path):
        key = (int(row["L"]), float(row["p"]))
        if (L is None or key[0] == L) and (p is None or key[1] == p):
            groups.setdefault(key, []).append(row)
    out = {}
    for key, rows in groups.items():
        rows.sort(key=lambda r: float(r["x"]))
        out[key] = analysis.Series(
            rows[0]["axis"],
            [float(r["x"]) for r in rows],
            [float(r["mean"]) for r in rows],
            [float(r["stderr"]) for r in rows],
            [int(r["n"]) for r in rows],
            {"model": rows[0]["model"], "L": key[0], "p": key[1]},
        )
    return out


def _window(text):
    if not text:
        return None
    lo, hi = (float(v) for v in text.split(","))
    return lo, hi


def cmd_fit(args) -> int:
    found = _series_from_csv(args.input, args.L, args.p)
    if not found:
        raise ConfigError("no matching rows in input")
    report = {}
    for (L, p), s in sorted(found.items()):
        s = s.select(np.isfinite(s.mean))
        if args.kind == "power":
            s = s.select((s.mean > 0) & (s.x > 0))
            r = analysis.fit_power_law(s, _window(args.window))
        elif args.kind == "exp":
            s = s.select(s.mean > 0)
            r = analysis.fit_exponential(s, _window(args.window))
        else:
            r = analysis.fit_log_slope(s, _window(args.window), chord_L=L if args.chord else None)
        tag = f"L{L}_p{p!r}"
        report.update({
            f"{tag}.slope": r.slope, f"{tag}.stderr": r.stderr, f"{tag}.window": r.window,
            f"{tag}.residual": r.residual, f"{tag}.r2": r.r2, f"{tag}.flagged": r.flagged,
        })
    _emit(report, args.out, "fit.txt")
    return EXIT_OK


def cmd_collapse(args) -> int:
    found = _series_from_csv(args.input, p=args.p)
    curves = {}
    for (L, _), s in found.items():
        keep = np.isfinite(s.mean) & ((s.x > 0) if args.form == "time" else True)
        curves[L] = s.select(keep)
    res = analysis.collapse(curves, args.form, _window(args.search) or (0.5, 2.5), p_c=args.p_c)
    report = {"form": res.form, "exponent": res.exponent, "objective": res.objective}
    for e, v in res.reference.items():
        report[f"objective_at_{e!r}"] = v
    _emit(report, args.out, "collapse.txt")
    return EXIT_OK


def cmd_crosscheck(args) -> int:
    L, n = 8, 20
    seed = args.seed if args.seed is not None else 0
    if args.config:
        cfg = _load(args)
        L, n, seed = cfg.L[0], cfg.ensemble, cfg.master_seed
    rep = crosscheck.run_all(L=L, circuits=n, master_seed=seed)
    _emit(rep.as_dict(), args.out, "crosscheck.txt")
    return EXIT_OK if rep.ok else EXIT_MISMATCH


def cmd_replay(args) -> int:
    out = args.out or str(Path(args.manifest).parent / "replay")
    ok, diff = runner.replay(args.manifest, out, workers=args.workers, overwrite=args.overwrite)
    for name, (a, b) in diff.items():
        print(f"mismatch {name}: {a} != {b}")
    print("identical" if ok else "differs")
    return EXIT_OK if ok else EXIT_MISMATCH


def _emit(report: dict, out, name: str) -> None:
    for k, v in report.items():
        print(f"{k}={analysis._fmt(v)}")
    if out:
        Path(out).mkdir(parents=True, exist_ok=True)
        analysis.write_report(Path(out) / name, report)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qamipt", description="hybrid automaton circuit simulations")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value experiment file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--overwrite", action="store_true", help="replace an existing run")

    for name, fn in (("run", cmd_run), ("scan-pc", cmd_scan_pc), ("crosscheck", cmd_crosscheck)):
        p = sub.add_parser(name)
        common(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("fit")
    common(p)
    p.add_argument("--input", required=True, help="CSV written by run")
    p.add_argument("--kind", choices=("power", "exp", "log"), default="power")
    p.add_argument("--window", help="lo,hi")
    p.add_argument("--chord", action="store_true", help="log-fit against the chord coordinate")
    p.add_argument("--L", type=int)
    p.add_argument("--p", type=float)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("collapse")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--form", choices=("time", "rate"), default="time")
    p.add_argument("--search", help="lo,hi exponent range")
    p.add_argument("--p", type=float, help="select one p from the CSV (time form)")
    p.add_argument("--p-c", type=float, dest="p_c", help="critical point (rate form)")
    p.set_defaults(fn=cmd_collapse)

    p = sub.add_parser("replay")
    common(p)
    p.add_argument("manifest")
    p.set_defaults(fn=cmd_replay)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.time()
    try:
        code = args.fn(args)
    except (ConfigError, runner.OutputError, analysis.FitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"# {args.command} finished in {time.time() - t0:.1f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
