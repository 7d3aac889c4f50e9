"""Ensemble runner: trajectories in a fixed-size worker pool, merged in
trajectory order, written as CSV plus a manifest written last."""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__, analysis, dp
from . import automaton_mc as mc
from . import rng as streams
from .circuit import Boundary, CircuitSpec, Model, generate_circuit
from .config import ConfigError, ExperimentConfig
from .stabilizer import _contiguous_profile, default_sample_times, run_trajectory

MANIFEST = "manifest.json"
N_STARTS = 8  # region translations averaged per steady-state sample
N_STEADY = 20  # steady-state sample times per trajectory

AXIS_OF = {
    "entropy_t": "time",
    "purification": "time",
    "hamming": "time",
    "front": "time",
    "bond_dp": "time",
    "p_same": "time",
    "entropy_LA": "subsystem-size",
    "mutual_info": "measurement-rate",
}


class OutputError(RuntimeError):
    pass


@dataclass
class RunResult:
    manifest: dict
    files: list[Path]
    unresolved: int  # rows flagged as unresolvable MC estimates


# --------------------------------------------------------------------------
# single trajectory


def _steady_times(T: int) -> np.ndarray:
    lo = T - T // 4
    return np.unique(np.linspace(lo, T, N_STEADY).round().astype(int))


def _starts(L: int) -> np.ndarray:
    return np.unique((np.arange(N_STARTS) * L) // N_STARTS)


def _antipodal(L: int, k: int, s: int) -> tuple[np.ndarray, np.ndarray]:
    A = (s + np.arange(k)) % L
    B = (s + L // 2 + np.arange(k)) % L
    return A, B


def _stabilizer_unit(cfg: ExperimentConfig, spec: CircuitSpec) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    L, T = spec.L, spec.T
    obs = set(cfg.observables)
    out: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    probes = []
    series_times = default_sample_times(T)
    if "entropy_t" in obs:
        probes.append(cfg.region_A if cfg.region_A is not None else list(range(L // 2)))
    if "purification" in obs:
        probes.append(list(range(L)))
    steady = _steady_times(T) if obs & {"entropy_LA", "mutual_info"} else np.zeros(0, dtype=int)
    steady_set = set(steady.tolist())
    k = cfg.mi_size or max(L // 8, 1)
    starts = _starts(L)
    profiles, mis = [], []

    def observer(tab, t):
        if t not in steady_set:
            return None
        if "entropy_LA" in obs:
            prof = np.mean([_contiguous_profile(tab.xs, tab.zs, int(s), L // 2) for s in starts], axis=0)
            profiles.append(prof)
        if "mutual_info" in obs:
            vals = []
            for s in starts:
                A, B = _antipodal(L, k, int(s))
                vals.append(tab.mutual_information(A, B))
            mis.append(float(np.mean(vals)))
        return None

    times = np.union1d(series_times, steady) if probes else steady
    only_pur = obs == {"purification"}
    res = run_trajectory(spec, probes, times, observer, stop_when_pure=only_pur)
    sel = np.isin(res.times, series_times)
    j = 0
    if "entropy_t" in obs:
        out["entropy_t"] = (res.times[sel], res.entropy[sel, j].astype(float))
        j += 1
    if "purification" in obs:
        out["purification"] = (res.times[sel], res.entropy[sel, j].astype(float))
    if "entropy_LA" in obs:
        out["entropy_LA"] = (np.arange(1, L // 2 + 1), np.mean(profiles, axis=0))
    if "mutual_info" in obs:
        out["mutual_info"] = (np.array([spec.p]), np.array([np.mean(mis)]))
    return out


def _mc_times(T: int, n: int) -> np.ndarray:
    if T == 0:
        return np.array([0])
    return np.unique(np.concatenate([[0], np.round(np.logspace(0, math.log10(T), n)).astype(int)]))


def _mc_s2(c, region, cfg, rng) -> float:
    try:
        return mc.estimate_renyi2(c, region, cfg.mc_samples, rng, max_samples=cfg.mc_max_samples)[0]
    except mc.UnresolvableEntropyError:
        return math.nan


def _mc_unit(cfg: ExperimentConfig, spec: CircuitSpec) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    L = spec.L
    c = generate_circuit(spec)
    rng = streams.seed_for(spec.master_seed, spec.trajectory_index, streams.SAMPLES)
    out = {}
    obs = cfg.observables
    if "entropy_t" in obs or "purification" in obs:
        ts = _mc_times(spec.T, cfg.mc_times)
        for name in ("entropy_t", "purification"):
            if name not in obs:
                continue
            region = list(range(L)) if name == "purification" else (cfg.region_A if cfg.region_A is not None else list(range(L // 2)))
            out[name] = (ts, np.array([_mc_s2(mc.truncate(c, int(t)), region, cfg, rng) for t in ts]))
    if "entropy_LA" in obs:
        las = np.arange(1, L // 2 + 1)
        out["entropy_LA"] = (las, np.array([_mc_s2(c, range(la), cfg, rng) for la in las]))
    if "mutual_info" in obs:
        A, B = _antipodal(L, cfg.mi_size or max(L // 8, 1), 0)
        sa, sb = _mc_s2(c, A, cfg, rng), _mc_s2(c, B, cfg, rng)
        sab = _mc_s2(c, np.concatenate([A, B]), cfg, rng)
        out["mutual_info"] = (np.array([spec.p]), np.array([sa + sb - sab]))
    return out


def _classical_unit(cfg: ExperimentConfig, spec: CircuitSpec) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    ts = default_sample_times(spec.T)
    out = {}
    if cfg.model == "bond_dp":
        init = "single-seed" if cfg.init == "single-seed" else "fully-occupied"
        lat = dp.BondDPLattice(spec.p, spec.L, spec.T, init, spec.boundary)
        N = dp.run_bond_dp(lat, streams.seed_for(spec.master_seed, spec.trajectory_index, streams.GATES))
        out["bond_dp"] = (ts, N[ts].astype(float))
        return out
    if "hamming" in cfg.observables:
        out["hamming"] = (ts, dp.evolve_pair(spec, cfg.init).D[ts].astype(float))
    if "front" in cfg.observables:
        out["front"] = (ts, dp.evolve_pair(spec, "single-difference").D[ts].astype(float))
    if "p_same" in cfg.observables:
        out["p_same"] = (ts, (dp.evolve_pair(spec, "random-pair").D[ts] == 0).astype(float))
    return out


def run_unit(task: tuple[dict, int, float, int]) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """One trajectory; top-level so worker processes can import it."""
    cfg_dict, L, p, traj = task
    cfg = ExperimentConfig(**cfg_dict)
    model = Model.QA_PURIFICATION if cfg.model == "bond_dp" else Model(cfg.model)
    if cfg.model == "bond_dp":
        spec = CircuitSpec(model, L, cfg.T, p, Boundary(cfg.boundary), cfg.master_seed, traj)
        return _classical_unit(cfg, spec)
    spec = CircuitSpec(model, L, cfg.T, p, Boundary(cfg.boundary), cfg.master_seed, traj)
    if cfg.engine == "stabilizer":
        return _stabilizer_unit(cfg, spec)
    if cfg.engine == "mc":
        return _mc_unit(cfg, spec)
    if cfg.engine == "classical":
        return _classical_unit(cfg, spec)
    raise ConfigError(f"engine {cfg.engine!r} has no trajectory runner")


# --------------------------------------------------------------------------
# ensemble


def _merge(xs: np.ndarray, per_traj: list[np.ndarray], cfg, L, p, obs) -> tuple[list[list[str]], int]:
    samples = np.vstack(per_traj)
    finite = np.isfinite(samples)
    n = finite.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(n > 0, np.nansum(samples, axis=0) / np.maximum(n, 1), math.nan)
        dev = np.where(finite, samples - mean, 0.0)
        se = np.where(n > 1, np.sqrt(np.sum(dev**2, axis=0) / np.maximum(n - 1, 1) / np.maximum(n, 1)), 0.0)
    flags = np.where(n < samples.shape[0], "unresolvable", "")
    meta = {"model": cfg.model, "L": L, "p": p, "seed": cfg.master_seed}
    rows = []
    for x, m, e, k, f in zip(xs, mean, se, n, flags):
        rows.append([AXIS_OF[obs], repr(float(x)), repr(float(m)), repr(float(e)), str(int(k)),
                     meta["model"], str(L), repr(float(p)), str(cfg.master_seed), f])
    return rows, int((flags != "").sum())


def sha256_of(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def prepare_output(out: str | Path, overwrite: bool) -> Path:
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise OutputError(f"output directory {out} is not writable")
    man = out / MANIFEST
    if man.exists():
        if not overwrite:
            raise OutputError(f"{man} exists; pass --overwrite to replace the run")
        man.unlink()
    return out


def write_manifest(out: Path, cfg: ExperimentConfig, files: list[Path], command: str, started: float, extra: dict | None = None) -> dict:
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg.to_dict(),
        "config_text": cfg.to_text(),
        "seed_rule": streams.SEED_RULE,
        "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(started)),
        "wall_clock_s": round(time.time() - started, 3),
        "files": [{"name": f.name, "sha256": sha256_of(f), "bytes": f.stat().st_size} for f in files],
    }
    if extra:
        manifest.update(extra)
    tmp = out / (MANIFEST + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    os.replace(tmp, out / MANIFEST)
    return manifest


def _map(tasks, workers: int):
    if workers <= 1:
        return map(run_unit, tasks)
    pool = ProcessPoolExecutor(max_workers=workers)
    # results come back in submission order whatever the completion order
    return _closing_map(pool, tasks)


def _closing_map(pool, tasks):
    with pool:
        yield from pool.map(run_unit, tasks, chunksize=1)


def run(cfg: ExperimentConfig, out: str | Path | None = None, *, workers: int | None = None, overwrite: bool = False) -> RunResult:
    """Run every trajectory of every ``(L, p)`` point and write one CSV per
    observable.  Output bytes depend only on the config, never on
    ``workers``."""
    if cfg.engine == "oracle":
        raise ConfigError("the oracle engine runs through crosscheck")
    started = time.time()
    out_dir = prepare_output(out or cfg.out, overwrite)
    workers = workers or cfg.workers
    cfg_dict = cfg.to_dict()
    points = [(L, p) for L in cfg.L for p in cfg.p]
    tasks = [(cfg_dict, L, p, k) for (L, p) in points for k in range(cfg.ensemble)]
    observables = ["bond_dp"] if cfg.model == "bond_dp" else list(cfg.observables)
    rows: dict[str, list] = {o: [] for o in observables}
    unresolved = 0
    results = _map(tasks, workers)
    for L, p in points:
        per: dict[str, list] = {o: [] for o in observables}
        xs = {}
        for _ in range(cfg.ensemble):
            res = next(results)
            for o in observables:
                xs[o] = res[o][0]
                per[o].append(res[o][1])
        for o in observables:
            r, bad = _merge(xs[o], per[o], cfg, L, p, o)
            rows[o].extend(r)
            unresolved += bad
    files = []
    for o in observables:
        path = out_dir / f"{o}.csv"
        analysis.write_csv(path, rows[o])
        files.append(path)
    manifest = write_manifest(out_dir, cfg, files, "run", started, {"unresolved_rows": unresolved})
    return RunResult(manifest, files, unresolved)


def scan_pc(cfg: ExperimentConfig, out: str | Path | None = None, *, overwrite: bool = False) -> tuple[dp.CriticalPoint, RunResult]:
    """Minimal-curvature scan over ``cfg.p`` for the classical order
    parameter of ``cfg.model``."""
    started = time.time()
    out_dir = prepare_output(out or cfg.out, overwrite)
    if cfg.model != "bond_dp" and not Model(cfg.model).automaton:
        raise ConfigError(f"{cfg.model} has no classical order parameter")
    window = tuple(cfg.window) if cfg.window else None
    try:
        cp = dp.scan_critical_point(
            cfg.model, cfg.p, cfg.L, cfg.T, cfg.ensemble,
            boundary=Boundary(cfg.boundary), master_seed=cfg.master_seed, window=window, n_boot=cfg.n_boot,
        )
    except dp.NoStraddleError as exc:
        raise ConfigError(str(exc)) from None
    L = max(cfg.L)
    boot_sd = float(np.nanstd(cp.bootstrap, ddof=1)) if cp.bootstrap is not None else 0.0
    rows = [["measurement-rate", repr(float(p)), repr(float(c)), "0.0", str(cfg.ensemble), cfg.model, str(L), repr(float(p)), str(cfg.master_seed), ""]
            for p, c in zip(cp.p_grid, cp.curvature)]
    csv_path = out_dir / "pc_scan.csv"
    analysis.write_csv(csv_path, rows)
    rep = out_dir / "pc.txt"
    analysis.write_report(rep, {
        "model": cfg.model, "L": L, "p_c": cp.p_c, "ci_low": cp.ci[0], "ci_high": cp.ci[1],
        "bootstrap_sd": boot_sd, "window": cp.window, "per_L": ",".join(f"{k}:{v!r}" for k, v in cp.per_L.items()),
    })
    manifest = write_manifest(out_dir, cfg, [csv_path, rep], "scan-pc", started, {"p_c": cp.p_c, "ci": list(cp.ci)})
    return cp, RunResult(manifest, [csv_path, rep], 0)


def replay(manifest_path: str | Path, out: str | Path, *, workers: int | None = None, overwrite: bool = False) -> tuple[bool, dict]:
    """Re-run a recorded configuration and compare file digests."""
    from .config import parse_config

    man = json.loads(Path(manifest_path).read_text())
    cfg = parse_config(man["config_text"])
    if man["command"] == "scan-pc":
        _, res = scan_pc(cfg, out, overwrite=overwrite)
    elif man["command"] == "run":
        res = run(cfg, out, workers=workers, overwrite=overwrite)
    else:
        raise ConfigError(f"cannot replay command {man['command']!r}")
    old = {f["name"]: f["sha256"] for f in man["files"]}
    new = {f["name"]: f["sha256"] for f in res.manifest["files"]}
    diff = {k: (old.get(k), new.get(k)) for k in sorted(set(old) | set(new)) if old.get(k) != new.get(k)}
    return not diff, diff
