"""Ensemble experiments shared by the scripts and the acceptance suite.

Each function runs trajectories serially in-process through
:func:`qamipt.runner.run_unit`, so results are the same numbers the CLI
writes for an equivalent config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import analysis, dp
from .analysis import Series
from .circuit import CircuitSpec, Model
from .config import ExperimentConfig
from .runner import AXIS_OF, run_unit

Z_DP = dp.DP.z


def ensemble(cfg: ExperimentConfig, L: int, p: float, first: int = 0) -> dict[str, Series]:
    """All observables of ``cfg`` at one ``(L, p)`` as :class:`Series`
    carrying per-trajectory samples."""
    d = cfg.to_dict()
    xs: dict[str, np.ndarray] = {}
    per: dict[str, list] = {}
    for k in range(first, first + cfg.ensemble):
        for name, (x, v) in run_unit((d, L, p, k)).items():
            xs[name] = x
            per.setdefault(name, []).append(v)
    meta = {"model": cfg.model, "L": L, "p": p, "seed": cfg.master_seed}
    return {name: Series.from_samples(AXIS_OF[name], xs[name], np.vstack(v), meta) for name, v in per.items()}


def saturation_time(L: int, z: float, factor: float = 2.0) -> int:
    return int(math.ceil(factor * L**z))


# --------------------------------------------------------------------------
# purification


def purification(model: str, L: int, p: float, T: int, trajectories: int, seed: int = 0) -> Series:
    """Mean entropy of the whole system coupled to its reference."""
    cfg = ExperimentConfig(model, [L], [p], T, trajectories, ["purification"], master_seed=seed)
    return ensemble(cfg, L, p)["purification"]


def decay_window(s: Series, t_min: float = 20.0, n_sigma: float = 3.0) -> tuple[float, float]:
    """From ``t_min`` to the last time the mean is resolved from zero by
    ``n_sigma`` standard errors."""
    ok = (s.x >= t_min) & (s.mean > n_sigma * s.stderr) & (s.mean > 0)
    if not ok.any():
        raise analysis.FitError("no resolved points")
    return float(t_min), float(s.x[ok][-1])


@dataclass
class PurificationStudy:
    curves: dict[int, Series]
    fits: dict[int, analysis.FitResult | None]
    collapse: analysis.CollapseResult


def purification_study(
    model: str,
    L_trajectories: Mapping[int, int],
    p: float,
    *,
    z_T: float = Z_DP,
    T_factor: float = 3.0,
    window: tuple[float, float] | None = None,
    seed: int = 0,
) -> PurificationStudy:
    """Purification curves for several ``L``, a power-law fit per ``L`` and
    a time-form collapse.  ``T = T_factor * L**z_T``; the default fit window
    runs from 100 to half the saturation scale ``L**z_T``."""
    curves, fits = {}, {}
    for L, n in sorted(L_trajectories.items()):
        s = purification(model, L, p, saturation_time(L, z_T, T_factor), n, seed)
        curves[L] = s
        w = window or (100.0, 0.5 * L**z_T)
        try:
            fits[L] = analysis.fit_power_law(s.select(s.mean > 0), w)
        except analysis.FitError:
            fits[L] = None  # too few resolved points in the window
    pos_curves = {L: s.select((s.mean > 0) & (s.x > 0)) for L, s in curves.items()}
    col = analysis.collapse(pos_curves, "time", (0.5, 2.5), reference=(Z_DP, 1.0))
    return PurificationStudy(curves, fits, col)


# --------------------------------------------------------------------------
# entanglement at criticality


@dataclass
class AlphaStudy:
    profiles: dict[int, Series]
    growth: Series
    alpha2: dict[int, analysis.FitResult]
    alpha1: analysis.FitResult
    L_growth: int

    @property
    def ratio(self) -> float:
        return self.alpha2[self.L_growth].slope / self.alpha1.slope

    @property
    def ratio_stderr(self) -> float:
        a2, a1 = self.alpha2[self.L_growth], self.alpha1
        return abs(self.ratio) * math.hypot(a2.stderr / a2.slope, a1.stderr / a1.slope)


def alpha_study(
    model: str,
    L_trajectories: Mapping[int, int],
    p: float,
    *,
    z_T: float = Z_DP,
    T_factor: float = 2.0,
    la_min: int = 4,
    t_window: tuple[float, float] | None = None,
    seed: int = 0,
) -> AlphaStudy:
    """Steady-state profile slope ``alpha2`` (``S`` against log chord) per
    ``L`` and growth slope ``alpha1`` (half-system ``S`` against ``log t``)
    at the largest ``L``.

    The growth window defaults to ``[10, L**z_T / 10]``, well before
    saturation."""
    profiles, alpha2 = {}, {}
    growth = None
    L_max = max(L_trajectories)
    for L, n in sorted(L_trajectories.items()):
        obs = ["entropy_t", "entropy_LA"] if L == L_max else ["entropy_LA"]
        cfg = ExperimentConfig(model, [L], [p], saturation_time(L, z_T, T_factor), n, obs, master_seed=seed)
        res = ensemble(cfg, L, p)
        profiles[L] = res["entropy_LA"]
        alpha2[L] = analysis.fit_log_slope(res["entropy_LA"], (la_min, L / 2), chord_L=L)
        if L == L_max:
            growth = res["entropy_t"]
    w = t_window or (10.0, L_max**z_T / 10)
    alpha1 = analysis.fit_log_slope(growth, w)
    return AlphaStudy(profiles, growth, alpha2, alpha1, L_max)


# --------------------------------------------------------------------------
# mutual information across the transition


@dataclass
class MIScan:
    series: Series
    peak: float
    samples: dict[float, np.ndarray] = field(default_factory=dict)


def mutual_info_scan(
    model: str,
    L: int,
    p_grid: Sequence[float],
    trajectories: int,
    *,
    size: int | None = None,
    T: int | None = None,
    seed: int = 0,
) -> MIScan:
    """Antipodal mutual information against ``p`` and its peak."""
    T = T or saturation_time(L, Z_DP)
    means, ses, ns, raw = [], [], [], {}
    for p in p_grid:
        cfg = ExperimentConfig(model, [L], [p], T, trajectories, ["mutual_info"], mi_size=size, master_seed=seed)
        s = ensemble(cfg, L, p)["mutual_info"]
        means.append(s.mean[0])
        ses.append(s.stderr[0])
        ns.append(s.n[0])
        raw[p] = s.samples[:, 0]
    series = Series("measurement-rate", list(p_grid), means, ses, ns, {"model": model, "L": L})
    return MIScan(series, analysis.peak_location(series.x, series.mean), raw)


# --------------------------------------------------------------------------
# classical bit-string exponents


def hamming(model: str, L: int, p: float, T: int, trials: int, *, init: str = "random-pair",
            boundary: str = "open", seed: int = 0) -> Series:
    spec = CircuitSpec(Model(model), L, T, p, boundary, seed)
    D = dp.hamming_ensemble(spec, trials, init)
    ts = dp.log_times(T)
    meta = {"model": model, "L": L, "p": p, "seed": seed}
    return Series.from_samples("time", ts, D[:, ts], meta)


def mi_cross_ratio(
    model: str,
    L: int,
    p: float,
    trajectories: int,
    *,
    size: int,
    separations: Sequence[int],
    T: int | None = None,
    seed: int = 0,
) -> tuple[Series, analysis.FitResult | None]:
    """Mutual information of two size-``size`` intervals, whose left ends are
    ``r`` apart, against their cross ratio, sampled over the steady state and translations; the power-law
    slope is the exponent ``Delta`` of ``I ~ eta**Delta``."""
    from .runner import _starts, _steady_times
    from .stabilizer import run_trajectory

    if any(not size < r <= L - size for r in separations):
        raise ValueError("separations must lie in (size, L - size]")
    T = T or saturation_time(L, Z_DP)
    steady = set(_steady_times(T).tolist())
    per_traj = []
    for k in range(trajectories):
        acc = np.zeros(len(separations))
        count = [0]

        def observer(tab, t):
            if t not in steady:
                return None
            for s in _starts(L):
                A = (s + np.arange(size)) % L
                for j, r in enumerate(separations):
                    acc[j] += tab.mutual_information(A, (s + r + np.arange(size)) % L)
            count[0] += 1
            return None

        spec = CircuitSpec(Model(model), L, T, p, "periodic", seed, k)
        run_trajectory(spec, (), sorted(steady), observer)
        per_traj.append(acc / (count[0] * len(_starts(L))))
    etas = np.array([analysis.cross_ratio(0, size, r, r + size, L) for r in separations])
    order = np.argsort(etas)
    s = Series.from_samples("cross-ratio", etas[order], np.array(per_traj)[:, order], {"model": model, "L": L, "p": p})
    pos = s.select(s.mean > 0)
    try:
        fit = analysis.fit_power_law(pos)
    except analysis.FitError:
        fit = None
    return s, fit
