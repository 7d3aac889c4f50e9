"""Ensemble statistics, exponent fits, finite-size collapse and
mutual-information geometry."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import isotonic_regression, minimize_scalar

AXES = ("time", "subsystem-size", "measurement-rate", "separation", "cross-ratio")

# RMS log-residual above which a power-law fit is flagged as a poor model
RESIDUAL_THRESHOLD = 0.05


class FitError(ValueError):
    pass


@dataclass
class Series:
    """Ensemble-averaged observable with optional per-trajectory samples.

    ``samples`` has shape ``(n_trajectories, len(x))`` when present and is
    what the bootstrap resamples.
    """

    axis: str
    x: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n: np.ndarray
    metadata: dict = field(default_factory=dict)
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown axis {self.axis!r}")
        self.x = np.asarray(self.x, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        self.n = np.broadcast_to(np.asarray(self.n, dtype=np.int64), self.x.shape).copy()
        if not (self.x.shape == self.mean.shape == self.stderr.shape):
            raise ValueError("x, mean and stderr must have equal length")
        if len(self.x) > 1 and np.any(np.diff(self.x) <= 0):
            raise ValueError("x must be strictly increasing")
        if np.any(self.n < 1):
            raise ValueError("n must be >= 1")
        if np.any(self.stderr < 0):
            raise ValueError("stderr must be nonnegative")

    @classmethod
    def from_samples(cls, axis: str, x, samples, metadata: dict | None = None) -> "Series":
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[None, :]
        k = samples.shape[0]
        mean = samples.mean(axis=0)
        se = samples.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.zeros_like(mean)
        return cls(axis, x, mean, se, k, dict(metadata or {}), samples)

    def select(self, mask) -> "Series":
        mask = np.asarray(mask, dtype=bool)
        return Series(
            self.axis, self.x[mask], self.mean[mask], self.stderr[mask], self.n[mask],
            dict(self.metadata), None if self.samples is None else self.samples[:, mask],
        )

    def window(self, lo: float, hi: float) -> "Series":
        return self.select((self.x >= lo) & (self.x <= hi))


@dataclass
class FitResult:
    slope: float
    stderr: float
    window: tuple[float, float]
    residual: float
    intercept: float = 0.0
    r2: float = 1.0
    flagged: bool = False
    n_points: int = 0

    @property
    def exponent(self) -> float:
        return self.slope


@dataclass
class CollapseResult:
    exponent: float
    objective: float
    reference: dict[float, float]
    curves: dict[int, tuple[np.ndarray, np.ndarray]]
    grid: np.ndarray
    grid_objective: np.ndarray
    form: str


# --------------------------------------------------------------------------
# fitting


def _linfit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Slope, intercept, RMS residual, R^2."""
    slope, icpt = np.polyfit(x, y, 1)
    res = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(res**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), float(np.sqrt(np.mean(res**2))), r2


def _bootstrap_slope(s: Series, tx, ty, n_boot: int, seed: int) -> float:
    """Stderr of the fitted slope, resampling trajectories when available and
    otherwise drawing Gaussian noise of size ``stderr`` around the means."""
    gen = np.random.default_rng(seed)
    x = tx(s.x)
    slopes = []
    for _ in range(n_boot):
        if s.samples is not None and s.samples.shape[0] > 1:
            pick = gen.integers(0, s.samples.shape[0], s.samples.shape[0])
            m = s.samples[pick].mean(axis=0)
        else:
            if not np.any(s.stderr > 0):
                return 0.0
            m = s.mean + gen.standard_normal(len(s.mean)) * s.stderr
        with np.errstate(divide="ignore", invalid="ignore"):
            y = ty(m)
        ok = np.isfinite(y)
        if ok.sum() < 3:
            continue
        slopes.append(np.polyfit(x[ok], y[ok], 1)[0])
    return float(np.std(slopes, ddof=1)) if len(slopes) > 1 else float("nan")


def _in_window(s: Series, window) -> Series:
    if window is None:
        return s
    return s.window(*window)


def fit_power_law(
    s: Series,
    window: tuple[float, float] | None = None,
    *,
    n_boot: int = 200,
    seed: int = 0,
    residual_threshold: float = RESIDUAL_THRESHOLD,
) -> FitResult:
    """Least-squares slope of ``log mean`` against ``log x``.

    ``residual`` is the RMS deviation in ``log mean``; fits above
    ``residual_threshold`` are flagged as not power-law-like."""
    w = _in_window(s, window)
    if len(w.x) < 5:
        raise FitError(f"need >= 5 points in window, got {len(w.x)}")
    if np.any(w.mean <= 0) or np.any(w.x <= 0):
        raise FitError("power-law fit needs positive x and means")
    slope, icpt, res, r2 = _linfit(np.log(w.x), np.log(w.mean))
    se = _bootstrap_slope(w, np.log, np.log, n_boot, seed)
    return FitResult(slope, se, (float(w.x[0]), float(w.x[-1])), res, icpt, r2, res > residual_threshold, len(w.x))


def fit_exponential(
    s: Series,
    window: tuple[float, float] | None = None,
    *,
    n_boot: int = 200,
    seed: int = 0,
) -> FitResult:
    """Slope of ``log mean`` against ``x`` (a decay rate when negative).

    The residual is measured in ``log mean`` like :func:`fit_power_law`, so
    the two are directly comparable."""
    w = _in_window(s, window)
    if len(w.x) < 5:
        raise FitError(f"need >= 5 points in window, got {len(w.x)}")
    if np.any(w.mean <= 0):
        raise FitError("exponential fit needs positive means")
    slope, icpt, res, r2 = _linfit(w.x, np.log(w.mean))
    se = _bootstrap_slope(w, lambda x: x, np.log, n_boot, seed)
    return FitResult(slope, se, (float(w.x[0]), float(w.x[-1])), res, icpt, r2, False, len(w.x))


def chord(x, L: int) -> np.ndarray:
    """Chord length ``L sin(pi x / L) / pi`` on a ring of ``L`` sites."""
    return L * np.sin(np.pi * np.asarray(x, dtype=float) / L) / np.pi


def fit_log_slope(
    s: Series,
    window: tuple[float, float] | None = None,
    *,
    chord_L: int | None = None,
    n_boot: int = 200,
    seed: int = 0,
) -> FitResult:
    """Least-squares slope of ``mean`` against ``log x``.

    With ``chord_L`` the abscissa is the chord coordinate of ``x`` on a ring
    of that size (steady-state entropy profiles)."""
    w = _in_window(s, window)
    if len(w.x) < 3:
        raise FitError(f"need >= 3 points, got {len(w.x)}")
    if not np.all(np.isfinite(w.mean)):
        raise FitError("non-finite means")
    tx = (lambda x: np.log(chord(x, chord_L))) if chord_L else np.log
    slope, icpt, res, r2 = _linfit(tx(w.x), w.mean)
    se = _bootstrap_slope(w, tx, lambda m: m, n_boot, seed)
    return FitResult(slope, se, (float(w.x[0]), float(w.x[-1])), res, icpt, r2, False, len(w.x))


def steady_state(s: Series, fraction: float = 0.25) -> tuple[float, float, bool]:
    """Average over the last ``fraction`` of the time axis.

    Returns ``(mean, stderr, flat)`` where ``flat`` says the linear trend in
    that window is within two standard errors of zero.  The stderr is over
    trajectories of the per-trajectory window averages when samples exist."""
    t_end = s.x[-1]
    t_lo = s.x[0] + (1 - fraction) * (t_end - s.x[0])
    w = s.select(s.x >= t_lo)
    if len(w.x) < 2:
        raise FitError("steady-state window has fewer than two points")
    if w.samples is not None and w.samples.shape[0] > 1:
        per = w.samples.mean(axis=1)
        mean, se = float(per.mean()), float(per.std(ddof=1) / math.sqrt(len(per)))
    else:
        mean, se = float(w.mean.mean()), float(np.sqrt(np.mean(w.stderr**2) / len(w.x)))
    if len(w.x) >= 3:
        slope = np.polyfit(w.x, w.mean, 1)[0]
        se_slope = _bootstrap_slope(w, lambda x: x, lambda m: m, 100, 0) if (w.samples is not None or np.any(w.stderr > 0)) else 0.0
        flat = bool(abs(slope) <= 2 * se_slope) if se_slope > 0 else bool(abs(slope) < 1e-12)
    else:
        flat = True
    return mean, se, flat


# --------------------------------------------------------------------------
# finite-size collapse


def _rescale(form: str, x: np.ndarray, L: int, exponent: float, p_c: float | None) -> np.ndarray:
    if form == "time":
        return x / float(L) ** exponent
    if form == "rate":
        if p_c is None:
            raise ValueError("rate collapse needs p_c")
        d = x - p_c
        return np.sign(d) * L * np.abs(d) ** exponent
    raise ValueError(f"unknown collapse form {form!r}")


def _monotone_mse(u: np.ndarray, y: np.ndarray) -> float:
    """MSE of ``y`` about a monotone PCHIP spline through the isotonic fit of
    the pooled points (direction chosen by the better fit)."""
    order = np.argsort(u, kind="stable")
    u, y = u[order], y[order]
    best = math.inf
    n_knots = int(np.clip(len(u) // 5, 4, 24))
    edges = np.quantile(u, np.linspace(0, 1, n_knots + 1))
    for inc in (True, False):
        iso = isotonic_regression(y, increasing=inc).x
        ku, kv = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            sel = (u >= lo) & (u <= hi)
            if sel.any():
                ku.append(u[sel].mean())
                kv.append(iso[sel].mean())
        ku, idx = np.unique(np.asarray(ku), return_index=True)
        kv = np.asarray(kv)[idx]
        if len(ku) < 2:
            pred = np.full_like(y, y.mean())
        else:
            pred = PchipInterpolator(ku, kv, extrapolate=True)(u)
        best = min(best, float(np.mean((y - pred) ** 2)))
    return best


def collapse_objective(
    curves: Mapping[int, Series],
    exponent: float,
    form: str = "time",
    *,
    p_c: float | None = None,
) -> tuple[float, dict[int, tuple[np.ndarray, np.ndarray]]]:
    """Spread of the rescaled curves over their common support."""
    resc = {}
    for L, s in curves.items():
        keep = s.x > 0 if form == "time" else s.x != p_c
        xs = _rescale(form, s.x[keep], L, exponent, p_c)
        resc[L] = (xs, s.mean[keep])
    lo = max(np.min(v[0]) for v in resc.values() if len(v[0]))
    hi = min(np.max(v[0]) for v in resc.values() if len(v[0]))
    if not lo < hi:
        raise FitError("rescaled curves have no overlapping support")
    us, ys = [], []
    for xs, ms in resc.values():
        sel = (xs >= lo) & (xs <= hi)
        # log spacing for times; asinh keeps the sign of p - p_c
        us.append(np.log(xs[sel]) if form == "time" else np.arcsinh(xs[sel]))
        ys.append(ms[sel])
    u, y = np.concatenate(us), np.concatenate(ys)
    if len(u) < 4:
        raise FitError("too few points in the overlap")
    return _monotone_mse(u, y), resc


def collapse(
    curves: Mapping[int, Series],
    form: str = "time",
    search: tuple[float, float] = (0.5, 2.5),
    *,
    p_c: float | None = None,
    reference: Sequence[float] = (1.581, 1.0),
    n_grid: int = 41,
) -> CollapseResult:
    """Find the exponent that best collapses a family of curves.

    ``form="time"`` rescales ``x -> x / L**z``; ``form="rate"`` rescales
    ``p -> sign(p - p_c) L |p - p_c|**nu``.  The objective is evaluated on a grid over
    ``search``, refined with a bounded scalar search around the best grid
    point, and also reported at each ``reference`` exponent."""
    if len(curves) < 3:
        raise FitError("collapse needs at least three system sizes")
    grid = np.linspace(search[0], search[1], n_grid)
    vals = np.full(n_grid, np.inf)
    for i, e in enumerate(grid):
        try:
            vals[i] = collapse_objective(curves, e, form, p_c=p_c)[0]
        except FitError:
            pass
    if not np.isfinite(vals).any():
        raise FitError("no exponent in the search range gives overlapping curves")
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, n_grid - 1)]

    def f(e):
        try:
            return collapse_objective(curves, e, form, p_c=p_c)[0]
        except FitError:
            return math.inf

    best_e, best_v = float(grid[k]), float(vals[k])
    if hi > lo:
        r = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-4})
        if r.fun <= best_v:
            best_e, best_v = float(r.x), float(r.fun)
    ref = {float(e): f(e) for e in reference}
    _, resc = collapse_objective(curves, best_e, form, p_c=p_c)
    return CollapseResult(best_e, best_v, ref, resc, grid, vals, form)


# --------------------------------------------------------------------------
# mutual-information geometry


def cross_ratio(x1: float, x2: float, x3: float, x4: float, L: int) -> float:
    """``x12 x34 / (x13 x24)`` with chord distances ``sin(pi |xi - xj| / L)``."""
    pts = [x1, x2, x3, x4]
    if len(set(pts)) < 4:
        raise ValueError("cross ratio needs four distinct points")

    def d(a, b):
        return math.sin(math.pi * abs(a - b) / L)

    return d(x1, x2) * d(x3, x4) / (d(x1, x3) * d(x2, x4))


def ring_distance(a: float, b: float, L: int) -> float:
    d = abs(a - b) % L
    return min(d, L - d)


def mi_vs_separation(values: Mapping[float, Sequence[float]], L: int, metadata: dict | None = None) -> Series:
    """``I(r)`` averaged per separation; ``values[r]`` are the samples at
    mid-to-mid ring distance ``r``."""
    rs = sorted(values)
    for r in rs:
        if not 0 < r <= L / 2:
            raise ValueError(f"separation {r} outside (0, L/2]")
    mean, se, n = [], [], []
    for r in rs:
        v = np.asarray(values[r], dtype=float)
        mean.append(v.mean())
        se.append(v.std(ddof=1) / math.sqrt(len(v)) if len(v) > 1 else 0.0)
        n.append(len(v))
    meta = {"L": L}
    meta.update(metadata or {})
    return Series("separation", rs, mean, se, n, meta)


def peak_location(x: np.ndarray, y: np.ndarray) -> float:
    """Vertex of a parabola through the maximum and its two neighbours
    (the grid point itself at the edges)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    k = int(np.argmax(y))
    if k == 0 or k == len(x) - 1:
        return float(x[k])
    a, b, _ = np.polyfit(x[k - 1 : k + 2], y[k - 1 : k + 2], 2)
    return float(-b / (2 * a)) if a < 0 else float(x[k])


# --------------------------------------------------------------------------
# output


def write_report(path, items: Mapping[str, object]) -> None:
    """One ``key=value`` pair per line."""
    with open(path, "w") as fh:
        for k, v in items.items():
            fh.write(f"{k}={_fmt(v)}\n")


def read_report(path) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line and not line.startswith("#"):
                k, _, v = line.partition("=")
                out[k] = v
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list, np.ndarray)):
        return ",".join(_fmt(float(e) if isinstance(e, np.floating) else e) for e in v)
    return str(v)


CSV_COLUMNS = ("axis", "x", "mean", "stderr", "n", "model", "L", "p", "seed", "flag")


def series_rows(s: Series, flag: str = "") -> list[list[str]]:
    md = s.metadata
    return [
        [s.axis, repr(float(x)), repr(float(m)), repr(float(e)), str(int(n)),
         str(md.get("model", "")), str(md.get("L", "")), _fmt(md.get("p", "")), str(md.get("seed", "")), flag]
        for x, m, e, n in zip(s.x, s.mean, s.stderr, s.n)
    ]


def write_csv(path, rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow(r)


def read_csv(path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
