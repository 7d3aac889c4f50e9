"""Classical side of the mapping: paired bit-strings and bond directed percolation.

Two bit-strings driven by the same automaton realization only ever differ
through their XOR ``h = a ^ b``: CNOTs propagate the difference linearly,
SWAP moves it, diagonal gates ignore it and a measurement clears it.  The
compiled kernels evolve ``h`` directly and read the very same random
streams as :func:`qamipt.circuit.iter_layers`, so a kernel run and a replay
of the generated :class:`~qamipt.circuit.Circuit` agree bit for bit.
"""

from __future__ import annotations

import math

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit
from scipy.optimize import isotonic_regression

from . import rng as streams
from .circuit import (
    Boundary,
    Circuit,
    CircuitSpec,
    GateKind,
    Model,
    brick_pairs,
    gate_permutation,
    layers_per_step,
)


@dataclass(frozen=True)
class ExponentTable:
    z: float = 1.581
    nu_perp: float = 1.0969
    nu_par: float = 1.7338
    beta_over_nu_par: float = 0.1595
    theta: float = 0.302
    p_c_clifford: float = 0.137
    p_c_nonclifford: float = 0.053
    p_c_nonqa: float = 0.178


DP = ExponentTable()

INITS = ("random-pair", "single-difference", "identical")

_MODEL_CODE = {
    Model.QA_PURIFICATION: 0,
    Model.QA_CLIFFORD_ENTANGLEMENT: 0,
    Model.QA_NONCLIFFORD: 1,
}


@dataclass
class PairRun:
    D: np.ndarray  # (T + 1,) Hamming distance, D[0] is the initial value
    field: np.ndarray | None = None  # (n_recorded, L) difference bits h(x, t)
    field_times: np.ndarray | None = None


@njit(cache=True)
def _pair_chunk(h, ug, um, p, pairs0, pairs1, model_code, t0, D, field, field_every, lo_hi):
    """Advance the difference string through ``len(um)`` steps.

    ``lo_hi`` bounds the sites that can be nonzero; only bricks touching
    ``[lo - 1, hi + 1]`` do work, which makes sparse seeds cheap.  The seam
    brick disables the bound.  Returns the number of steps done (stops early
    at the absorbing state).
    """
    n_steps = um.shape[0]
    L = h.shape[0]
    for c in range(n_steps):
        t = t0 + c + 1
        for row in range(ug.shape[1]):
            if model_code == 1:
                parity = (t - 1) % 2
            else:
                parity = row
            pairs = pairs0 if parity == 0 else pairs1
            for j in range(pairs.shape[0]):
                i0 = pairs[j, 0]
                i1 = pairs[j, 1]
                if i1 > i0 and (i1 < lo_hi[0] or i0 > lo_hi[1]):
                    continue
                u = ug[c, row, j]
                if model_code == 1:
                    kind = int(u * 4.0)
                else:
                    kind = 0 if u < 0.5 else 1
                if kind == 0:
                    h[i1] ^= h[i0]
                elif kind == 1:
                    h[i0] ^= h[i1]
                elif kind == 2:
                    tmp = h[i0]
                    h[i0] = h[i1]
                    h[i1] = tmp
                if i1 < i0 and (h[i0] | h[i1]):
                    lo_hi[0] = 0
                    lo_hi[1] = L - 1
                else:
                    if h[i0] and i0 < lo_hi[0]:
                        lo_hi[0] = i0
                    if h[i1] and i1 > lo_hi[1]:
                        lo_hi[1] = i1
        d = 0
        lo = L
        hi = -1
        for i in range(max(lo_hi[0], 0), min(lo_hi[1], L - 1) + 1):
            if um[c, i] < p:
                h[i] = 0
            if h[i]:
                d += 1
                if i < lo:
                    lo = i
                hi = i
        lo_hi[0] = lo
        lo_hi[1] = hi
        D[t] = d
        if field_every > 0 and t % field_every == 0:
            field[t // field_every] = h
        if d == 0:
            return c + 1
    return n_steps


def _initial_difference(init: str, L: int, gen: np.random.Generator, n_seed: int = 1) -> np.ndarray:
    if init == "random-pair":
        a = (gen.random(L) < 0.5).astype(np.uint8)
        b = (gen.random(L) < 0.5).astype(np.uint8)
        return a ^ b
    h = np.zeros(L, dtype=np.uint8)
    if init == "single-difference":
        mid = L // 2 - n_seed // 2
        h[mid : mid + n_seed] = 1
        return h
    if init == "identical":
        return h
    raise ValueError(f"unknown init {init!r}; expected one of {INITS}")


def _check_automaton_model(model: Model) -> int:
    try:
        return _MODEL_CODE[Model(model)]
    except KeyError:
        raise ValueError(f"{model} has no bit-string dynamics (H layers are not automaton gates)") from None


def evolve_pair(
    spec: CircuitSpec,
    init: str = "random-pair",
    rng: np.random.Generator | None = None,
    *,
    record_field: bool = False,
    field_every: int = 1,
    n_seed: int = 1,
) -> PairRun:
    """Evolve a bit-string pair under the realization fixed by ``spec``.

    The gate and measurement draws come from the ``spec`` seed streams; the
    initial pair is drawn from ``rng`` (default: the ``init`` stream of the
    same trajectory).  For purification models the pair lives on system A.
    """
    code = _check_automaton_model(spec.model)
    L, T = spec.L, spec.T
    key = (spec.master_seed, spec.trajectory_index)
    if rng is None:
        rng = streams.seed_for(*key, streams.INIT)
    h = _initial_difference(init, L, rng, n_seed)
    g_rng = streams.seed_for(*key, streams.GATES)
    m_rng = streams.seed_for(*key, streams.MEASURE)
    pairs0 = brick_pairs(L, 0, spec.boundary)
    pairs1 = brick_pairs(L, 1, spec.boundary)
    lps = layers_per_step(spec.model)
    D = np.zeros(T + 1, dtype=np.int32)
    D[0] = h.sum()
    every = max(int(field_every), 1) if record_field else 0
    field = np.zeros((T // every + 1, L) if record_field else (1, L), dtype=np.uint8)
    if record_field:
        field[0] = h
    nz = np.flatnonzero(h)
    lo_hi = np.array([nz[0], nz[-1]] if len(nz) else [L, -1], dtype=np.int64)
    t, chunk = 0, 16
    while t < T and D[t] > 0:
        c = min(chunk, T - t)
        ug = g_rng.random((c, lps, L // 2))
        um = m_rng.random((c, L))
        t += _pair_chunk(h, ug, um, spec.p, pairs0, pairs1, code, t, D, field, every, lo_hi)
        chunk = min(chunk * 2, 1024)
    # D stays zero after absorption; fields are already zero-initialised
    if record_field:
        times = np.arange(0, T + 1, every)
        return PairRun(D, field, times)
    return PairRun(D)


def evolve_pair_circuit(circuit: Circuit, a: np.ndarray, b: np.ndarray) -> PairRun:
    """Reference path: replay ``circuit`` gate by gate on the explicit pair.

    Unitary gates act through :func:`gate_permutation` on both strings,
    measurements set ``b_i <- a_i``.  Slow; meant for cross-checking the
    compiled kernel.
    """
    a = np.array(a, dtype=np.uint8)
    b = np.array(b, dtype=np.uint8)
    if a.shape != b.shape or len(a) != circuit.L:
        raise ValueError("pair strings must both have length circuit.L")
    D = np.zeros(circuit.steps + 1, dtype=np.int32)
    step = 0
    for layer in circuit.layers:
        while layer.step > step:
            D[step] = int(np.sum(a != b))
            step += 1
        for g in layer.gates:
            if g.kind is GateKind.COMPOSITE_MEASURE:
                b[g.sites[0]] = a[g.sites[0]]
            elif g.kind is GateKind.H:
                raise ValueError("H is not an automaton gate")
            else:
                s = list(g.sites)
                a[s] = gate_permutation(g, tuple(a[s]))
                b[s] = gate_permutation(g, tuple(b[s]))
    D[step:] = int(np.sum(a != b))
    return PairRun(D)


def hamming_ensemble(
    spec: CircuitSpec,
    trials: int,
    init: str = "random-pair",
    *,
    n_seed: int = 1,
    first_trajectory: int = 0,
) -> np.ndarray:
    """``D(t)`` for ``trials`` independent realizations; shape ``(trials, T + 1)``."""
    out = np.zeros((trials, spec.T + 1), dtype=np.int32)
    for k in range(trials):
        run = evolve_pair(spec.with_trajectory(first_trajectory + k), init, n_seed=n_seed)
        out[k] = run.D
    return out


# --------------------------------------------------------------------------
# bond directed percolation


@dataclass
class BondDPLattice:
    p_block: float
    L: int
    T: int
    init: str = "fully-occupied"  # or "single-seed"
    boundary: Boundary = Boundary.PERIODIC

    def __post_init__(self):
        if not 0.0 <= self.p_block <= 1.0:
            raise ValueError("p_block outside [0, 1]")
        if self.init not in ("fully-occupied", "single-seed"):
            raise ValueError(f"unknown bond-DP init {self.init!r}")
        self.boundary = Boundary(self.boundary)


@njit(cache=True)
def _bond_dp_chunk(s, u, p_block, periodic, t0, N):
    """Tilted square lattice: at even ``t`` site ``i`` has parents ``i`` and
    ``i + 1``, at odd ``t`` parents ``i - 1`` and ``i``.  Each bond is open
    with probability ``1 - p_block``."""
    L = s.shape[0]
    new = np.empty_like(s)
    for c in range(u.shape[0]):
        t = t0 + c
        off = 1 if t % 2 == 0 else -1
        n = 0
        for i in range(L):
            j = i + off
            if j < 0 or j >= L:
                if periodic:
                    j %= L
                else:
                    j = -1
            occ = s[i] and u[c, i, 0] >= p_block
            if not occ and j >= 0:
                occ = s[j] and u[c, i, 1] >= p_block
            new[i] = occ
            n += occ
        s[:] = new
        N[t + 1] = n
        if n == 0:
            return c + 1
    return u.shape[0]


def run_bond_dp(lattice: BondDPLattice, rng: np.random.Generator) -> np.ndarray:
    """Occupation number ``N(t)`` for ``t = 0..T``."""
    L, T = lattice.L, lattice.T
    s = np.zeros(L, dtype=np.uint8)
    if lattice.init == "fully-occupied":
        s[:] = 1
    else:
        s[L // 2] = 1
    N = np.zeros(T + 1, dtype=np.int32)
    N[0] = s.sum()
    t, chunk = 0, 16
    periodic = lattice.boundary is Boundary.PERIODIC
    while t < T and N[t] > 0:
        c = min(chunk, T - t)
        u = rng.random((c, L, 2))
        t += _bond_dp_chunk(s, u, lattice.p_block, periodic, t, N)
        chunk = min(chunk * 2, 1024)
    return N


def bond_dp_ensemble(lattice: BondDPLattice, trials: int, master_seed: int = 0) -> np.ndarray:
    out = np.zeros((trials, lattice.T + 1), dtype=np.int32)
    for k in range(trials):
        out[k] = run_bond_dp(lattice, streams.seed_for(master_seed, k, "bond_dp"))
    return out


# --------------------------------------------------------------------------
# locating the critical point


class NoStraddleError(ValueError):
    pass


@dataclass
class CriticalPoint:
    p_c: float
    ci: tuple[float, float]
    p_grid: np.ndarray
    curvature: np.ndarray
    window: tuple[float, float]
    per_L: dict[int, float] = field(default_factory=dict)
    bootstrap: np.ndarray | None = None


def log_times(T: int, t_min: float = 1.0, per_decade: int = 20) -> np.ndarray:
    t_min = max(t_min, 1.0)
    ts = np.unique(np.round(np.logspace(np.log10(t_min), np.log10(max(T, 1)), int(per_decade * max(np.log10(T / t_min), 1)))).astype(int))
    return ts[(ts >= t_min) & (ts <= T)]


def loglog_curvature(times: np.ndarray, mean: np.ndarray) -> float:
    """Quadratic coefficient of ``log mean`` against ``log t``.

    Positive for curves bending up (sub-critical, saturating), negative for
    curves bending down (super-critical, dying)."""
    x = np.log(times)
    y = np.log(np.maximum(mean, 1e-300))
    return float(np.polyfit(x - x.mean(), y, 2)[0])


def _root(p_grid: np.ndarray, curv: np.ndarray) -> float:
    """Zero crossing of a decreasing isotonic fit of curvature against p,
    interpolated linearly between the two grid points around the sign change.

    The isotonic step keeps noisy or strongly bent far-from-critical points
    from dragging the root, which a global linear fit would allow."""
    order = np.argsort(p_grid)
    p, c = p_grid[order], curv[order]
    fit = isotonic_regression(c, increasing=False).x
    neg = np.flatnonzero(fit < 0)
    if len(neg) == 0 or neg[0] == 0:
        return float("nan")
    k = neg[0]
    # extend over tied blocks so the interpolation uses distinct values
    j = k - 1
    while j > 0 and fit[j - 1] == fit[j]:
        j -= 1
    hi = k
    while hi < len(fit) - 1 and fit[hi + 1] == fit[hi]:
        hi += 1
    pl = p[j : k].mean()
    ph = p[k : hi + 1].mean()
    fl, fh = fit[k - 1], fit[k]
    return float(pl + (ph - pl) * fl / (fl - fh))


def curvature_root(
    p_grid: Sequence[float],
    ensembles: Sequence[np.ndarray],
    window: tuple[float, float],
    *,
    n_boot: int = 200,
    seed: int = 0,
) -> CriticalPoint:
    """Minimal-curvature estimate of ``p_c`` from per-trajectory series.

    ``ensembles[k]`` holds the ``(trials, T + 1)`` order-parameter series at
    ``p_grid[k]``.  The curvature of each ensemble mean over ``window`` is
    fitted linearly in ``p`` and the zero crossing is reported with a
    percentile bootstrap over trajectories.
    """
    p_grid = np.asarray(p_grid, dtype=float)
    if len(p_grid) < 3:
        raise ValueError("need at least three grid points")
    T = ensembles[0].shape[1] - 1
    lo, hi = window
    times = log_times(T, lo)
    times = times[(times >= lo) & (times <= hi)]
    if len(times) < 5:
        raise ValueError("fit window too narrow")

    def curvatures(samples):
        return np.array([loglog_curvature(times, s[:, times].mean(axis=0)) for s in samples])

    curv = curvatures(ensembles)
    if np.all(curv > 0) or np.all(curv < 0):
        raise NoStraddleError(f"grid does not straddle the transition (curvatures {curv})")
    p_c = _root(p_grid, curv)
    gen = np.random.default_rng(seed)
    boots = np.empty(n_boot)
    for i in range(n_boot):
        res = [e[gen.integers(0, len(e), len(e))] for e in ensembles]
        boots[i] = _root(p_grid, curvatures(res))
    ci = (float(np.nanpercentile(boots, 2.5)), float(np.nanpercentile(boots, 97.5)))
    return CriticalPoint(p_c, ci, p_grid, curv, (float(times[0]), float(times[-1])), bootstrap=boots)


def scan_critical_point(
    model: Model | str,
    p_grid: Sequence[float],
    L_list: Sequence[int],
    T: int,
    trials: int,
    *,
    boundary: Boundary = Boundary.OPEN,
    master_seed: int = 0,
    window: tuple[float, float] | None = None,
    n_boot: int = 200,
) -> CriticalPoint:
    """Scan ``p`` for one family and locate ``p_c``.

    ``model`` is an automaton :class:`Model` (random-pair Hamming distance)
    or ``"bond_dp"`` (``p`` is then the bond blocking probability, fully
    occupied start).  The estimate from the largest ``L`` is returned;
    ``per_L`` keeps all of them.
    """
    if window is None:
        window = (1e2, T / 10)
    # times past the fit window are never used
    T = min(T, int(math.ceil(window[1])))
    per_L: dict[int, CriticalPoint] = {}
    for L in sorted(L_list):
        ensembles = []
        for p in p_grid:
            if model == "bond_dp":
                lat = BondDPLattice(p, L, T, "fully-occupied", boundary)
                ensembles.append(bond_dp_ensemble(lat, trials, master_seed))
            else:
                spec = CircuitSpec(Model(model), L, T, p, boundary, master_seed)
                ensembles.append(hamming_ensemble(spec, trials))
        per_L[L] = curvature_root(p_grid, ensembles, window, n_boot=n_boot, seed=master_seed)
    best = per_L[max(per_L)]
    best.per_L = {L: cp.p_c for L, cp in per_L.items()}
    return best


def bisect_critical_point(
    sample: Callable[[float], np.ndarray],
    lo: float,
    hi: float,
    window: tuple[float, float],
    iterations: int = 6,
) -> float:
    """Coarse bisection on the sign of the log-log curvature.

    ``sample(p)`` returns an ensemble of series; ``lo`` must be sub-critical
    (positive curvature) and ``hi`` super-critical."""
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        s = sample(mid)
        T = s.shape[1] - 1
        times = log_times(T, window[0])
        times = times[times <= window[1]]
        if loglog_curvature(times, s[:, times].mean(axis=0)) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# spreading from a localised difference


@dataclass
class FrontProfile:
    mean_field: np.ndarray  # (n_times, L) average of h(x, t)
    field_times: np.ndarray
    D_mean: np.ndarray  # (T + 1,)
    velocity: float
    velocity_r2: float
    width: np.ndarray  # diffusive width per recorded time
    front: np.ndarray  # left-front position per recorded time (distance from seed)


def front_profile(
    spec: CircuitSpec,
    trials: int,
    *,
    field_every: int = 10,
    n_seed: int = 1,
    threshold: float = 0.5,
) -> FrontProfile:
    """Average ``h(x, t)`` from a localised difference and fit the front.

    The front position is the distance from the seed to the outermost site
    where the mean profile exceeds ``threshold`` times its bulk (plateau)
    value; the width is the spread of the profile's edge between 20% and 80%
    of the plateau."""
    L = spec.L
    acc_field = None
    D_acc = np.zeros(spec.T + 1)
    times = None
    for k in range(trials):
        run = evolve_pair(
            spec.with_trajectory(k), "single-difference",
            record_field=True, field_every=field_every, n_seed=n_seed,
        )
        if acc_field is None:
            acc_field = np.zeros(run.field.shape)
            times = run.field_times
        acc_field += run.field
        D_acc += run.D
    mean_field = acc_field / trials
    D_mean = D_acc / trials
    centre = L // 2
    front = np.zeros(len(times))
    width = np.zeros(len(times))
    for i, prof in enumerate(mean_field):
        plateau = prof.max()
        if plateau <= 0:
            continue
        left = prof[: centre + 1][::-1]  # distance 0 at the seed, growing leftwards
        above = np.flatnonzero(left >= threshold * plateau)
        front[i] = above[-1] if len(above) else 0.0
        hi_e = np.flatnonzero(left >= 0.8 * plateau)
        lo_e = np.flatnonzero(left >= 0.2 * plateau)
        width[i] = (lo_e[-1] if len(lo_e) else 0) - (hi_e[-1] if len(hi_e) else 0)
    # fit the front only while it has not reached the boundary
    ok = (front > 0) & (front < centre - 2)
    if ok.sum() >= 3:
        slope, icpt = np.polyfit(times[ok], front[ok], 1)
        pred = slope * times[ok] + icpt
        ss_res = np.sum((front[ok] - pred) ** 2)
        ss_tot = np.sum((front[ok] - front[ok].mean()) ** 2)
        r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    else:
        slope, r2 = 0.0, 0.0
    return FrontProfile(mean_field, times, D_mean, float(slope), float(r2), width, front)
