"""Monte Carlo Renyi-2 estimation for automaton circuits with composite measurements.

For a circuit ``U`` built from automaton gates and composite measurements,
``<m|U|psi_0> = exp(i phi(m)) / sqrt(2^L)`` for every basis string ``m``.
``phi`` is obtained by walking the circuit backwards from ``m``: unitary
gates are undone and contribute their phase at the pre-image; a
measurement at site ``i`` with outcome ``s`` forces bit ``i`` to ``s`` and
contributes ``pi`` when the forced bit was 1 and ``s = 1`` (the Hadamard
matrix element).

The purity of region A is the average over independent uniform strings
``m1, m2`` of ``cos(phi(m1) + phi(m2) - phi(m1') - phi(m2'))`` where the
primed strings have their A bits exchanged.

Phases are carried as an integer number of quarter turns plus a float
part that only RZ gates touch, so pure Clifford circuits are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from . import dp
from .circuit import Circuit, CircuitSpec, FlatCircuit, GateKind, Model

START_SAMPLES = 10_000
MAX_SAMPLES = 10_000_000
BATCH = 1 << 15


class UnsupportedCircuitError(ValueError):
    pass


class UnresolvableEntropyError(RuntimeError):
    """Purity could not be resolved from zero within the sample budget."""

    def __init__(self, estimate: "PurityEstimate"):
        super().__init__(
            f"entropy too large for sample budget: purity {estimate.mean:.3g} "
            f"+- {estimate.stderr:.3g} after {estimate.samples} samples"
        )
        self.estimate = estimate


@dataclass
class PurityEstimate:
    mean: float
    stderr: float
    samples: int


@dataclass
class ObservableEstimate:
    value: complex
    stderr: float
    samples: int


# --------------------------------------------------------------------------
# kernels


@njit(cache=True, inline="always")
def _undo_gate(s, kind, a, b, ang):
    """Replace ``s`` by the gate pre-image; return (quarter turns, float phase)
    of the gate evaluated there."""
    x0 = s[a]
    x1 = s[b]
    if kind == 0:  # CNOT_L, self inverse
        x1 ^= x0
    elif kind == 1:
        x0 ^= x1
    elif kind == 3:
        t = x0
        x0 = x1
        x1 = t
    s[a] = x0
    s[b] = x1
    if kind == 2:
        return (2 if (x0 & x1) else 0), 0.0
    if kind == 5:
        z0 = 1.0 - 2.0 * x0
        z1 = 1.0 - 2.0 * x1
        return 0, ang[0] * z0 + ang[1] * z1 + ang[2] * z0 * z1
    return 0, 0.0


@njit(cache=True)
def _backward(s, kinds, a, b, angles, outcomes):
    """Walk the flat circuit backwards from ``s`` (modified in place)."""
    q = 0
    f = 0.0
    for i in range(kinds.shape[0] - 1, -1, -1):
        k = kinds[i]
        if k == 6:
            site = a[i]
            if s[site] == 1 and outcomes[i] == 1:
                q += 2
            s[site] = outcomes[i]
        else:
            dq, df = _undo_gate(s, k, a[i], b[i], angles[i])
            q += dq
            f += df
    return q, f


@njit(cache=True)
def _forward(s, kinds, a, b, angles):
    """Forward pass of a unitary automaton circuit: phase at each gate's
    input, then permute."""
    q = 0
    f = 0.0
    for i in range(kinds.shape[0]):
        k = kinds[i]
        x0 = s[a[i]]
        x1 = s[b[i]]
        if k == 2:
            if x0 & x1:
                q += 2
        elif k == 5:
            z0 = 1.0 - 2.0 * x0
            z1 = 1.0 - 2.0 * x1
            f += angles[i, 0] * z0 + angles[i, 1] * z1 + angles[i, 2] * z0 * z1
        elif k == 0:
            s[b[i]] = x1 ^ x0
        elif k == 1:
            s[a[i]] = x0 ^ x1
        elif k == 3:
            s[a[i]] = x1
            s[b[i]] = x0
    return q, f


@njit(cache=True)
def _amplitude_phases(strings, kinds, a, b, angles, outcomes):
    n = strings.shape[0]
    qs = np.empty(n, dtype=np.int64)
    fs = np.empty(n, dtype=np.float64)
    buf = np.empty(strings.shape[1], dtype=np.uint8)
    for j in range(n):
        buf[:] = strings[j]
        q, f = _backward(buf, kinds, a, b, angles, outcomes)
        qs[j] = q
        fs[j] = f
    return qs, fs


_COS_QUARTER = np.array([1.0, 0.0, -1.0, 0.0])
_I_POW = np.array([1.0, 1.0j, -1.0, -1.0j])


@njit(cache=True)
def _swap_contributions(m1, m2, in_a, kinds, a, b, angles, outcomes, exact):
    n, L = m1.shape
    out = np.empty(n, dtype=np.float64)
    s = np.empty(L, dtype=np.uint8)
    for j in range(n):
        same = True
        for x in range(L):
            if in_a[x] and m1[j, x] != m2[j, x]:
                same = False
                break
        if same:
            # swapped strings coincide with the originals: phases cancel
            out[j] = 1.0
            continue
        s[:] = m1[j]
        q1, f1 = _backward(s, kinds, a, b, angles, outcomes)
        s[:] = m2[j]
        q2, f2 = _backward(s, kinds, a, b, angles, outcomes)
        for x in range(L):
            s[x] = m2[j, x] if in_a[x] else m1[j, x]
        q3, f3 = _backward(s, kinds, a, b, angles, outcomes)
        for x in range(L):
            s[x] = m1[j, x] if in_a[x] else m2[j, x]
        q4, f4 = _backward(s, kinds, a, b, angles, outcomes)
        dq = (q1 + q2 - q3 - q4) % 4
        if exact:
            out[j] = _COS_QUARTER[dq]
        else:
            out[j] = math.cos(dq * (math.pi / 2) + (f1 + f2 - f3 - f4))
    return out


# --------------------------------------------------------------------------
# public operations


def _flat_for_mc(c: Circuit | FlatCircuit) -> FlatCircuit:
    flat = c.flat() if isinstance(c, Circuit) else c
    if np.any(flat.kinds == GateKind.H):
        raise UnsupportedCircuitError("H outside a composite measurement is not an automaton gate")
    return flat


def _kernel_args(flat: FlatCircuit):
    b = np.where(flat.b >= 0, flat.b, flat.a)
    return flat.kinds, flat.a.astype(np.int64), b.astype(np.int64), flat.angles, flat.outcomes.astype(np.int64)


def backward_amplitude(c: Circuit, m: Sequence[int]) -> float:
    """Phase ``phi`` with ``<m|U|psi_0> = exp(i phi) / sqrt(2^L)``, in ``[0, 2 pi)``."""
    flat = _flat_for_mc(c)
    m = np.asarray(m, dtype=np.uint8).reshape(1, -1)
    if m.shape[1] != c.L:
        raise ValueError(f"string length {m.shape[1]} != L = {c.L}")
    qs, fs = _amplitude_phases(m, *_kernel_args(flat))
    return float((qs[0] % 4) * (math.pi / 2) + fs[0]) % (2 * math.pi)


def backward_phases(c: Circuit, strings: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`backward_amplitude`: ``(quarter_turns, float_phase)``."""
    flat = _flat_for_mc(c)
    return _amplitude_phases(np.ascontiguousarray(strings, dtype=np.uint8), *_kernel_args(flat))


def _region_mask(L: int, region: Iterable[int]) -> np.ndarray:
    mask = np.zeros(L, dtype=np.bool_)
    idx = np.asarray(list(region), dtype=np.int64)
    if len(idx) and (idx.min() < 0 or idx.max() >= L):
        raise IndexError("region out of range")
    mask[idx] = True
    return mask


def swap_contributions(c: Circuit, region: Iterable[int], m1: np.ndarray, m2: np.ndarray) -> np.ndarray:
    """Per-quadruple estimator values for explicit ``(m1, m2)`` rows."""
    flat = _flat_for_mc(c)
    exact = not np.any(flat.kinds == GateKind.RZ)
    return _swap_contributions(
        np.ascontiguousarray(m1, dtype=np.uint8), np.ascontiguousarray(m2, dtype=np.uint8),
        _region_mask(c.L, region), *_kernel_args(flat), exact,
    )


class _Accumulator:
    def __init__(self):
        self.sums: list[float] = []
        self.sqs: list[float] = []
        self.n = 0

    def add(self, values: np.ndarray) -> None:
        self.sums.append(float(np.sum(values)))
        self.sqs.append(float(np.sum(values * values)))
        self.n += len(values)

    def estimate(self) -> PurityEstimate:
        n = self.n
        mean = math.fsum(self.sums) / n
        if n < 2:
            return PurityEstimate(mean, 0.0, n)
        var = max(math.fsum(self.sqs) - n * mean * mean, 0.0) / (n - 1)
        return PurityEstimate(mean, math.sqrt(var / n), n)


def _draw_and_accumulate(c, region, M, rng, acc):
    L = c.L
    done = 0
    while done < M:
        k = min(BATCH, M - done)
        bits = rng.integers(0, 2, size=(2, k, L), dtype=np.uint8)
        acc.add(swap_contributions(c, region, bits[0], bits[1]))
        done += k


def estimate_purity(c: Circuit, region: Iterable[int], M: int, rng: np.random.Generator) -> PurityEstimate:
    """Unbiased estimate of ``Tr rho_A^2`` from ``M`` uniform quadruples."""
    if M < 1:
        raise ValueError("need at least one sample")
    region = list(region)
    acc = _Accumulator()
    _draw_and_accumulate(c, region, M, rng, acc)
    return acc.estimate()


def exhaustive_purity(c: Circuit, region: Iterable[int]) -> float:
    """Average over all ``4^L`` quadruples (``L <= 8``)."""
    L = c.L
    if L > 8:
        raise ValueError("exhaustive enumeration is limited to L <= 8")
    idx = np.arange(2**L)
    strings = ((idx[:, None] >> np.arange(L)) & 1).astype(np.uint8)
    i1, i2 = np.meshgrid(idx, idx, indexing="ij")
    vals = swap_contributions(c, list(region), strings[i1.ravel()], strings[i2.ravel()])
    return float(math.fsum(vals) / len(vals))


def estimate_renyi2(
    c: Circuit,
    region: Iterable[int],
    M: int = START_SAMPLES,
    rng: np.random.Generator | None = None,
    *,
    max_samples: int = MAX_SAMPLES,
) -> tuple[float, float, PurityEstimate]:
    """``(S2, stderr_S2, purity)`` with the sample count doubled from ``M``
    until the purity is resolved (``mean > 3 stderr``) or ``max_samples``
    is reached, in which case :class:`UnresolvableEntropyError` is raised."""
    if rng is None:
        rng = np.random.default_rng()
    region = list(region)
    acc = _Accumulator()
    target = max(int(M), 1)
    while True:
        _draw_and_accumulate(c, region, target - acc.n, rng, acc)
        est = acc.estimate()
        if est.mean > 3 * est.stderr:
            break
        if acc.n >= max_samples:
            raise UnresolvableEntropyError(est)
        target = min(2 * acc.n, max_samples)
    s2 = -math.log2(est.mean)
    return s2, est.stderr / (est.mean * math.log(2)), est


# ---- observables of unitary circuits


def _pauli_masks(O: str, L: int):
    O = O.upper()
    if len(O) != L:
        raise ValueError(f"operator string has length {len(O)}, expected {L}")
    bad = set(O) - set("IXYZ")
    if bad:
        raise UnsupportedCircuitError(f"not an automaton operator: {sorted(bad)}")
    x = np.array([ch in "XY" for ch in O], dtype=np.uint8)
    z = np.array([ch in "ZY" for ch in O], dtype=np.uint8)
    n_y = O.count("Y")
    return x, z, n_y


@njit(cache=True)
def _observable_phases(strings, xmask, zmask, n_y, kinds, a, b, angles, outcomes):
    n, L = strings.shape
    out = np.empty(n, dtype=np.complex128)
    s = np.empty(L, dtype=np.uint8)
    for j in range(n):
        s[:] = strings[j]
        q, f = _forward(s, kinds, a, b, angles)
        # O = i^{n_y} X^x Z^z acting on |s>
        q2 = n_y
        flips = False
        for x in range(L):
            if zmask[x] and s[x]:
                q2 += 2
            if xmask[x]:
                flips = True
                s[x] ^= 1
        if flips:
            qb, fb = _backward(s, kinds, a, b, angles, outcomes)
            ph = (q + q2 - qb) * (math.pi / 2) + (f - fb)
        else:
            # diagonal O: the circuit phases cancel exactly
            ph = (q2 % 4) * (math.pi / 2)
        out[j] = complex(math.cos(ph), math.sin(ph)) if flips else _I_POW[q2 % 4]
    return out


def estimate_observable(c: Circuit, O: str, M: int, rng: np.random.Generator) -> ObservableEstimate:
    """Estimate ``<psi_0| U^dag O U |psi_0>`` for a Pauli-type automaton ``O``
    given as a string over ``IXYZ`` (site ``i`` is character ``i``)."""
    flat = _flat_for_mc(c)
    if np.any(flat.kinds == GateKind.COMPOSITE_MEASURE):
        raise UnsupportedCircuitError("observable estimation needs a unitary circuit")
    x, z, n_y = _pauli_masks(O, c.L)
    args = _kernel_args(flat)
    vals = []
    done = 0
    while done < M:
        k = min(BATCH, M - done)
        strings = rng.integers(0, 2, size=(k, c.L), dtype=np.uint8)
        vals.append(_observable_phases(strings, x, z, n_y, *args))
        done += k
    v = np.concatenate(vals)
    mean = complex(np.mean(v))
    se = float(np.sqrt(np.sum(np.abs(v - mean) ** 2) / max(len(v) - 1, 1) / len(v))) if len(v) > 1 else 0.0
    return ObservableEstimate(mean, se, len(v))


# ---- bit-string coincidence probability


def estimate_p_same(spec: CircuitSpec, trials: int, *, first_trajectory: int = 0) -> np.ndarray:
    """``P(t)``: fraction of independent random pairs (each with its own
    realization) that coincide on the system at time ``t``."""
    if trials < 1:
        raise ValueError("need at least one trial")
    D = dp.hamming_ensemble(spec, trials, "random-pair", first_trajectory=first_trajectory)
    return (D == 0).mean(axis=0)


def truncate(c: Circuit, t: int) -> Circuit:
    """The realization up to and including step ``t``."""
    layers = [l for l in c.layers if l.step <= t]
    return Circuit(c.L, layers, c.model, c.boundary, min(t, c.steps), c.n_system)
