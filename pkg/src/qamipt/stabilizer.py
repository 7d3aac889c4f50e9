"""Stabilizer (Gottesman-Knill) simulation of the Clifford circuit families.

The tableau is stored qubit-major and bit-packed over generators: word
``k`` of ``xs[q]`` holds the X bits of stabilizers ``64k..64k+63`` on qubit
``q``.  Two-qubit gates then cost ``O(n / 64)`` word operations, and the
row products needed by a measurement are done for all affected generators
at once with a bit-sliced mod-4 phase counter.  Destabilizers are kept
alongside (same layout) because they make a deterministic outcome an
``O(n^2)`` lookup instead of an elimination.

Entropies use ``S_A = rank(stabilizers restricted to A) - |A|``, valid for
every Renyi order of a stabilizer state.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from numba import njit

from . import gf2
from .circuit import CLIFFORD, Circuit, CircuitSpec, Gate, GateKind, Layer, iter_layers

log = logging.getLogger(__name__)

_ONE = np.uint64(1)
_ALL = np.uint64(0xFFFFFFFFFFFFFFFF)


class NonCliffordError(ValueError):
    pass


# --------------------------------------------------------------------------
# kernels


@njit(cache=True, inline="always")
def _bit(row, i):
    return (row[i >> 6] >> np.uint64(i & 63)) & _ONE


@njit(cache=True, inline="always")
def _set_bit(row, i, v):
    m = _ONE << np.uint64(i & 63)
    if v:
        row[i >> 6] |= m
    else:
        row[i >> 6] &= ~m


@njit(cache=True)
def _h(X, Z, R, q):
    for k in range(R.shape[0]):
        x = X[q, k]
        z = Z[q, k]
        R[k] ^= x & z
        X[q, k] = z
        Z[q, k] = x


@njit(cache=True)
def _cnot(X, Z, R, c, t):
    for k in range(R.shape[0]):
        R[k] ^= X[c, k] & Z[t, k] & ~(X[t, k] ^ Z[c, k])
        X[t, k] ^= X[c, k]
        Z[c, k] ^= Z[t, k]


@njit(cache=True)
def _cz(X, Z, R, a, b):
    for k in range(R.shape[0]):
        R[k] ^= X[a, k] & X[b, k] & (Z[a, k] ^ Z[b, k])
        Z[a, k] ^= X[b, k]
        Z[b, k] ^= X[a, k]


@njit(cache=True)
def _swap(X, Z, R, a, b):
    for k in range(R.shape[0]):
        x = X[a, k]
        X[a, k] = X[b, k]
        X[b, k] = x
        z = Z[a, k]
        Z[a, k] = Z[b, k]
        Z[b, k] = z


@njit(cache=True)
def _zflip(X, R, q):
    for k in range(R.shape[0]):
        R[k] ^= X[q, k]


@njit(cache=True)
def _rowsum_masked(X, Z, R, M, xp_col, zp_col, rp):
    """Multiply every generator selected by mask ``M`` by the pivot row whose
    bits per qubit are ``xp_col[j], zp_col[j]`` and sign ``rp``."""
    n = X.shape[0]
    W = R.shape[0]
    lo = np.zeros(W, dtype=np.uint64)
    hi = np.zeros(W, dtype=np.uint64)
    for j in range(n):
        xp = xp_col[j]
        zp = zp_col[j]
        if xp == 0 and zp == 0:
            continue
        for k in range(W):
            m = M[k]
            if m == 0:
                continue
            x2 = X[j, k] & m
            z2 = Z[j, k] & m
            if xp and zp:
                plus = z2 & ~x2
                minus = x2 & ~z2
            elif xp:
                plus = z2 & x2
                minus = z2 & ~x2
            else:
                plus = x2 & ~z2
                minus = x2 & z2
            carry = lo[k] & plus
            lo[k] ^= plus
            hi[k] ^= carry
            borrow = ~lo[k] & minus
            lo[k] ^= minus
            hi[k] ^= borrow
            if xp:
                X[j, k] ^= m
            if zp:
                Z[j, k] ^= m
    for k in range(W):
        R[k] ^= hi[k] ^ (M[k] if rp else np.uint64(0))


@njit(cache=True)
def _g(x1, z1, x2, z2):
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


@njit(cache=True)
def _measure_z(XD, ZD, RD, XS, ZS, RS, q, outcome):
    """Projective Z measurement on ``q``.

    Returns ``(actual_outcome, random)``; a random outcome is set to
    ``outcome``, a deterministic one is returned as found."""
    n = XS.shape[0]
    W = RS.shape[0]
    p = -1
    for k in range(W):
        if XS[q, k] != 0:
            p = k * 64 + gf2.ctz(XS[q, k])
            break
    if p >= 0:
        xp_col = np.empty(n, dtype=np.uint64)
        zp_col = np.empty(n, dtype=np.uint64)
        for j in range(n):
            xp_col[j] = _bit(XS[j], p)
            zp_col[j] = _bit(ZS[j], p)
        rp = _bit(RS, p)
        MS = XS[q].copy()
        _set_bit(MS, p, 0)
        MD = XD[q].copy()
        _rowsum_masked(XS, ZS, RS, MS, xp_col, zp_col, rp)
        _rowsum_masked(XD, ZD, RD, MD, xp_col, zp_col, rp)
        # old stabilizer p becomes destabilizer p; stabilizer p becomes +-Z_q
        for j in range(n):
            _set_bit(XD[j], p, xp_col[j])
            _set_bit(ZD[j], p, zp_col[j])
            _set_bit(XS[j], p, 0)
            _set_bit(ZS[j], p, 0)
        _set_bit(RD, p, rp)
        _set_bit(ZS[q], p, 1)
        _set_bit(RS, p, outcome)
        return outcome, True
    # deterministic: Z_q is the product of stabilizers i whose destabilizer
    # anticommutes with Z_q
    sx = np.zeros(n, dtype=np.int64)
    sz = np.zeros(n, dtype=np.int64)
    phase = 0
    for i in range(n):
        if _bit(XD[q], i) == 0:
            continue
        phase += 2 * np.int64(_bit(RS, i))
        for j in range(n):
            x1 = np.int64(_bit(XS[j], i))
            z1 = np.int64(_bit(ZS[j], i))
            phase += _g(x1, z1, sx[j], sz[j])
            sx[j] ^= x1
            sz[j] ^= z1
    return (phase % 4) // 2, False


@njit(cache=True)
def _apply_ops(XD, ZD, RD, XS, ZS, RS, kinds, a, b, zflips, outcomes, actual):
    """Run a flat gate list.  ``zflips[i]`` encodes the Pauli part of a
    Clifford RZ (bit 0: Z on a, bit 1: Z on b).  Returns the number of
    deterministic measurements whose outcome contradicted the record."""
    conflicts = 0
    for i in range(kinds.shape[0]):
        k = kinds[i]
        if k == 0:
            _cnot(XD, ZD, RD, a[i], b[i])
            _cnot(XS, ZS, RS, a[i], b[i])
        elif k == 1:
            _cnot(XD, ZD, RD, b[i], a[i])
            _cnot(XS, ZS, RS, b[i], a[i])
        elif k == 2:
            _cz(XD, ZD, RD, a[i], b[i])
            _cz(XS, ZS, RS, a[i], b[i])
        elif k == 3:
            _swap(XD, ZD, RD, a[i], b[i])
            _swap(XS, ZS, RS, a[i], b[i])
        elif k == 4:
            _h(XD, ZD, RD, a[i])
            _h(XS, ZS, RS, a[i])
        elif k == 5:
            if zflips[i] & 1:
                _zflip(XD, RD, a[i])
                _zflip(XS, RS, a[i])
            if zflips[i] & 2:
                _zflip(XD, RD, b[i])
                _zflip(XS, RS, b[i])
        else:
            got, rnd = _measure_z(XD, ZD, RD, XS, ZS, RS, a[i], outcomes[i])
            actual[i] = got
            if not rnd and got != outcomes[i]:
                conflicts += 1
            _h(XD, ZD, RD, a[i])
            _h(XS, ZS, RS, a[i])
    return conflicts


@njit(cache=True)
def _region_rows(XS, ZS, sites):
    W = XS.shape[1]
    rows = np.empty((2 * sites.shape[0], W), dtype=np.uint64)
    for i in range(sites.shape[0]):
        rows[2 * i] = XS[sites[i]]
        rows[2 * i + 1] = ZS[sites[i]]
    return rows


@njit(cache=True)
def _region_entropy(XS, ZS, sites):
    if sites.shape[0] == 0:
        return 0
    return gf2.rank(_region_rows(XS, ZS, sites)) - sites.shape[0]


@njit(cache=True)
def _contiguous_profile(XS, ZS, start, max_len):
    """Entropies of ``[start, start + l)`` (periodic) for ``l = 1..max_len``."""
    n = XS.shape[0]
    sites = np.empty(max_len, dtype=np.int64)
    for l in range(max_len):
        sites[l] = (start + l) % n
    ranks = gf2.prefix_ranks(_region_rows(XS, ZS, sites))
    out = np.empty(max_len, dtype=np.int64)
    for l in range(max_len):
        out[l] = ranks[2 * l + 1] - (l + 1)
    return out


# --------------------------------------------------------------------------
# tableau


def _rz_zflips(angles: np.ndarray) -> np.ndarray:
    """Pauli content of RZ gates whose angles are multiples of pi/2."""
    quarter = angles / (math.pi / 2)
    k = np.rint(quarter).astype(np.int64)
    if np.any(np.abs(quarter - k) > 1e-9):
        raise NonCliffordError("RZ with generic angles is not a Clifford gate")
    odd = k % 2
    return (odd[:, 0] ^ odd[:, 2]) | ((odd[:, 1] ^ odd[:, 2]) << 1)


class Tableau:
    """Pure stabilizer state on ``n`` qubits.

    ``xs``/``zs``/``rs`` hold the stabilizers (see module docstring for the
    layout), ``xd``/``zd``/``rd`` the matching destabilizers.
    """

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("need at least one qubit")
        self.n = n
        W = (n + 63) // 64
        self.xs = np.zeros((n, W), dtype=np.uint64)
        self.zs = np.zeros((n, W), dtype=np.uint64)
        self.rs = np.zeros(W, dtype=np.uint64)
        self.xd = np.zeros((n, W), dtype=np.uint64)
        self.zd = np.zeros((n, W), dtype=np.uint64)
        self.rd = np.zeros(W, dtype=np.uint64)
        self.conflicts = 0
        self.debug = False

    @classmethod
    def plus_state(cls, n: int) -> "Tableau":
        t = cls(n)
        for q in range(n):
            t.xs[q, q >> 6] |= np.uint64(1) << np.uint64(q & 63)
            t.zd[q, q >> 6] |= np.uint64(1) << np.uint64(q & 63)
        return t

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n = self.n
        for name in ("xs", "zs", "rs", "xd", "zd", "rd"):
            setattr(t, name, getattr(self, name).copy())
        t.conflicts = self.conflicts
        t.debug = self.debug
        return t

    @property
    def _arrays(self):
        return self.xd, self.zd, self.rd, self.xs, self.zs, self.rs

    def _run(self, kinds, a, b, angles, outcomes) -> np.ndarray:
        kinds = np.asarray(kinds, dtype=np.int8)
        if len(kinds) == 0:
            return np.zeros(0, dtype=np.int8)
        if np.any(kinds < 0) or np.any(kinds > 6):
            raise ValueError("unknown gate code")
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if a.max() >= self.n or b.max() >= self.n or a.min() < 0:
            raise IndexError("site out of range")
        zflips = np.zeros(len(kinds), dtype=np.int64)
        rz = kinds == GateKind.RZ
        if rz.any():
            zflips[rz] = _rz_zflips(np.asarray(angles)[rz])
        outcomes = np.asarray(outcomes, dtype=np.int64)
        actual = outcomes.copy()
        conflicts = _apply_ops(*self._arrays, kinds, a, b, zflips, outcomes, actual)
        if conflicts:
            log.debug("overrode %d contradicted outcome(s) with deterministic values", conflicts)
            self.conflicts += conflicts
        if self.debug:
            self.validate()
        return actual.astype(np.int8)

    def apply_layer(self, layer: Layer) -> np.ndarray:
        """Apply a layer; returns the realised outcomes (-1 for unitaries)."""
        return self._run(layer.kinds, layer.a, layer.b, layer.angles, layer.outcomes)

    def apply(self, g: Gate) -> "Tableau":
        if g.kind not in CLIFFORD and g.kind not in (GateKind.RZ, GateKind.COMPOSITE_MEASURE):
            raise NonCliffordError(f"{g.kind.name} is not supported")
        self.apply_layer(Layer.from_gates([g]))
        return self

    def composite_measure(self, site: int, outcome: int) -> int:
        """Z-measure ``site`` (post-selecting ``outcome`` when random), then H.
        Returns the outcome actually realised."""
        if not 0 <= site < self.n:
            raise IndexError(f"site {site} out of range")
        if outcome not in (0, 1):
            raise ValueError("outcome must be 0 or 1")
        g = Gate(GateKind.COMPOSITE_MEASURE, (site,), outcome=outcome)
        return int(self.apply_layer(Layer.from_gates([g]))[0])

    def measure_z(self, site: int, outcome: int) -> tuple[int, bool]:
        """Bare Z measurement (no rotation).  Returns ``(outcome, random)``."""
        got, rnd = _measure_z(*self._arrays, site, outcome)
        return int(got), bool(rnd)

    # ---- entropies

    def entropy(self, region: Iterable[int]) -> int:
        sites = np.unique(np.asarray(list(region), dtype=np.int64))
        if len(sites) and (sites[0] < 0 or sites[-1] >= self.n):
            raise IndexError("region out of range")
        return int(_region_entropy(self.xs, self.zs, sites))

    def contiguous_profile(self, start: int, max_len: int) -> np.ndarray:
        """Entropy of the periodic interval ``[start, start + l)`` for ``l = 1..max_len``."""
        return _contiguous_profile(self.xs, self.zs, int(start), int(max_len))

    def mutual_information(self, A: Iterable[int], B: Iterable[int]) -> int:
        A, B = set(A), set(B)
        if A & B:
            raise ValueError("regions overlap")
        return self.entropy(A) + self.entropy(B) - self.entropy(A | B)

    # ---- inspection

    def stabilizers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Unpacked ``(x, z, sign)``: row ``i`` is generator ``i``."""
        x = gf2.unpack_rows(self.xs, self.n).T.copy()
        z = gf2.unpack_rows(self.zs, self.n).T.copy()
        r = gf2.unpack_rows(self.rs[None, :], self.n)[0].copy()
        return x, z, r

    def generators(self) -> list[str]:
        x, z, r = self.stabilizers()
        letters = np.array(["I", "X", "Z", "Y"])
        return [("-" if s else "+") + "".join(letters[xi + 2 * zi]) for xi, zi, s in zip(x, z, r)]

    def dump(self) -> str:
        return "\n".join(self.generators()) + "\n"

    def validate(self) -> None:
        """Raise if generators fail to commute or are dependent."""
        x, z, _ = self.stabilizers()
        sym = (x.astype(np.int64) @ z.T.astype(np.int64) + z.astype(np.int64) @ x.T.astype(np.int64)) % 2
        if sym.any():
            raise AssertionError("stabilizer generators do not commute")
        if gf2.rank_dense(np.hstack([x, z])) != self.n:
            raise AssertionError("stabilizer generators are not independent")


# module-level operations


def init_plus_state(L: int) -> Tableau:
    return Tableau.plus_state(L)


def apply_clifford(t: Tableau, g: Gate) -> Tableau:
    """Conjugate by a unitary gate.  RZ is accepted only at quarter-turn
    angles, where it is Clifford."""
    if g.kind not in CLIFFORD and g.kind is not GateKind.RZ:
        raise NonCliffordError(f"{g.kind.name} is not a unitary Clifford gate")
    return t.apply(g)


def composite_measure(t: Tableau, site: int, outcome: int) -> Tableau:
    t.composite_measure(site, outcome)
    return t


def renyi_entropy(t: Tableau, region: Iterable[int]) -> int:
    return t.entropy(region)


def mutual_information(t: Tableau, A: Iterable[int], B: Iterable[int]) -> int:
    return t.mutual_information(A, B)


# --------------------------------------------------------------------------
# trajectories


def default_sample_times(T: int, dense_until: int = 100, per_decade: int = 20) -> np.ndarray:
    """Every step for ``t < dense_until``, then log-spaced up to ``T``."""
    dense = np.arange(0, min(T, dense_until - 1) + 1)
    if T < dense_until:
        return dense
    tail = np.unique(np.round(np.logspace(np.log10(dense_until), np.log10(T), per_decade * max(int(np.ceil(np.log10(T / dense_until))), 1) + 1)).astype(int))
    return np.unique(np.concatenate([dense, tail[tail <= T]]))


@dataclass
class TrajectoryResult:
    times: np.ndarray
    entropy: np.ndarray  # (n_times, n_probes)
    extra: list  # observer outputs, one per sample time
    conflicts: int = 0


def run_trajectory(
    circuit: Circuit | CircuitSpec,
    probes: Sequence[Sequence[int]] = (),
    sample_times: Sequence[int] | None = None,
    observer=None,
    *,
    stop_when_pure: bool = False,
) -> TrajectoryResult:
    """Replay one realization and sample probe entropies.

    ``circuit`` may be a materialised :class:`Circuit` or a
    :class:`CircuitSpec`, which is streamed layer by layer.  The sample at
    time ``t`` is taken after all layers of step ``t`` (``t = 0`` is the
    state after preparation layers).  ``observer(tableau, t)`` may return
    anything; its outputs are collected in ``extra``.

    With ``stop_when_pure`` the replay ends at the first sample where every
    probe has zero entropy and the remaining samples are set to zero.  This
    is exact for purification runs, where the probe is the whole system and
    later gates never touch the environment.
    """
    if isinstance(circuit, CircuitSpec):
        n, T, layers = circuit.n_qubits, circuit.T, iter_layers(circuit)
    else:
        n, T, layers = circuit.L, circuit.steps, iter(circuit.layers)
    if sample_times is None:
        sample_times = default_sample_times(T)
    sample_times = np.asarray(sorted(set(int(t) for t in sample_times if 0 <= t <= T)), dtype=np.int64)
    probe_arrays = [np.unique(np.asarray(list(pr), dtype=np.int64)) for pr in probes]
    tab = Tableau.plus_state(n)
    ent = np.zeros((len(sample_times), len(probe_arrays)), dtype=np.int64)
    extra = []
    idx = 0

    def sample(t):
        nonlocal idx
        while idx < len(sample_times) and sample_times[idx] == t:
            for j, pr in enumerate(probe_arrays):
                ent[idx, j] = _region_entropy(tab.xs, tab.zs, pr)
            if observer is not None:
                extra.append(observer(tab, t))
            idx += 1

    step = 0
    for layer in layers:
        while layer.step > step:
            sample(step)
            step += 1
            if stop_when_pure and idx > 0 and not ent[idx - 1].any():
                return TrajectoryResult(sample_times, ent, extra, tab.conflicts)
        tab.apply_layer(layer)
    while step <= T:
        sample(step)
        step += 1
    return TrajectoryResult(sample_times, ent, extra, tab.conflicts)
