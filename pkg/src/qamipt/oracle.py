"""Dense statevector reference for small systems (``L <= 14``).

Basis index convention: site ``i`` is bit ``i`` of the index, so
``|m> = |m_0 m_1 ... m_{L-1}>`` has index ``sum_i m_i 2**i``.  Internally
the vector is viewed as a tensor whose axis ``L - 1 - i`` is site ``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .circuit import Circuit, Gate, GateKind, Layer

MAX_QUBITS = 14
NORM_TOL = 1e-12

_H = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)


class ZeroProbabilityError(ValueError):
    """A recorded measurement outcome has zero Born probability."""


@dataclass
class DenseState:
    L: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.L > MAX_QUBITS:
            raise ValueError(f"dense oracle is capped at {MAX_QUBITS} qubits, got {self.L}")
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128).reshape(2**self.L)

    @classmethod
    def plus_state(cls, L: int) -> "DenseState":
        return cls(L, np.full(2**L, 2.0 ** (-L / 2), dtype=np.complex128))

    @classmethod
    def basis_state(cls, L: int, bits: Iterable[int]) -> "DenseState":
        amp = np.zeros(2**L, dtype=np.complex128)
        amp[index_of(bits)] = 1.0
        return cls(L, amp)

    def copy(self) -> "DenseState":
        return DenseState(self.L, self.amplitudes.copy())

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.L)

    def axis(self, site: int) -> int:
        if not 0 <= site < self.L:
            raise IndexError(f"site {site} out of range")
        return self.L - 1 - site

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def amplitude(self, bits: Iterable[int]) -> complex:
        return complex(self.amplitudes[index_of(bits)])


def index_of(bits: Iterable[int]) -> int:
    return sum(int(b) << i for i, b in enumerate(bits))


def bits_of(index: int, L: int) -> np.ndarray:
    return (index >> np.arange(L)) & 1


def _two_site_view(s: DenseState, a: int, b: int) -> np.ndarray:
    """View with axes (..., a, b) moved last; returned array is a copy."""
    t = s.tensor()
    return np.moveaxis(t, (s.axis(a), s.axis(b)), (-2, -1))


def _write_back(s: DenseState, moved: np.ndarray, a: int, b: int) -> None:
    t = np.moveaxis(moved, (-2, -1), (s.axis(a), s.axis(b)))
    s.amplitudes = np.ascontiguousarray(t).reshape(-1)


def _diag_phase(g: Gate) -> np.ndarray:
    """Phases of |00>, |01>, |10>, |11> (first index = first site)."""
    if g.kind is GateKind.CZ:
        return np.array([[1, 1], [1, -1]], dtype=np.complex128)
    t1, t2, t3 = g.angles
    out = np.empty((2, 2), dtype=np.complex128)
    for m0 in (0, 1):
        for m1 in (0, 1):
            z0, z1 = 1 - 2 * m0, 1 - 2 * m1
            out[m0, m1] = np.exp(1j * (t1 * z0 + t2 * z1 + t3 * z0 * z1))
    return out


def apply_gate(s: DenseState, g: Gate) -> DenseState:
    """Exact action of a unitary gate (in place; returns ``s``)."""
    k = g.kind
    if k is GateKind.COMPOSITE_MEASURE:
        raise ValueError("use composite_measure for measurements")
    if k is GateKind.H:
        t = np.moveaxis(s.tensor(), s.axis(g.sites[0]), -1)
        t = t @ _H.T
        s.amplitudes = np.ascontiguousarray(np.moveaxis(t, -1, s.axis(g.sites[0]))).reshape(-1)
        return s
    a, b = g.sites
    v = _two_site_view(s, a, b).copy()
    if k in (GateKind.CZ, GateKind.RZ):
        v *= _diag_phase(g)
    elif k is GateKind.CNOT_L:
        v[..., 1, :] = v[..., 1, ::-1].copy()
    elif k is GateKind.CNOT_R:
        v[..., :, 1] = v[..., ::-1, 1].copy()
    elif k is GateKind.SWAP:
        v = np.swapaxes(v, -1, -2).copy()
    _write_back(s, v, a, b)
    return s


def composite_measure(s: DenseState, site: int, outcome: int) -> tuple[DenseState, float]:
    """Project ``site`` onto ``outcome``, renormalise, apply H.

    Returns the state (modified in place) and the Born probability."""
    if outcome not in (0, 1):
        raise ValueError("outcome must be 0 or 1")
    t = np.moveaxis(s.tensor(), s.axis(site), -1).copy()
    prob = float(np.sum(np.abs(t[..., outcome]) ** 2))
    if prob <= 1e-14:
        raise ZeroProbabilityError(f"outcome {outcome} at site {site} has zero probability")
    t[..., 1 - outcome] = 0.0
    t /= math.sqrt(prob)
    t = t @ _H.T
    s.amplitudes = np.ascontiguousarray(np.moveaxis(t, -1, s.axis(site))).reshape(-1)
    return s, prob


def apply_layer(s: DenseState, layer: Layer) -> DenseState:
    for g in layer.gates:
        if g.kind is GateKind.COMPOSITE_MEASURE:
            composite_measure(s, g.sites[0], g.outcome)
        else:
            apply_gate(s, g)
    return s


def run_circuit(circuit: Circuit, state: DenseState | None = None) -> DenseState:
    s = DenseState.plus_state(circuit.L) if state is None else state
    for layer in circuit.layers:
        apply_layer(s, layer)
    return s


def purity(s: DenseState, region: Iterable[int]) -> float:
    """``Tr rho_A^2`` from the ``2^|A| x 2^|A|`` reduced matrix."""
    region = sorted(set(int(i) for i in region))
    if not region or len(region) == s.L:
        return float(s.norm() ** 4)
    axes_a = [s.axis(i) for i in region]
    axes_b = [ax for ax in range(s.L) if ax not in axes_a]
    psi = np.transpose(s.tensor(), axes_a + axes_b).reshape(2 ** len(axes_a), -1)
    rho_a = psi @ psi.conj().T
    return float(np.real(np.sum(rho_a * rho_a.conj())))


def renyi2_exact(s: DenseState, region: Iterable[int]) -> float:
    return -math.log2(purity(s, region))


def expectation_pauli(s: DenseState, x_sites: Iterable[int] = (), z_sites: Iterable[int] = ()) -> complex:
    """``<psi| X_{x_sites} Z_{z_sites} |psi>`` (Z applied first)."""
    idx = np.arange(2**s.L)
    zmask = sum(1 << i for i in z_sites)
    xmask = sum(1 << i for i in x_sites)
    signs = 1 - 2 * (np.array([bin(i & zmask).count("1") for i in idx]) & 1)
    out = s.amplitudes * signs
    flipped = np.empty_like(out)
    flipped[idx ^ xmask] = out
    return complex(np.vdot(s.amplitudes, flipped))
