"""Gate set, circuit containers and the generators for the circuit families.

Circuits are stored layer by layer as small numpy arrays rather than lists
of gate objects: a 512-site run for ``2 * 10**4`` steps holds tens of
millions of gates.  :class:`Gate` objects are materialised on demand.

Site convention: a two-site gate carries ``sites = (first, second)``.
``CNOT_L`` uses the first site as control, ``CNOT_R`` the second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterator, Sequence

import numpy as np

from . import rng as streams


class GateKind(IntEnum):
    CNOT_L = 0
    CNOT_R = 1
    CZ = 2
    SWAP = 3
    H = 4
    RZ = 5
    COMPOSITE_MEASURE = 6


TWO_SITE = frozenset({GateKind.CNOT_L, GateKind.CNOT_R, GateKind.CZ, GateKind.SWAP, GateKind.RZ})
CLIFFORD = frozenset({GateKind.CNOT_L, GateKind.CNOT_R, GateKind.CZ, GateKind.SWAP, GateKind.H})


class Model(str, Enum):
    QA_PURIFICATION = "QA_PURIFICATION"
    QA_CLIFFORD_ENTANGLEMENT = "QA_CLIFFORD_ENTANGLEMENT"
    QA_NONCLIFFORD = "QA_NONCLIFFORD"
    NONQA_CLIFFORD = "NONQA_CLIFFORD"
    # purification protocol driven by the non-QA step (EPR pairs + H layers)
    NONQA_PURIFICATION = "NONQA_PURIFICATION"

    @property
    def purification(self) -> bool:
        return self in (Model.QA_PURIFICATION, Model.NONQA_PURIFICATION)

    @property
    def automaton(self) -> bool:
        return self in (Model.QA_PURIFICATION, Model.QA_CLIFFORD_ENTANGLEMENT, Model.QA_NONCLIFFORD)

    @property
    def clifford(self) -> bool:
        return self is not Model.QA_NONCLIFFORD


class Boundary(str, Enum):
    PERIODIC = "periodic"
    OPEN = "open"


class UnsupportedGateError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: GateKind
    sites: tuple[int, ...]
    angles: tuple[float, float, float] | None = None
    outcome: int | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        arity = 2 if kind in TWO_SITE else 1
        if len(self.sites) != arity:
            raise ValueError(f"{kind.name} takes {arity} site(s), got {self.sites}")
        if arity == 2 and self.sites[0] == self.sites[1]:
            raise ValueError(f"{kind.name} needs two distinct sites")
        if any(s < 0 for s in self.sites):
            raise ValueError("negative site index")
        if (self.angles is not None) != (kind is GateKind.RZ):
            raise ValueError("angles are required for RZ and forbidden otherwise")
        if self.angles is not None:
            if len(self.angles) != 3:
                raise ValueError("RZ takes three angles")
            object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if kind is GateKind.COMPOSITE_MEASURE:
            if self.outcome not in (0, 1):
                raise ValueError("a composite measurement needs an outcome in {0, 1}")
        elif self.outcome is not None:
            raise ValueError("only composite measurements carry an outcome")


def gate_permutation(g: Gate, bits: Sequence[int]) -> tuple[int, ...]:
    """Image of the local basis state ``bits`` under the automaton gate ``g``."""
    _check_automaton(g, bits)
    k = g.kind
    if k is GateKind.CNOT_L:
        return (bits[0], bits[1] ^ bits[0])
    if k is GateKind.CNOT_R:
        return (bits[0] ^ bits[1], bits[1])
    if k is GateKind.SWAP:
        return (bits[1], bits[0])
    return tuple(bits)


def gate_phase(g: Gate, bits: Sequence[int]) -> complex:
    """Phase picked up by the basis state ``bits`` (pre-permutation values)."""
    _check_automaton(g, bits)
    k = g.kind
    if k is GateKind.CZ:
        return -1.0 + 0j if bits[0] and bits[1] else 1.0 + 0j
    if k is GateKind.RZ:
        z1 = 1 - 2 * bits[0]
        z2 = 1 - 2 * bits[1]
        t1, t2, t3 = g.angles
        return complex(np.exp(1j * (t1 * z1 + t2 * z2 + t3 * z1 * z2)))
    return 1.0 + 0j


def invert_gate(g: Gate) -> Gate:
    if g.kind is GateKind.COMPOSITE_MEASURE:
        raise UnsupportedGateError("projective measurements are not invertible")
    if g.kind is GateKind.RZ:
        return Gate(GateKind.RZ, g.sites, tuple(-a for a in g.angles))
    return g


def _check_automaton(g: Gate, bits: Sequence[int]) -> None:
    if g.kind in (GateKind.COMPOSITE_MEASURE, GateKind.H):
        raise UnsupportedGateError(f"{g.kind.name} is not an automaton gate")
    if len(bits) != len(g.sites):
        raise ValueError(f"{g.kind.name} acts on {len(g.sites)} bits, got {len(bits)}")


@dataclass
class Layer:
    """Gates acting on disjoint sites at one time slice.

    ``b`` is -1 for one-site gates, ``angles`` rows are zero except for RZ,
    and ``outcomes`` is -1 except for composite measurements.
    """

    kinds: np.ndarray
    a: np.ndarray
    b: np.ndarray
    angles: np.ndarray
    outcomes: np.ndarray
    step: int = 0

    def __post_init__(self):
        n = len(self.kinds)
        self.kinds = np.asarray(self.kinds, dtype=np.int8)
        self.a = np.asarray(self.a, dtype=np.int32)
        self.b = np.asarray(self.b, dtype=np.int32)
        self.angles = np.asarray(self.angles, dtype=np.float64).reshape(n, 3)
        self.outcomes = np.asarray(self.outcomes, dtype=np.int8)
        if not (len(self.a) == len(self.b) == len(self.outcomes) == n):
            raise ValueError("layer arrays have inconsistent lengths")
        used = np.concatenate([self.a, self.b[self.b >= 0]])
        if len(np.unique(used)) != len(used):
            raise ValueError("gates within a layer must act on disjoint sites")

    def __len__(self) -> int:
        return len(self.kinds)

    @classmethod
    def from_gates(cls, gates: Sequence[Gate], step: int = 0) -> "Layer":
        n = len(gates)
        a = np.array([g.sites[0] for g in gates], dtype=np.int32)
        b = np.array([g.sites[1] if len(g.sites) == 2 else -1 for g in gates], dtype=np.int32)
        angles = np.zeros((n, 3))
        for i, g in enumerate(gates):
            if g.angles is not None:
                angles[i] = g.angles
        outcomes = np.array([-1 if g.outcome is None else g.outcome for g in gates], dtype=np.int8)
        return cls(np.array([int(g.kind) for g in gates], dtype=np.int8), a, b, angles, outcomes, step)

    @property
    def gates(self) -> list[Gate]:
        out = []
        for k, a, b, ang, o in zip(self.kinds, self.a, self.b, self.angles, self.outcomes):
            kind = GateKind(int(k))
            sites = (int(a), int(b)) if b >= 0 else (int(a),)
            out.append(
                Gate(
                    kind,
                    sites,
                    tuple(ang) if kind is GateKind.RZ else None,
                    int(o) if kind is GateKind.COMPOSITE_MEASURE else None,
                )
            )
        return out

    def max_site(self) -> int:
        return int(max(self.a.max(initial=-1), self.b.max(initial=-1)))


@dataclass
class Circuit:
    """One fully explicit disorder realization, outcomes included."""

    L: int
    layers: list[Layer]
    model: Model | None = None
    boundary: Boundary = Boundary.PERIODIC
    steps: int = 0
    n_system: int | None = None

    def __post_init__(self):
        if self.n_system is None:
            self.n_system = self.L
        for layer in self.layers:
            if len(layer) and layer.max_site() >= self.L:
                raise ValueError("gate site out of range")

    @property
    def measurement_events(self) -> list[tuple[int, int, int]]:
        events = []
        for t, layer in enumerate(self.layers):
            sel = layer.kinds == GateKind.COMPOSITE_MEASURE
            events.extend((t, int(s), int(o)) for s, o in zip(layer.a[sel], layer.outcomes[sel]))
        return events

    def kinds_used(self) -> set[GateKind]:
        used = set()
        for layer in self.layers:
            used.update(GateKind(int(k)) for k in np.unique(layer.kinds))
        return used

    def flat(self) -> "FlatCircuit":
        return FlatCircuit.from_layers(self.layers)


@dataclass
class FlatCircuit:
    """Concatenated gate arrays for compiled kernels; layer ``i`` spans
    ``start[i]:start[i + 1]``."""

    kinds: np.ndarray
    a: np.ndarray
    b: np.ndarray
    angles: np.ndarray
    outcomes: np.ndarray
    start: np.ndarray

    @classmethod
    def from_layers(cls, layers: Sequence[Layer]) -> "FlatCircuit":
        start = np.zeros(len(layers) + 1, dtype=np.int64)
        start[1:] = np.cumsum([len(l) for l in layers])
        if layers:
            cat = lambda name: np.concatenate([getattr(l, name) for l in layers])
            return cls(cat("kinds"), cat("a"), cat("b"), cat("angles"), cat("outcomes"), start)
        return cls(
            np.zeros(0, np.int8), np.zeros(0, np.int32), np.zeros(0, np.int32),
            np.zeros((0, 3)), np.zeros(0, np.int8), start,
        )


@dataclass(frozen=True)
class CircuitSpec:
    model: Model
    L: int
    T: int
    p: float
    boundary: Boundary = Boundary.PERIODIC
    master_seed: int = 0
    trajectory_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "model", Model(self.model))
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"measurement rate p={self.p} outside [0, 1]")
        if self.L < 2 or self.L % 2:
            raise ValueError(f"brickwork models need an even L >= 2, got {self.L}")
        if self.T < 0:
            raise ValueError("T must be non-negative")

    @property
    def n_qubits(self) -> int:
        return 2 * self.L if self.model.purification else self.L

    def with_trajectory(self, index: int) -> "CircuitSpec":
        return CircuitSpec(self.model, self.L, self.T, self.p, self.boundary, self.master_seed, index)


def brick_pairs(n: int, parity: int, boundary: Boundary) -> np.ndarray:
    """Nearest-neighbour pairs ``(i, i + 1)`` starting at ``parity``; the
    periodic odd layer closes across the seam with ``(n - 1, 0)``."""
    first = np.arange(parity, n - 1, 2, dtype=np.int32)
    pairs = np.stack([first, first + 1], axis=1)
    if parity == 1 and Boundary(boundary) is Boundary.PERIODIC and n > 2:
        pairs = np.vstack([pairs, np.array([[n - 1, 0]], dtype=np.int32)])
    return pairs


def layers_per_step(model: Model) -> int:
    """Number of brickwork layers (random gate draws) per time step."""
    return 1 if Model(model) is Model.QA_NONCLIFFORD else 2


def step_parities(model: Model, step: int) -> tuple[int, ...]:
    if Model(model) is Model.QA_NONCLIFFORD:
        return ((step - 1) % 2,)
    return (0, 1)


NONCLIFFORD_BRICKS = np.array(
    [GateKind.CNOT_L, GateKind.CNOT_R, GateKind.SWAP, GateKind.RZ], dtype=np.int8
)


def _unitary_layer(kinds, pairs, angles, step) -> Layer:
    n = len(pairs)
    return Layer(kinds, pairs[:, 0], pairs[:, 1], angles, np.full(n, -1, np.int8), step)


def _single_site_layer(kind: GateKind, sites, step, outcomes=None) -> Layer:
    n = len(sites)
    if outcomes is None:
        outcomes = np.full(n, -1, np.int8)
    return Layer(np.full(n, int(kind), np.int8), sites, np.full(n, -1, np.int32), np.zeros((n, 3)), outcomes, step)


def iter_layers(spec: CircuitSpec) -> Iterator[Layer]:
    """Stream the layers of the realization fixed by ``spec``.

    Draw pattern per step (one stream per purpose, doubles only):
    ``gates``: ``(layers_per_step, L // 2)``; ``angles`` (non-Clifford):
    ``(L // 2, 3)``; ``hadamard`` (non-QA): ``(L,)``; ``measure``: ``(L,)``;
    ``outcomes``: ``(L,)``.  Unused trailing entries are discarded.
    """
    model, L = spec.model, spec.L
    key = (spec.master_seed, spec.trajectory_index)
    g_rng = streams.seed_for(*key, streams.GATES)
    m_rng = streams.seed_for(*key, streams.MEASURE)
    o_rng = streams.seed_for(*key, streams.OUTCOMES)
    a_rng = streams.seed_for(*key, streams.ANGLES)
    h_rng = streams.seed_for(*key, streams.HADAMARD)
    nb = L // 2
    pairs_by_parity = [brick_pairs(L, par, spec.boundary) for par in (0, 1)]

    if model.purification:
        sites = np.arange(L, dtype=np.int32)
        yield Layer(
            np.full(L, int(GateKind.CZ), np.int8), sites, sites + L,
            np.zeros((L, 3)), np.full(L, -1, np.int8), 0,
        )

    for t in range(1, spec.T + 1):
        u = g_rng.random((layers_per_step(model), nb))
        for row, parity in enumerate(step_parities(model, t)):
            pairs = pairs_by_parity[parity]
            n = len(pairs)
            if model is Model.QA_NONCLIFFORD:
                ang = a_rng.random((nb, 3))[:n] * (2 * math.pi)
                if n == 0:
                    continue
                kinds = NONCLIFFORD_BRICKS[np.floor(u[row, :n] * 4).astype(np.int64)]
                ang[kinds != GateKind.RZ] = 0.0
                yield _unitary_layer(kinds, pairs, ang, t)
                continue
            if n == 0:
                continue
            kinds = np.where(u[row, :n] < 0.5, GateKind.CNOT_L, GateKind.CNOT_R).astype(np.int8)
            yield _unitary_layer(kinds, pairs, np.zeros((n, 3)), t)
            if model is not Model.QA_PURIFICATION:
                yield _unitary_layer(np.full(n, int(GateKind.CZ), np.int8), pairs, np.zeros((n, 3)), t)
        if model in (Model.NONQA_CLIFFORD, Model.NONQA_PURIFICATION):
            hs = np.flatnonzero(h_rng.random(L) < 0.5).astype(np.int32)
            if len(hs):
                yield _single_site_layer(GateKind.H, hs, t)
        measured = m_rng.random(L) < spec.p
        flips = (o_rng.random(L) < 0.5).astype(np.int8)
        ms = np.flatnonzero(measured).astype(np.int32)
        if len(ms):
            yield _single_site_layer(GateKind.COMPOSITE_MEASURE, ms, t, flips[ms])


def generate_circuit(spec: CircuitSpec) -> Circuit:
    return Circuit(
        L=spec.n_qubits,
        layers=list(iter_layers(spec)),
        model=spec.model,
        boundary=spec.boundary,
        steps=spec.T,
        n_system=spec.L,
    )
