import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qamipt import circuit_io
from qamipt.circuit import (
    Boundary,
    Circuit,
    CircuitSpec,
    Gate,
    GateKind,
    Layer,
    Model,
    UnsupportedGateError,
    brick_pairs,
    gate_permutation,
    gate_phase,
    generate_circuit,
    invert_gate,
)

UNITARY = [GateKind.CNOT_L, GateKind.CNOT_R, GateKind.CZ, GateKind.SWAP, GateKind.RZ]
angles = st.tuples(*[st.floats(0, 2 * math.pi, allow_nan=False)] * 3)


def make(kind, angles=None):
    return Gate(kind, (0, 1), angles if kind is GateKind.RZ else None)


# ---- gates


def test_cnot_l_flips_target():
    assert gate_permutation(make(GateKind.CNOT_L), (1, 0)) == (1, 1)


def test_cnot_r_uses_second_site_as_control():
    assert gate_permutation(make(GateKind.CNOT_R), (0, 1)) == (1, 1)
    assert gate_permutation(make(GateKind.CNOT_R), (1, 0)) == (1, 0)


def test_cz_is_diagonal():
    assert gate_permutation(make(GateKind.CZ), (1, 1)) == (1, 1)
    assert gate_phase(make(GateKind.CZ), (1, 1)) == -1
    assert gate_phase(make(GateKind.CZ), (0, 0)) == 1


def test_swap():
    assert gate_permutation(make(GateKind.SWAP), (0, 1)) == (1, 0)


def test_rz_phase_on_11():
    th = 0.7
    g = Gate(GateKind.RZ, (0, 1), (0.0, 0.0, th))
    assert gate_phase(g, (1, 1)) == pytest.approx(np.exp(1j * th))


def test_rz_phase_general():
    g = Gate(GateKind.RZ, (0, 1), (0.3, 0.5, 0.9))
    # z = (+1, -1) for bits (0, 1)
    assert gate_phase(g, (0, 1)) == pytest.approx(np.exp(1j * (0.3 - 0.5 - 0.9)))


@pytest.mark.parametrize("kind", [GateKind.H, GateKind.COMPOSITE_MEASURE])
def test_non_automaton_kinds_rejected(kind):
    g = Gate(kind, (0,), outcome=0 if kind is GateKind.COMPOSITE_MEASURE else None)
    with pytest.raises(UnsupportedGateError):
        gate_permutation(g, (0,))
    with pytest.raises(UnsupportedGateError):
        gate_phase(g, (0,))


@pytest.mark.parametrize("kind", UNITARY)
@given(ang=angles)
def test_permutation_is_bijection_with_unit_phase(kind, ang):
    g = make(kind, ang)
    images = {gate_permutation(g, b) for b in itertools.product((0, 1), repeat=2)}
    assert len(images) == 4
    for b in itertools.product((0, 1), repeat=2):
        assert abs(gate_phase(g, b)) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("kind", UNITARY)
@given(ang=angles)
def test_inverse_round_trip(kind, ang):
    g = make(kind, ang)
    inv = invert_gate(g)
    for b in itertools.product((0, 1), repeat=2):
        assert gate_permutation(inv, gate_permutation(g, b)) == b
        # phases of g and its inverse cancel along the orbit
        assert gate_phase(inv, gate_permutation(g, b)) * gate_phase(g, b) == pytest.approx(1.0)


def test_invert_examples():
    assert invert_gate(make(GateKind.CNOT_L)) == make(GateKind.CNOT_L)
    assert invert_gate(Gate(GateKind.RZ, (0, 1), (1.0, 2.0, 3.0))).angles == (-1.0, -2.0, -3.0)
    with pytest.raises(UnsupportedGateError):
        invert_gate(Gate(GateKind.COMPOSITE_MEASURE, (0,), outcome=1))


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate(GateKind.CNOT_L, (1, 1))
    with pytest.raises(ValueError):
        Gate(GateKind.CZ, (0,))
    with pytest.raises(ValueError):
        Gate(GateKind.CZ, (0, 1), (0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        Gate(GateKind.RZ, (0, 1))
    with pytest.raises(ValueError):
        Gate(GateKind.COMPOSITE_MEASURE, (0,))


def test_layer_rejects_overlap():
    with pytest.raises(ValueError):
        Layer.from_gates([make(GateKind.CZ), Gate(GateKind.H, (1,))])


def test_circuit_rejects_out_of_range_site():
    with pytest.raises(ValueError):
        Circuit(2, [Layer.from_gates([Gate(GateKind.CZ, (1, 2))])])


# ---- generators


def test_brick_pairs_boundaries():
    assert brick_pairs(6, 1, Boundary.PERIODIC).tolist() == [[1, 2], [3, 4], [5, 0]]
    assert brick_pairs(6, 1, Boundary.OPEN).tolist() == [[1, 2], [3, 4]]
    assert brick_pairs(6, 0, Boundary.OPEN).tolist() == [[0, 1], [2, 3], [4, 5]]


def test_p_zero_has_no_measurements():
    c = generate_circuit(CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 8, 5, 0.0))
    assert c.measurement_events == []


def test_purification_starts_with_epr_layer():
    c = generate_circuit(CircuitSpec(Model.QA_PURIFICATION, 4, 3, 0.3, master_seed=2))
    first = c.layers[0].gates
    assert [g.kind for g in first] == [GateKind.CZ] * 4
    assert [g.sites for g in first] == [(0, 4), (1, 5), (2, 6), (3, 7)]
    assert c.L == 8 and c.n_system == 4
    for layer in c.layers[1:]:
        assert layer.max_site() < 4


def test_measurement_rate_concentrates():
    total, events = 0, 0
    for k in range(100):
        c = generate_circuit(CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 64, 1000, 0.137, master_seed=5, trajectory_index=k))
        events += len(c.measurement_events)
        total += 64 * 1000
    assert abs(events / total - 0.137) < 0.005


def test_generation_is_deterministic():
    spec = CircuitSpec(Model.QA_NONCLIFFORD, 10, 30, 0.2, master_seed=9, trajectory_index=4)
    assert circuit_io.dumps(generate_circuit(spec)) == circuit_io.dumps(generate_circuit(spec))
    other = spec.with_trajectory(5)
    assert circuit_io.dumps(generate_circuit(spec)) != circuit_io.dumps(generate_circuit(other))


def test_clifford_bricks_are_cnot_then_cz():
    c = generate_circuit(CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 8, 2, 0.0, master_seed=1))
    kinds = [set(GateKind(int(k)) for k in l.kinds) for l in c.layers]
    assert kinds[0] <= {GateKind.CNOT_L, GateKind.CNOT_R}
    assert kinds[1] == {GateKind.CZ}
    assert (c.layers[0].a == c.layers[1].a).all()


def test_nonclifford_uses_all_four_bricks():
    c = generate_circuit(CircuitSpec(Model.QA_NONCLIFFORD, 64, 200, 0.0, master_seed=1))
    counts = {}
    for l in c.layers:
        for k in l.kinds:
            counts[int(k)] = counts.get(int(k), 0) + 1
    total = sum(counts.values())
    assert set(counts) == {GateKind.CNOT_L, GateKind.CNOT_R, GateKind.SWAP, GateKind.RZ}
    for v in counts.values():
        assert abs(v / total - 0.25) < 0.02


def test_nonqa_has_h_layers():
    c = generate_circuit(CircuitSpec(Model.NONQA_CLIFFORD, 16, 10, 0.1, master_seed=1))
    assert GateKind.H in c.kinds_used()
    c = generate_circuit(CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 16, 10, 0.1, master_seed=1))
    assert GateKind.H not in c.kinds_used()


@pytest.mark.parametrize("kw", [dict(L=7), dict(p=1.5), dict(p=-0.1), dict(T=-1)])
def test_spec_validation(kw):
    args = dict(model=Model.QA_CLIFFORD_ENTANGLEMENT, L=8, T=3, p=0.1)
    args.update(kw)
    with pytest.raises(ValueError):
        CircuitSpec(**args)


def test_measurement_events_match_gates():
    c = generate_circuit(CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 12, 20, 0.3, master_seed=3))
    n_gates = sum(int((l.kinds == GateKind.COMPOSITE_MEASURE).sum()) for l in c.layers)
    assert n_gates == len(c.measurement_events)
    assert all(o in (0, 1) for _, _, o in c.measurement_events)


# ---- serialization


@settings(max_examples=25, deadline=None)
@given(
    model=st.sampled_from(list(Model)),
    L=st.sampled_from([2, 4, 6]),
    T=st.integers(0, 6),
    p=st.floats(0, 1),
    seed=st.integers(0, 2**32),
)
def test_serialization_round_trip(model, L, T, p, seed):
    c = generate_circuit(CircuitSpec(model, L, T, p, master_seed=seed))
    text = circuit_io.dumps(c)
    back = circuit_io.loads(text)
    assert circuit_io.dumps(back) == text
    assert back.L == c.L and back.steps == c.steps and back.model == c.model
    for l1, l2 in zip(c.layers, back.layers):
        assert (l1.kinds == l2.kinds).all() and (l1.outcomes == l2.outcomes).all()
        assert (l1.angles == l2.angles).all()


def test_loads_rejects_garbage():
    with pytest.raises(ValueError):
        circuit_io.loads("not a circuit\n")
