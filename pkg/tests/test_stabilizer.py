import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qamipt import oracle
from qamipt.circuit import CircuitSpec, Gate, GateKind, Model, generate_circuit
from qamipt.crosscheck import replay_both
from qamipt.stabilizer import (
    NonCliffordError,
    Tableau,
    apply_clifford,
    composite_measure,
    default_sample_times,
    init_plus_state,
    mutual_information,
    renyi_entropy,
    run_trajectory,
)


def g(kind, *sites, **kw):
    return Gate(kind, sites, **kw)


def stabilizes(tab: Tableau, state: oracle.DenseState) -> bool:
    """Every signed generator has expectation +1 on ``state``."""
    x, z, r = tab.stabilizers()
    for i in range(tab.n):
        xs = np.flatnonzero(x[i]).tolist()
        zs = np.flatnonzero(z[i]).tolist()
        ny = int(np.sum(x[i] & z[i]))
        val = oracle.expectation_pauli(state, xs, zs) * (1j**ny) * (-1) ** int(r[i])
        if abs(val - 1) > 1e-9:
            return False
    return True


def epr_tableau(L):
    t = init_plus_state(2 * L)
    for i in range(L):
        apply_clifford(t, g(GateKind.CZ, i, L + i))
    return t


# ---- initial state and gates


def test_plus_state_generators():
    assert init_plus_state(2).generators() == ["+XI", "+IX"]


@given(st.integers(1, 70), st.data())
def test_plus_state_has_no_entanglement(L, data):
    t = init_plus_state(L)
    region = data.draw(st.sets(st.integers(0, L - 1)))
    assert renyi_entropy(t, region) == 0


def test_cz_on_plus_pair():
    t = apply_clifford(init_plus_state(2), g(GateKind.CZ, 0, 1))
    assert t.generators() == ["+XZ", "+ZX"]
    assert renyi_entropy(t, [0]) == 1


def test_h_maps_x_to_z():
    t = apply_clifford(init_plus_state(1), g(GateKind.H, 0))
    assert t.generators() == ["+Z"]


def test_cnot_keeps_control_z():
    t = apply_clifford(init_plus_state(2), g(GateKind.H, 0))
    apply_clifford(t, g(GateKind.CNOT_L, 0, 1))
    assert "+ZI" in t.generators()


def test_cnot_r_control_is_second_site():
    t = apply_clifford(init_plus_state(2), g(GateKind.H, 1))  # |+>|0>
    apply_clifford(t, g(GateKind.CNOT_R, 0, 1))
    assert sorted(t.generators()) == ["+IZ", "+XI"]


def test_generic_rz_rejected():
    with pytest.raises(NonCliffordError):
        apply_clifford(init_plus_state(2), Gate(GateKind.RZ, (0, 1), (0.3, 0.0, 0.0)))


def test_quarter_turn_rz_matches_oracle():
    t = init_plus_state(2)
    s = oracle.DenseState.plus_state(2)
    for gate in [Gate(GateKind.RZ, (0, 1), (math.pi / 2, math.pi, 3 * math.pi / 2)), g(GateKind.H, 0)]:
        apply_clifford(t, gate)
        oracle.apply_gate(s, gate)
    assert stabilizes(t, s)


# ---- measurement


def test_measure_plus_state_returns_to_x():
    t = init_plus_state(1)
    assert composite_measure(t, 0, 0).generators() == ["+X"]


def test_measure_plus_state_outcome_one():
    t = init_plus_state(1)
    assert composite_measure(t, 0, 1).generators() == ["-X"]


def test_deterministic_outcome_is_overridden():
    t = apply_clifford(init_plus_state(1), g(GateKind.H, 0))  # |0>
    assert t.composite_measure(0, 1) == 0
    assert t.conflicts == 1
    assert t.generators() == ["+X"]


def test_measure_errors():
    t = init_plus_state(2)
    with pytest.raises(IndexError):
        t.composite_measure(2, 0)
    with pytest.raises(ValueError):
        t.composite_measure(0, 2)


@pytest.mark.parametrize("model", ["QA_CLIFFORD_ENTANGLEMENT", "NONQA_CLIFFORD"])
def test_random_circuit_state_matches_oracle(model):
    for k in range(10):
        c = generate_circuit(CircuitSpec(model, 8, 15, 0.2, master_seed=4, trajectory_index=k))
        tab, s = replay_both(c)
        assert stabilizes(tab, s)
        tab.validate()


# ---- entropies


@pytest.mark.parametrize("L", [1, 4, 64, 130])
def test_epr_entropy_equals_L(L):
    t = epr_tableau(L)
    assert renyi_entropy(t, range(L)) == L


def test_epr_mutual_information():
    t = epr_tableau(3)
    assert mutual_information(t, [1], [4]) == 2
    assert mutual_information(init_plus_state(4), [0, 1], [2, 3]) == 0
    with pytest.raises(ValueError):
        mutual_information(t, [0, 1], [1])


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.data())
def test_complement_symmetry(seed, data):
    c = generate_circuit(CircuitSpec(Model.NONQA_CLIFFORD, 24, 30, 0.15, master_seed=seed))
    tab, _ = replay_both(c) if c.L <= 14 else (None, None)
    if tab is None:
        tab = Tableau.plus_state(c.L)
        for layer in c.layers:
            tab.apply_layer(layer)
    region = data.draw(st.sets(st.integers(0, 23), min_size=1, max_size=23))
    comp = set(range(24)) - region
    assert tab.entropy(region) == tab.entropy(comp)
    assert 0 <= tab.entropy(region) <= min(len(region), len(comp))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 10))
def test_unitaries_inside_region_keep_entropy(seed, cut):
    gen = np.random.default_rng(seed)
    c = generate_circuit(CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 12, 10, 0.1, master_seed=seed))
    tab = Tableau.plus_state(12)
    for layer in c.layers:
        tab.apply_layer(layer)
    A = list(range(cut))
    before = tab.entropy(A)
    kinds = [GateKind.CNOT_L, GateKind.CNOT_R, GateKind.CZ, GateKind.SWAP, GateKind.H]
    for _ in range(50):
        side = A if gen.random() < 0.5 or cut > 10 else list(range(cut, 12))
        k = kinds[gen.integers(len(kinds))]
        if k is GateKind.H or len(side) < 2:
            tab.apply(Gate(GateKind.H, (int(gen.choice(side)),)))
        else:
            a, b = gen.choice(side, 2, replace=False)
            tab.apply(Gate(k, (int(a), int(b))))
    assert tab.entropy(A) == before


def test_contiguous_profile_matches_direct():
    c = generate_circuit(CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 70, 40, 0.1, master_seed=2))
    tab = Tableau.plus_state(70)
    for layer in c.layers:
        tab.apply_layer(layer)
    prof = tab.contiguous_profile(65, 35)
    for l in range(1, 36):
        assert prof[l - 1] == tab.entropy([(65 + i) % 70 for i in range(l)])


# ---- trajectories


def test_purification_without_measurement_keeps_entropy():
    res = run_trajectory(CircuitSpec(Model.QA_PURIFICATION, 16, 30, 0.0, master_seed=1), [range(16)])
    assert (res.entropy[:, 0] == 16).all()


def test_full_measurement_purifies():
    res = run_trajectory(CircuitSpec(Model.QA_PURIFICATION, 16, 10, 1.0, master_seed=1), [range(16)])
    assert res.entropy[0, 0] == 16
    assert (res.entropy[1:, 0] == 0).all()


def test_zero_depth_circuit_is_product():
    res = run_trajectory(CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 16, 0, 0.2), [range(8), [0, 5]])
    assert res.times.tolist() == [0]
    assert (res.entropy == 0).all()


def test_spec_and_circuit_paths_agree():
    spec = CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 20, 40, 0.12, master_seed=3)
    a = run_trajectory(spec, [range(10)])
    b = run_trajectory(generate_circuit(spec), [range(10)])
    assert np.array_equal(a.entropy, b.entropy)


def test_stop_when_pure_fills_zeros():
    spec = CircuitSpec(Model.QA_PURIFICATION, 8, 400, 0.3, master_seed=3)
    a = run_trajectory(spec, [range(8)])
    b = run_trajectory(spec, [range(8)], stop_when_pure=True)
    assert np.array_equal(a.entropy, b.entropy)


def test_area_law_mutual_information_small():
    vals = []
    for k in range(10):
        spec = CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 64, 300, 0.3, master_seed=6, trajectory_index=k)
        res = run_trajectory(spec, [], [300], observer=lambda t, _: mutual_information(t, range(0, 8), range(32, 40)))
        vals.append(res.extra[0])
    assert np.mean(vals) < 0.1


def test_sample_times():
    ts = default_sample_times(10_000)
    assert (np.diff(ts) > 0).all()
    assert ts[0] == 0 and ts[-1] == 10_000
    assert list(ts[:100]) == list(range(100))


def test_dump_format():
    t = epr_tableau(1)
    assert t.dump() == "+XZ\n+ZX\n"
