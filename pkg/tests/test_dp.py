import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qamipt import dp
from qamipt import rng as streams
from qamipt.circuit import Circuit, CircuitSpec, Gate, GateKind, Layer, Model, generate_circuit


def test_exponent_table_consistency():
    assert abs(dp.DP.z - dp.DP.nu_par / dp.DP.nu_perp) < 1e-3
    assert dp.DP.beta_over_nu_par == 0.1595 and dp.DP.theta == 0.302


def test_identical_init_stays_zero():
    run = dp.evolve_pair(CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 32, 50, 0.1), "identical")
    assert (run.D == 0).all()


def test_cnot_spreads_from_control():
    c = Circuit(2, [Layer.from_gates([Gate(GateKind.CNOT_L, (0, 1))], step=1)], steps=1)
    run = dp.evolve_pair_circuit(c, [1, 0], [0, 0])
    assert run.D.tolist() == [1, 2]
    c = Circuit(2, [Layer.from_gates([Gate(GateKind.CNOT_L, (0, 1))], step=1)], steps=1)
    assert dp.evolve_pair_circuit(c, [0, 1], [0, 0]).D.tolist() == [1, 1]


def test_random_pair_starts_at_half():
    D0 = dp.hamming_ensemble(CircuitSpec(Model.QA_PURIFICATION, 200, 0, 0.1), 200)[:, 0]
    assert abs(D0.mean() - 100) < 3 * np.sqrt(50 / 200)


def _initial_pair(spec):
    gen = streams.seed_for(spec.master_seed, spec.trajectory_index, streams.INIT)
    a = (gen.random(spec.L) < 0.5).astype(np.uint8)
    b = (gen.random(spec.L) < 0.5).astype(np.uint8)
    return a, b


@settings(max_examples=25)
@given(
    model=st.sampled_from([Model.QA_PURIFICATION, Model.QA_CLIFFORD_ENTANGLEMENT, Model.QA_NONCLIFFORD]),
    L=st.sampled_from([2, 4, 6, 10, 16]),
    p=st.floats(0, 0.5),
    boundary=st.sampled_from(["periodic", "open"]),
    seed=st.integers(0, 2**31),
)
def test_kernel_matches_gate_by_gate_replay(model, L, p, boundary, seed):
    spec = CircuitSpec(model, L, 40, p, boundary, seed)
    fast = dp.evolve_pair(spec, "random-pair").D
    a, b = _initial_pair(spec)
    c = generate_circuit(spec)
    if c.L != L:  # purification: environment bits are shared by the pair
        a = np.concatenate([a, np.zeros(L, np.uint8)])
        b = np.concatenate([b, np.zeros(L, np.uint8)])
    slow = dp.evolve_pair_circuit(c, a, b).D
    assert np.array_equal(fast, slow)


@settings(max_examples=20)
@given(st.integers(0, 2**31), st.floats(0, 0.4))
def test_absorbing_and_measurement_monotone(seed, p):
    spec = CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 12, 60, p, master_seed=seed)
    c = generate_circuit(spec)
    a, b = _initial_pair(spec)
    D_prev = int(np.sum(a != b))
    dead = D_prev == 0
    from qamipt.circuit import gate_permutation

    for layer in c.layers:
        for g in layer.gates:
            if g.kind is GateKind.COMPOSITE_MEASURE:
                b[g.sites[0]] = a[g.sites[0]]
            else:
                s = list(g.sites)
                a[s] = gate_permutation(g, tuple(a[s]))
                b[s] = gate_permutation(g, tuple(b[s]))
        D = int(np.sum(a != b))
        if layer.kinds[0] == GateKind.COMPOSITE_MEASURE:
            assert D <= D_prev
        if dead:
            assert D == 0
        dead = dead or D == 0
        D_prev = D


def test_h_model_rejected():
    with pytest.raises(ValueError):
        dp.evolve_pair(CircuitSpec(Model.NONQA_CLIFFORD, 8, 5, 0.1))


def test_field_records_difference():
    run = dp.evolve_pair(CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 32, 20, 0.1, master_seed=2), "random-pair", record_field=True)
    assert np.array_equal(run.field.sum(axis=1), run.D)


# ---- bond DP


def test_bond_dp_limits():
    N = dp.run_bond_dp(dp.BondDPLattice(1.0, 32, 10, "fully-occupied"), np.random.default_rng(0))
    assert N[0] == 32 and (N[1:] == 0).all()
    N = dp.run_bond_dp(dp.BondDPLattice(0.0, 32, 10, "fully-occupied"), np.random.default_rng(0))
    assert (N == 32).all()
    N = dp.run_bond_dp(dp.BondDPLattice(0.0, 32, 5, "single-seed", "open"), np.random.default_rng(0))
    assert N.tolist() == [1, 2, 3, 4, 5, 6]


def test_bond_dp_validation():
    with pytest.raises(ValueError):
        dp.BondDPLattice(1.2, 8, 4)
    with pytest.raises(ValueError):
        dp.BondDPLattice(0.2, 8, 4, "half")


# square-lattice bond percolation threshold (open-bond probability 0.6447)
BOND_P_BLOCK = 0.3553


@pytest.fixture(scope="module")
def bond_scan():
    grid = [0.345, 0.350, 0.355, 0.360, 0.365]
    return dp.scan_critical_point("bond_dp", grid, [256], 3000, 200, boundary="periodic", master_seed=4, window=(50, 1000), n_boot=100)


def test_bond_dp_scan_finds_threshold(bond_scan):
    assert abs(bond_scan.p_c - BOND_P_BLOCK) < 0.005


def test_bond_dp_bisection_agrees_with_scan(bond_scan):
    def sample(p):
        return dp.bond_dp_ensemble(dp.BondDPLattice(p, 256, 3000, "fully-occupied", "periodic"), 200, 9)

    p_bis = dp.bisect_critical_point(sample, 0.33, 0.38, (50, 1000), iterations=6)
    assert abs(p_bis - BOND_P_BLOCK) < 0.005
    assert abs(p_bis - bond_scan.p_c) < 0.006


def test_bond_dp_survival_exponent():
    lat = dp.BondDPLattice(BOND_P_BLOCK, 512, 1000, "single-seed", "periodic")
    N = dp.bond_dp_ensemble(lat, 4000, 12)
    surv = (N > 0).mean(axis=0)
    t = np.arange(len(surv))
    sel = (t >= 20) & (t <= 1000)
    delta = -np.polyfit(np.log(t[sel]), np.log(surv[sel]), 1)[0]
    assert abs(delta - dp.DP.beta_over_nu_par) < 0.03


def test_no_straddle_error():
    ens = [dp.bond_dp_ensemble(dp.BondDPLattice(p, 64, 600, "fully-occupied"), 5, 0) for p in (0.0, 0.01, 0.02)]
    with pytest.raises(dp.NoStraddleError):
        dp.curvature_root([0.0, 0.01, 0.02], ens, (10, 500))


def test_root_ignores_far_points():
    # a strongly bent far super-critical point must not drag the root
    p = np.array([0.1, 0.2, 0.3, 0.4, 0.5])
    c = np.array([0.02, 0.015, 0.01, -0.01, -1.0])
    assert dp._root(p, c) == pytest.approx(0.35)


# ---- fronts


def test_front_moves_linearly_without_measurement():
    spec = CircuitSpec(Model.QA_CLIFFORD_ENTANGLEMENT, 400, 150, 0.0, "open", 1)
    prof = dp.front_profile(spec, 200, field_every=5)
    assert prof.velocity > 0
    assert prof.velocity_r2 > 0.99


def test_supercritical_extinction_time_is_logarithmic():
    means = {}
    for L in (64, 1024):
        D = dp.hamming_ensemble(CircuitSpec(Model.QA_PURIFICATION, L, 600, 0.3, "open", 3), 100)
        assert (D[:, -1] == 0).all()
        means[L] = np.argmax(D == 0, axis=1).mean()
    # a 16x larger system lives a fixed additive time longer, not 16x longer
    assert means[1024] / means[64] < 3
