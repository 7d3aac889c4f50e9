import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qamipt import analysis as an

T = np.unique(np.round(np.logspace(0, 4, 80)))


def _power(exponent, noise=0.0, trials=50, seed=0):
    gen = np.random.default_rng(seed)
    samples = 3.0 * T**exponent * (1 + noise * gen.standard_normal((trials, len(T))))
    return an.Series.from_samples("time", T, samples)


def test_series_validation():
    with pytest.raises(ValueError):
        an.Series("time", [1, 1], [1, 1], [0, 0], 1)
    with pytest.raises(ValueError):
        an.Series("bogus", [1], [1], [0], 1)
    with pytest.raises(ValueError):
        an.Series("time", [1, 2], [1, 1], [0, -1], 1)


def test_power_law_recovers_exponent():
    r = an.fit_power_law(_power(-0.1595, noise=0.01), (100, 1000))
    assert abs(r.slope + 0.1595) < 1e-3
    assert not r.flagged and r.r2 > 0.99


def test_power_law_needs_points_and_positive_means():
    with pytest.raises(an.FitError):
        an.fit_power_law(_power(-0.5), (100, 120))
    s = an.Series("time", T, -np.ones_like(T), np.zeros_like(T), 1)
    with pytest.raises(an.FitError):
        an.fit_power_law(s, (10, 1000))


def test_exponential_data_flagged_by_power_fit():
    s = an.Series("time", T, np.exp(-T / 300.0), np.zeros_like(T), 1)
    pw = an.fit_power_law(s, (10, 3000))
    ex = an.fit_exponential(s, (10, 3000))
    assert pw.flagged
    assert ex.residual < pw.residual
    assert ex.slope == pytest.approx(-1 / 300, rel=1e-6)


def test_log_slope():
    x = np.arange(1, 200, dtype=float)
    s = an.Series("subsystem-size", x, 2.0 * np.log(x) + 1, np.zeros_like(x), 1)
    assert an.fit_log_slope(s).slope == pytest.approx(2.0, abs=1e-9)


def test_log_slope_chord():
    L = 64
    x = np.arange(1, L, dtype=float)
    s = an.Series("subsystem-size", x, 1.5 * np.log(an.chord(x, L)), np.zeros_like(x), 1)
    r = an.fit_log_slope(s, chord_L=L)
    assert r.slope == pytest.approx(1.5, abs=1e-9) and r.r2 == pytest.approx(1.0)


def test_bootstrap_stderr_scales_with_sample_count():
    se = [an.fit_power_law(_power(-0.3, 0.2, n, seed=1), (10, 1000), n_boot=400).stderr for n in (25, 100, 400)]
    assert se[0] / se[1] == pytest.approx(2.0, rel=0.3)
    assert se[0] / se[2] == pytest.approx(4.0, rel=0.3)


def _collapse_family(z, Ls=(32, 64, 128, 256), noise=0.0):
    gen = np.random.default_rng(3)
    curves = {}
    for L in Ls:
        t = np.unique(np.round(np.logspace(0, math.log10(3 * L**z), 60)))
        u = t / L**z
        y = 1.0 / (1.0 + u) ** 0.8 + noise * gen.standard_normal(len(t))
        curves[L] = an.Series("time", t, y, np.full_like(t, max(noise, 1e-3)), 1)
    return curves


def test_collapse_recovers_dynamic_exponent():
    res = an.collapse(_collapse_family(1.581, noise=0.002))
    assert abs(res.exponent - 1.581) < 0.05
    assert res.reference[1.581] < res.reference[1.0]


def test_collapse_prefers_ballistic_when_generated_so():
    res = an.collapse(_collapse_family(1.0, noise=0.002))
    assert abs(res.exponent - 1.0) < 0.05
    assert res.reference[1.0] < res.reference[1.581]


def test_collapse_invariant_under_relabel_and_shift():
    curves = _collapse_family(1.3, noise=0.002)
    base = an.collapse(curves, n_grid=21)
    reordered = {L: curves[L] for L in sorted(curves, reverse=True)}
    shifted = {L: an.Series(s.axis, s.x, s.mean + 5.0, s.stderr, s.n) for L, s in curves.items()}
    assert an.collapse(reordered, n_grid=21).exponent == pytest.approx(base.exponent, abs=1e-9)
    assert an.collapse(shifted, n_grid=21).exponent == pytest.approx(base.exponent, abs=1e-6)


def test_rate_collapse():
    nu, pc = 1.0969, 0.137
    curves = {}
    p = np.linspace(0.10, 0.175, 16)
    for L in (64, 128, 256):
        y = np.tanh(np.sign(p - pc) * L * np.abs(p - pc) ** nu / 10.0)
        curves[L] = an.Series("measurement-rate", p, y, np.zeros_like(p), 1)
    res = an.collapse(curves, "rate", (0.5, 2.0), p_c=pc)
    assert abs(res.exponent - nu) < 0.05


def test_collapse_needs_three_sizes():
    fam = _collapse_family(1.5)
    with pytest.raises(an.FitError):
        an.collapse({L: fam[L] for L in (32, 64)})


def test_cross_ratio():
    L = 100
    assert an.cross_ratio(0, 25, 50, 75, L) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        an.cross_ratio(0, 0, 50, 75, L)


@given(st.floats(0, 1000), st.floats(0, 1000), st.integers(2, 500))
def test_ring_distance_symmetric(a, b, L):
    d = an.ring_distance(a, b, L)
    assert 0 <= d <= L / 2 + 1e-9
    assert d == pytest.approx(an.ring_distance(b, a, L))


def test_mi_vs_separation():
    s = an.mi_vs_separation({8: [0, 0, 0], 16: [0, 0]}, 64)
    assert s.axis == "separation" and (s.mean == 0).all() and s.n.tolist() == [3, 2]
    with pytest.raises(ValueError):
        an.mi_vs_separation({40: [0.0]}, 64)


def test_peak_location():
    x = np.linspace(0.09, 0.19, 11)
    y = -((x - 0.1337) ** 2)
    assert an.peak_location(x, y) == pytest.approx(0.1337, abs=1e-9)
    assert an.peak_location(x, x) == x[-1]


def test_steady_state():
    t = np.arange(1, 401, dtype=float)
    gen = np.random.default_rng(0)
    samples = 5 * (1 - np.exp(-t / 20)) + 0.1 * gen.standard_normal((40, len(t)))
    mean, se, flat = an.steady_state(an.Series.from_samples("time", t, samples))
    assert abs(mean - 5) < 4 * se and flat
    growing = an.Series.from_samples("time", t, t / 10 + 0.1 * gen.standard_normal((40, len(t))))
    assert not an.steady_state(growing)[2]


@settings(max_examples=30)
@given(values=st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=10))
def test_csv_roundtrip(tmp_path_factory, values):
    x = np.arange(1, len(values) + 1, dtype=float)
    s = an.Series("time", x, values, np.zeros(len(values)), 3, {"model": "M", "L": 8, "p": 0.1, "seed": 0})
    path = tmp_path_factory.mktemp("csv") / "s.csv"
    an.write_csv(path, an.series_rows(s))
    rows = an.read_csv(path)
    assert [float(r["mean"]) for r in rows] == [float(v) for v in values]
    assert tuple(rows[0]) == an.CSV_COLUMNS


def test_report_roundtrip(tmp_path):
    an.write_report(tmp_path / "r.txt", {"a": 0.1, "w": (1.0, 2.0), "ok": True})
    assert an.read_report(tmp_path / "r.txt") == {"a": "0.1", "w": "1.0,2.0", "ok": "True"}
