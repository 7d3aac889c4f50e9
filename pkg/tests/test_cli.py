import json

import pytest

from qamipt import cli
from qamipt.config import ConfigError, ExperimentConfig, parse_config

BASE = """
model = QA_CLIFFORD_ENTANGLEMENT
engine = stabilizer
L = 16
p = 0.10, 0.15
T = 40
ensemble = 6
observables = entropy_t, entropy_LA
master_seed = 5
"""


def _write(tmp_path, text, name="cfg.txt"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_parse_lists_and_ranges():
    cfg = parse_config("model = bit-string\nL = 8\nL = 16,32\np = 0.10..0.13:0.01\nT = 5\nregion_A = 0:4, 6\n")
    assert cfg.model == "QA_PURIFICATION"
    assert cfg.L == [8, 16, 32]
    assert cfg.p == [0.1, 0.11, 0.12, 0.13]
    assert cfg.region_A == [0, 1, 2, 3, 6]


def test_config_text_roundtrip():
    cfg = parse_config(BASE)
    assert parse_config(cfg.to_text()) == cfg


@pytest.mark.parametrize(
    "text",
    [
        "L = 8\np = 0.1\nT = 5\n",  # no model
        "model = NOPE\nL = 8\np = 0.1\nT = 5\n",
        "model = QA_NONCLIFFORD\nengine = stabilizer\nL = 8\np = 0.1\nT = 5\n",
        "model = NONQA_CLIFFORD\nengine = mc\nL = 8\np = 0.1\nT = 5\n",
        "model = QA_CLIFFORD_ENTANGLEMENT\nengine = classical\nobservables = entropy_t\nL = 8\np = 0.1\nT = 5\n",
        "model = QA_CLIFFORD_ENTANGLEMENT\nL = 8\np = 1.5\nT = 5\n",
        "model = QA_CLIFFORD_ENTANGLEMENT\nL = 8\np = 0.1\nT = 5\nT = 6\n",
        "model = QA_CLIFFORD_ENTANGLEMENT\nL = 8\np = 0.1\nT = 5\nregion_A = 0:9\n",
        "model = QA_CLIFFORD_ENTANGLEMENT\nL = 8\np = 0.1\nT = 5\nbogus = 1\n",
        "model = QA_CLIFFORD_ENTANGLEMENT\nL = 8\np = 0.1\nT = 5\nobservables = purification\n",
    ],
)
def test_bad_configs_exit_2(tmp_path, text):
    with pytest.raises(ConfigError):
        parse_config(text)
    assert cli.main(["run", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")]) == 2


def test_missing_config_file_exit_2(tmp_path):
    assert cli.main(["run", "--config", str(tmp_path / "none.txt")]) == 2


def test_existing_output_needs_overwrite(tmp_path):
    cfg = _write(tmp_path, BASE)
    out = str(tmp_path / "o")
    assert cli.main(["run", "--config", cfg, "--out", out]) == 0
    assert cli.main(["run", "--config", cfg, "--out", out]) == 2
    assert cli.main(["run", "--config", cfg, "--out", out, "--overwrite"]) == 0


def test_output_independent_of_workers(tmp_path):
    cfg = _write(tmp_path, BASE)
    outs = []
    for w in (1, 8):
        out = tmp_path / f"w{w}"
        assert cli.main(["run", "--config", cfg, "--out", str(out), "--workers", str(w)]) == 0
        outs.append(out)
    for name in ("entropy_t.csv", "entropy_LA.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_seed_flag_changes_output(tmp_path):
    cfg = _write(tmp_path, BASE)
    a, b = tmp_path / "a", tmp_path / "b"
    cli.main(["run", "--config", cfg, "--out", str(a)])
    cli.main(["run", "--config", cfg, "--out", str(b), "--seed", "6"])
    assert (a / "entropy_t.csv").read_bytes() != (b / "entropy_t.csv").read_bytes()


def test_manifest_and_replay(tmp_path, capsys):
    cfg = _write(tmp_path, BASE)
    out = tmp_path / "o"
    assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["master_seed"] == 5
    assert {f["name"] for f in man["files"]} == {"entropy_t.csv", "entropy_LA.csv"}
    assert cli.main(["replay", str(out / "manifest.json"), "--out", str(tmp_path / "r")]) == 0
    assert "identical" in capsys.readouterr().out


def test_replay_detects_tampering(tmp_path):
    cfg = _write(tmp_path, BASE)
    out = tmp_path / "o"
    cli.main(["run", "--config", cfg, "--out", str(out)])
    man = json.loads((out / "manifest.json").read_text())
    man["files"][0]["sha256"] = "0" * 64
    (out / "manifest.json").write_text(json.dumps(man))
    assert cli.main(["replay", str(out / "manifest.json"), "--out", str(tmp_path / "r")]) == 4


def test_fit_and_collapse_commands(tmp_path, capsys):
    text = """
model = QA_PURIFICATION
engine = stabilizer
L = 8, 12, 16
p = 0.137
T = 200
ensemble = 20
observables = purification
"""
    out = tmp_path / "o"
    assert cli.main(["run", "--config", _write(tmp_path, text), "--out", str(out)]) == 0
    csv = str(out / "purification.csv")
    assert cli.main(["fit", "--input", csv, "--kind", "power", "--window", "2,60", "--L", "16", "--out", str(tmp_path / "f")]) == 0
    assert "L16_p0.137.slope=" in capsys.readouterr().out
    assert cli.main(["collapse", "--input", csv, "--search", "0.5,2.5", "--out", str(tmp_path / "c")]) == 0
    assert "objective_at_1.581=" in capsys.readouterr().out
    assert cli.main(["fit", "--input", csv, "--L", "99"]) == 2


def test_classical_and_bond_dp_runs(tmp_path):
    for i, text in enumerate([
        "model = QA_PURIFICATION\nengine = classical\nobservables = hamming, p_same\nL = 32\np = 0.137\nT = 100\nensemble = 4\n",
        "model = bond_dp\nengine = classical\nL = 32\np = 0.3553\nT = 100\nensemble = 4\n",
    ]):
        assert cli.main(["run", "--config", _write(tmp_path, text, f"c{i}.txt"), "--out", str(tmp_path / f"o{i}")]) == 0


def test_scan_pc_command(tmp_path, capsys):
    text = "model = bond_dp\nengine = classical\nL = 64\np = 0.30, 0.355, 0.42\nT = 1000\nensemble = 20\nwindow = 10, 300\nn_boot = 20\n"
    assert cli.main(["scan-pc", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")]) == 0
    assert "p_c=" in capsys.readouterr().out
    assert (tmp_path / "o" / "pc.txt").exists()


def test_crosscheck_exit_0(tmp_path):
    assert cli.main(["crosscheck", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "crosscheck.txt").read_text().startswith("ok=True")


def test_unresolvable_mc_rows_exit_3(tmp_path):
    text = """
model = QA_NONCLIFFORD
engine = mc
L = 16
p = 0.0
T = 60
ensemble = 1
observables = entropy_t
region_A = 0:8
mc_samples = 50
mc_max_samples = 100
mc_times = 3
"""
    out = tmp_path / "o"
    assert cli.main(["run", "--config", _write(tmp_path, text), "--out", str(out)]) == 3
    assert "unresolvable" in (out / "entropy_t.csv").read_text()
