import json

import numpy as np
import pytest

from qmusic.array_signal import ArrayConfig, BeamSweepPlan, beam_powers
from qmusic.cli import io
from qmusic.cli.config import parse_config
from qmusic.cli.main import main, stage_seed
from qmusic.errors import ConfigError

BASE = {
    "array": {"num_elements": 4},
    "scenario": {"angles": [-10, 20], "noise_variance": 0.01, "num_snapshots": 2000},
    "sweep": {"count": 64},
    "grid": {"count": 361},
    "modes": {"reconstruction": "spectral", "labeling": "exact"},
    "seed": 7,
}


def write_config(tmp_path, doc=None, name="cfg.json", **changes):
    doc = json.loads(json.dumps(doc or BASE))
    doc.update(changes)
    path = tmp_path / name
    path.write_text(json.dumps(doc, indent=2))
    return path


def run(*argv):
    return main([str(a) for a in argv])


# -- configuration ------------------------------------------------------------

def test_unknown_key_reports_line(tmp_path):
    text = '{\n  "array": {"num_elements": 4},\n  "scenario": {"angles": [0]},\n  "sweeep": {"count": 4}\n}\n'
    with pytest.raises(ConfigError, match=r"line 4, column 3.*sweeep"):
        parse_config(text, "c.json")


def test_nested_unknown_key_reports_line():
    text = '{\n  "array": {"num_elements": 4},\n  "scenario": {\n    "angles": [0],\n    "snr": 3\n  }\n}\n'
    with pytest.raises(ConfigError, match=r"line 5, column 5"):
        parse_config(text)


def test_semantic_error_reports_line():
    text = '{\n  "array": {"num_elements": 6},\n  "scenario": {"angles": [0]}\n}\n'
    with pytest.raises(ConfigError, match=r"line 2, column 12: array: num_elements must be a power of two"):
        parse_config(text)


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError, match=r"line 3"):
        parse_config('{\n  "array": {"num_elements": 4},\n  "scenario": {"angles": [0],}\n}')


def test_cross_module_checks():
    base = {"array": {"num_elements": 4}, "scenario": {"angles": [-10, 0, 10, 20]}}
    with pytest.raises(ConfigError, match="fewer sources"):
        parse_config(json.dumps(base))
    bad_weights = {"array": {"num_elements": 4}, "scenario": {"angles": [0]}, "vqdme": {"weights": [2, 1]}}
    with pytest.raises(ConfigError, match="weights"):
        parse_config(json.dumps(bad_weights))
    too_big = {"array": {"num_elements": 8}, "scenario": {"angles": [0]}, "modes": {"reconstruction": "circuit"}}
    with pytest.raises(ConfigError, match="walk operator"):
        parse_config(json.dumps(too_big))
    many_bits = {"array": {"num_elements": 4}, "scenario": {"angles": [0]},
                 "regularization": {"phase_bits": 16}, "modes": {"reconstruction": "circuit"}}
    with pytest.raises(ConfigError, match="qubits"):
        parse_config(json.dumps(many_bits))


def test_defaults_and_digest():
    cfg = parse_config(json.dumps({"array": {"num_elements": 8}, "scenario": {"angles": [-10, 20]}}))
    assert len(cfg.sweep) == 64 and len(cfg.grid) == 1801
    assert cfg.vqdme.weights.values == (2.0, 1.0)
    assert cfg.ansatz.num_qubits == 3
    assert len(cfg.digest()) == 64


def test_zero_loading_exit_code(tmp_path, capsys):
    path = write_config(tmp_path, regularization={"loading": 0})
    assert run("reconstruct", "--config", path, "--out", tmp_path / "o") == 1
    assert "strictly positive" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert run("simulate", "--config", tmp_path / "nope.json") == 1


def test_seed_must_be_u64(tmp_path):
    with pytest.raises(SystemExit):
        run("simulate", "--config", write_config(tmp_path), "--seed", -1)


def test_stage_seeds_differ():
    assert stage_seed(1, "snapshots") != stage_seed(1, "labeling")
    assert stage_seed(1, "snapshots") == stage_seed(1, "snapshots")
    assert 0 <= stage_seed(2**64 - 1, "x") < 2**64


# -- io -----------------------------------------------------------------------

def test_complex_roundtrip(rng):
    x = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
    np.testing.assert_array_equal(io.decode_complex(io.encode_complex(x)), x)


def test_json_schema_enforced(tmp_path):
    with pytest.raises(ConfigError):
        io.write_json(tmp_path / "m.json", {"config_hash": "xyz"}, "manifest")
    (tmp_path / "bad.json").write_text('{"path": "classical"}')
    with pytest.raises(ConfigError):
        io.read_json(tmp_path / "bad.json", "reconstruction")


def test_csv_format(tmp_path):
    path = io.write_csv(tmp_path / "s.csv", io.CSV_COLUMNS["spectrum"], [(1 / 3, 2.5), (-10, 0.125)])
    lines = path.read_text().splitlines()
    assert lines == ["angle_deg,value", "0.333333,2.5", "-10.000000,0.125"]
    with pytest.raises(ValueError):
        io.write_csv(tmp_path / "t.csv", ["a", "b"], [(1,)])


# -- commands -----------------------------------------------------------------

def test_simulate_broadside_smoke(tmp_path):
    cfg = write_config(tmp_path, scenario={"angles": [0.0], "noise_variance": 0.0, "num_snapshots": 10})
    out = tmp_path / "o"
    assert run("simulate", "--config", cfg, "--out", out) == 0
    for name in ("snapshots.json", "observation.json", "powers.csv"):
        assert (out / name).exists()


def test_simulate_deterministic_and_powers_consistent(tmp_path):
    cfg = write_config(tmp_path)
    run("simulate", "--config", cfg, "--out", tmp_path / "a")
    run("simulate", "--config", cfg, "--out", tmp_path / "b")
    for name in ("snapshots.json", "observation.json", "powers.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    run("simulate", "--config", cfg, "--out", tmp_path / "c", "--seed", 8)
    assert (tmp_path / "a" / "snapshots.json").read_bytes() != (tmp_path / "c" / "snapshots.json").read_bytes()

    snap = io.read_json(tmp_path / "a" / "snapshots.json", "snapshots")
    r = io.decode_complex(snap["sample_covariance"])
    powers = io.read_csv(tmp_path / "a" / "powers.csv", io.CSV_COLUMNS["powers"])
    expected = beam_powers(r, BeamSweepPlan.uniform(64), ArrayConfig(4))
    np.testing.assert_allclose(powers[:, 1], expected, rtol=1e-12)


@pytest.mark.parametrize("mode", ["classical", "spectral", "circuit"])
def test_reconstruct_modes(tmp_path, capsys, mode):
    out = tmp_path / "o"
    assert run("reconstruct", "--config", write_config(tmp_path), "--out", out, "--mode", mode) == 0
    doc = io.read_json(out / "reconstruction.json", "reconstruction")
    text = capsys.readouterr().out
    if mode == "spectral":
        assert doc["fidelity_to_classical"] >= 1 - 1e-8
    if mode == "circuit":
        assert doc["transition"]["phase_bits"] == 12
        assert doc["transition"]["fidelity"] >= 0.99
        assert "transition_fidelity" in text


def test_reconstruct_from_observation_file(tmp_path):
    cfg = write_config(tmp_path)
    run("simulate", "--config", cfg, "--out", tmp_path / "a")
    assert run("reconstruct", "--config", cfg, "--out", tmp_path / "b",
               "--observation", tmp_path / "a" / "observation.json") == 0


def test_numerical_failure_names_stage(tmp_path, capsys):
    cfg = write_config(tmp_path)
    run("simulate", "--config", cfg, "--out", tmp_path / "a")
    obs_path = tmp_path / "a" / "observation.json"
    doc = json.loads(obs_path.read_text())
    doc["powers"] = [0.0] * len(doc["powers"])
    obs_path.write_text(json.dumps(doc))
    code = run("reconstruct", "--config", cfg, "--out", tmp_path / "b", "--observation", obs_path)
    assert code == 2
    assert "stage 'reconstruct'" in capsys.readouterr().err


def test_example_flag(tmp_path, capsys):
    assert run("vqdme", "--paper-example", "--seed", 1, "--out", tmp_path) == 0
    assert "within 0.02" in capsys.readouterr().out
    doc = io.read_json(tmp_path / "vqdme.json", "vqdme")
    np.testing.assert_allclose(doc["eigenvalue_estimates"], [0.4, 0.3, 0.2, 0.1], atol=0.02)
    conv = io.read_csv(tmp_path / "convergence.csv", io.convergence_columns(4))
    assert conv.shape == (doc["iterations_used"] + 1, 6)


def test_vqdme_deterministic_trace(tmp_path):
    cfg = write_config(tmp_path)
    run("reconstruct", "--config", cfg, "--out", tmp_path / "r")
    rho = tmp_path / "r" / "reconstruction.json"
    for d in ("a", "b"):
        assert run("vqdme", "--config", cfg, "--rho", rho, "--out", tmp_path / d) == 0
    assert (tmp_path / "a" / "convergence.csv").read_bytes() == (tmp_path / "b" / "convergence.csv").read_bytes()
    doc = io.read_json(tmp_path / "a" / "vqdme.json", "vqdme")
    np.testing.assert_allclose(doc["eigenvalue_estimates"], doc["reference_eigenvalues"], atol=1e-6)


def test_non_convergence_exit_code(tmp_path):
    cfg = write_config(tmp_path, vqdme={"max_iterations": 2, "restarts": 1})
    assert run("vqdme", "--config", cfg, "--out", tmp_path / "o") == 3


def test_estimate_with_vqdme_file(tmp_path, capsys):
    cfg = write_config(tmp_path)
    run("vqdme", "--config", cfg, "--out", tmp_path / "v")
    assert run("estimate", "--config", cfg, "--out", tmp_path / "e", "--vqdme", tmp_path / "v" / "vqdme.json") == 0
    est = io.read_json(tmp_path / "e" / "estimate.json", "estimate")
    assert "max difference" in capsys.readouterr().out
    assert len(est["music"]["angles"]) == 2
    hist = io.read_csv(tmp_path / "e" / "histogram.csv", io.CSV_COLUMNS["histogram"])
    assert hist.shape == (361, 3)
    assert hist[:, 2].sum() == pytest.approx(1.0)


def test_pipeline_two_sources(tmp_path):
    doc = dict(BASE, array={"num_elements": 8}, grid={"count": 1801},
               scenario={"angles": [-10, 20], "noise_variance": 0.01, "num_snapshots": 10000},
               modes={"reconstruction": "spectral", "labeling": "sampled", "shots": 100000})
    out = tmp_path / "o"
    assert run("pipeline", "--config", write_config(tmp_path, doc), "--out", out) == 0
    est = io.read_json(out / "estimate.json", "estimate")
    np.testing.assert_allclose(est["music"]["angles"], [-10, 20], atol=1.0)
    np.testing.assert_allclose(est["labeling"]["angles"], [-10, 20], atol=1.0)
    manifest = io.read_json(out / "manifest.json", "manifest")
    assert set(manifest["timings"]) == {"simulate", "reconstruct", "vqdme", "estimate"}
    for files in manifest["files"].values():
        for name in files:
            assert (out / name).exists()


def test_pipeline_bit_reproducible(tmp_path):
    cfg = write_config(tmp_path)
    run("pipeline", "--config", cfg, "--out", tmp_path / "a")
    run("pipeline", "--config", cfg, "--out", tmp_path / "b")
    ma = io.read_json(tmp_path / "a" / "manifest.json", "manifest")
    mb = io.read_json(tmp_path / "b" / "manifest.json", "manifest")
    assert ma["config_hash"] == mb["config_hash"] and ma["files"] == mb["files"]
    for files in ma["files"].values():
        for name in files:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_mode_flag_changes_digest(tmp_path):
    cfg = write_config(tmp_path)
    run("pipeline", "--config", cfg, "--out", tmp_path / "a")
    run("pipeline", "--config", cfg, "--out", tmp_path / "b", "--mode", "classical")
    ha = io.read_json(tmp_path / "a" / "manifest.json", "manifest")["config_hash"]
    hb = io.read_json(tmp_path / "b" / "manifest.json", "manifest")["config_hash"]
    assert ha != hb
