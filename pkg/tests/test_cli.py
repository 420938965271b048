import json
import math

import numpy as np
import pytest

from kirchdecay.cli import main
from kirchdecay.config import ConfigError, parse_config
from kirchdecay.runner import CSV_COLUMNS, read_trajectory_csv, run_scenario, sweep_scenario

MINIMAL = """
mode = hyperbolic
epsilon = 1e-2
p = 0.5
gamma = 1
spectrum = [1.0]
u0 = [1.0]
t_end = 50
sampling = log 61
output_dir = out
"""


def test_parse_minimal_and_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.mode == "hyperbolic"
    assert cfg.epsilon == 1e-2
    assert cfg.u1.preset == "zero"
    assert cfg.rel_tol == 1e-9
    assert cfg.fit == ()
    assert cfg.envelope == ("v2",)


def test_parse_errors_name_keys_and_lines():
    with pytest.raises(ConfigError, match="epsilon"):
        parse_config(MINIMAL.replace("epsilon = 1e-2\n", ""))
    with pytest.raises(ConfigError, match="mode"):
        parse_config(MINIMAL.replace("mode = hyperbolic\n", ""))
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(MINIMAL + "\nnot_a_key = 3\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(MINIMAL + "\np = 0.7\n")
    with pytest.raises(ConfigError, match="line"):
        parse_config(MINIMAL + "\njust words\n")
    with pytest.raises(ConfigError, match="quantity"):
        parse_config(MINIMAL + "\nfit = [bogus]\n")
    # parabolic mode may omit epsilon
    cfg = parse_config(
        MINIMAL.replace("mode = hyperbolic", "mode = parabolic").replace(
            "epsilon = 1e-2\n", ""
        )
    )
    assert cfg.epsilon is None


def test_spectrum_generators_and_presets():
    cfg = parse_config(MINIMAL.replace("spectrum = [1.0]", "spectrum = power 2 8"))
    assert np.array_equal(cfg.operator().eigenvalues, np.arange(1.0, 9.0) ** 2)
    cfg = parse_config(
        MINIMAL.replace("spectrum = [1.0]", "spectrum = inverse_power 2 4")
    )
    assert np.allclose(cfg.operator().eigenvalues, sorted(1.0 / np.arange(1.0, 5.0) ** 2))

    cfg = parse_config(
        MINIMAL.replace("spectrum = [1.0]", "spectrum = power 2 4").replace(
            "u0 = [1.0]", "u0 = uniform"
        )
    )
    assert np.allclose(cfg.u0.build(4), 0.5)
    cfg = parse_config(
        MINIMAL.replace("spectrum = [1.0]", "spectrum = power 2 4").replace(
            "u0 = [1.0]", "u0 = random 42"
        )
    )
    a = cfg.u0.build(4)
    b = cfg.u0.build(4)
    assert np.array_equal(a, b)
    assert np.linalg.norm(a) == pytest.approx(1.0)


def test_echo_round_trips():
    text = MINIMAL + "fit = [a12u2, v2]\naudit = true\nsweep_p = [0.5, 1.5]\n"
    cfg = parse_config(text)
    assert parse_config(cfg.echo()) == cfg


def test_run_scenario_writes_outputs(tmp_path):
    cfg = parse_config(MINIMAL + "fit = [a12u2]\nfit_window = [1, 50]\n")
    result = run_scenario(cfg, str(tmp_path))
    assert result.ok
    csv_path = tmp_path / "out" / "trajectory_hyperbolic.csv"
    assert csv_path.exists()
    header = csv_path.read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["ok"] is True
    assert manifest["hyperbolic"]["termination"]["reason"] == "reached_end"
    assert "exponent" in manifest["fits"]["a12u2"]
    assert (tmp_path / "out" / "plots.gp").exists()
    assert (tmp_path / "out" / "data" / "hyperbolic_norm_a12u2.dat").exists()
    # full-precision floats: the parsed CSV reproduces the sampled times exactly
    columns = read_trajectory_csv(csv_path)
    assert columns["t"][0] == 0.0
    assert columns["t"][-1] == 50.0


def test_csv_round_trip_bitwise(tmp_path):
    cfg = parse_config(MINIMAL)
    first = run_scenario(cfg, str(tmp_path / "a"))
    manifest = json.loads((first.out_dir / "manifest.json").read_text())
    cfg2 = parse_config(manifest["config_echo"])
    second = run_scenario(cfg2, str(tmp_path / "b"))
    a = (first.out_dir / "trajectory_hyperbolic.csv").read_bytes()
    b = (second.out_dir / "trajectory_hyperbolic.csv").read_bytes()
    assert a == b


def test_parabolic_manifest_records_oracle(tmp_path):
    text = MINIMAL.replace("mode = hyperbolic", "mode = parabolic")
    cfg = parse_config(text)
    result = run_scenario(cfg, str(tmp_path))
    assert result.manifest["parabolic"]["oracle_max_rel_err"] <= 1e-8


def test_sweep_gap_shrinks_with_eps(tmp_path):
    text = (
        MINIMAL.replace("mode = hyperbolic", "mode = both").replace(
            "sampling = log 61", "sampling = uniform 0.05"
        ).replace("t_end = 50", "t_end = 5")
        + "sweep_epsilon = [1e-1, 1e-2, 1e-3]\n"
    )
    cfg = parse_config(text)
    result = sweep_scenario(cfg, str(tmp_path))
    assert result.ok
    sups = [row["sup_gap"] for row in result.rows]
    assert sups[0] > sups[1] > sups[2]
    summary = (tmp_path / "out" / "sweep_summary.csv").read_text().splitlines()
    assert summary[0].startswith("cell,epsilon,status")
    assert len(summary) == 4


def test_sweep_isolates_failing_cells(tmp_path):
    cfg = parse_config(MINIMAL + "sweep_epsilon = [1e-2, -1.0]\n")
    result = sweep_scenario(cfg, str(tmp_path))
    assert not result.ok
    assert result.rows[0]["status"] == "ok"
    assert result.rows[1]["status"].startswith("error")


def test_sweep_requires_axes():
    cfg = parse_config(MINIMAL)
    with pytest.raises(ConfigError):
        cfg.sweep_cells()


def test_cli_simulate_fit_constants(tmp_path, capsys):
    cfg_file = tmp_path / "scenario.cfg"
    cfg_file.write_text(MINIMAL + "fit = [a12u2]\nfit_window = [1, 50]\n")
    assert main(["simulate", str(cfg_file), "--output-root", str(tmp_path)]) == 0
    csv_path = tmp_path / "out" / "trajectory_hyperbolic.csv"
    capsys.readouterr()

    assert main(
        ["fit", str(csv_path), "--quantity", "a12u2", "--window", "1", "50"]
    ) == 0
    fit = json.loads(capsys.readouterr().out)
    assert 0.5 < fit["exponent"] < 3.0

    assert main(["constants", str(cfg_file)]) == 0
    consts = json.loads(capsys.readouterr().out)
    assert consts["mode"] == "coercive"
    assert consts["eps0"] > 0


def test_cli_verify_lemmas(tmp_path):
    out = tmp_path / "report.json"
    rc = main(["verify-lemmas", "--seed", "7", "--count", "10", "--out", str(out)])
    assert rc == 0
    report = json.loads(out.read_text())
    assert report["passed"] is True
    assert main(["verify-lemmas", "--seed", "7", "--count", "0"]) == 2


def test_cli_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text(MINIMAL.replace("epsilon = 1e-2\n", ""))
    assert main(["simulate", str(bad)]) == 2


def test_cli_env_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("KIRCHDECAY_OUTPUT_ROOT", str(tmp_path))
    cfg_file = tmp_path / "scenario.cfg"
    cfg_file.write_text(MINIMAL)
    assert main(["simulate", str(cfg_file)]) == 0
    assert (tmp_path / "out" / "manifest.json").exists()
