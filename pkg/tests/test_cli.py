import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy.integrate import trapezoid

from teleswim import __version__
from teleswim.cli import EXIT_CONFIG, EXIT_OK, EXIT_QUALITY, EXIT_RUNTIME, main
from teleswim.export import read_csv


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize(
    "beta,text",
    [("2", "Confined"), ("0", "Normal, exponent 1"), ("-0.5", "Superdiffusive, exponent 1.5"), ("1", "Logarithmic")],
)
def test_classify(beta, text, capsys):
    code, out, _ = _run(["classify", "--", beta], capsys)
    assert code == EXIT_OK
    assert out.strip() == text


def test_classify_rejects_garbage(capsys):
    code, _, err = _run(["classify", "abc"], capsys)
    assert code == EXIT_CONFIG
    assert json.loads(err)["error"] == "ConfigError"


def test_density_file_is_normalised(tmp_path, capsys):
    code, _, _ = _run(["density", "--preset", "paper-classical", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    stamp, cols, data = read_csv(tmp_path / "density_t1.csv")
    assert cols == ["x", "density"]
    assert stamp["version"] == __version__ and stamp["config"]["preset"] == "paper-classical"
    side = json.loads((tmp_path / "density_t1.json").read_text())
    atoms = sum(m for _, m in side["atoms"])
    assert trapezoid(data[:, 1], data[:, 0]) + atoms == pytest.approx(1.0, abs=1e-6)


def test_density_needs_proportional_rate(tmp_path, capsys):
    code, _, err = _run(["density", "--preset", "light-switch", "--out", str(tmp_path)], capsys)
    assert code == EXIT_CONFIG
    assert "pde" in json.loads(err)["message"]


def test_density_rejects_time_zero(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"times": [0.0]}))
    code, _, _ = _run(["density", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == EXIT_CONFIG


def test_simulate_classical_summary(tmp_path, capsys):
    code, _, _ = _run(["simulate", "--preset", "paper-classical", "--paths", "100000", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    summary = json.loads((tmp_path / "paths.json").read_text())
    assert summary["ks_vs_analytic"] < 0.01
    assert summary["rng"] == "splitmix64-v1"
    _, cols, data = read_csv(tmp_path / "paths.csv")
    assert cols == ["seed", "n_tumbles", "final_position"] and data.shape == (100_000, 3)


def test_simulate_light_switch_reports_confinement(tmp_path, capsys):
    code, out, _ = _run(["simulate", "--preset", "light-switch", "--paths", "20000", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    summary = json.loads((tmp_path / "paths.json").read_text())
    assert summary["confined"] is True
    assert summary["msd_limit"] == pytest.approx(1 / 3)
    assert "confined" in out


def test_simulate_is_reproducible(tmp_path, capsys):
    for d in ("a", "b"):
        assert _run(["simulate", "--paths", "5000", "--seed", "3", "--out", str(tmp_path / d)], capsys)[0] == EXIT_OK
    assert (tmp_path / "a" / "paths.csv").read_bytes() == (tmp_path / "b" / "paths.csv").read_bytes()


def test_zero_paths_is_a_config_error(tmp_path, capsys):
    code, _, err = _run(["simulate", "--paths", "0", "--out", str(tmp_path)], capsys)
    assert code == EXIT_CONFIG
    assert json.loads(err)["exit_code"] == EXIT_CONFIG


def test_msd_reports_fit_and_prediction(tmp_path, capsys):
    code, out, _ = _run(["msd", "--preset", "power-law-0.5", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    summary = json.loads((tmp_path / "msd.json").read_text())
    assert summary["fit"]["exponent"] == pytest.approx(0.5, abs=0.05)
    assert summary["prediction"] == "Subdiffusive, exponent 0.5"
    assert "Subdiffusive" in out


def test_msd_with_empirical_overlay(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"msd": {"times": [0.5, 1, 2], "empirical": True, "n_paths": 20000}}))
    assert _run(["msd", "--config", str(cfg), "--out", str(tmp_path)], capsys)[0] == EXIT_OK
    _, cols, emp = read_csv(tmp_path / "msd_empirical.csv")
    _, _, exact = read_csv(tmp_path / "msd.csv")
    assert cols == ["t", "msd", "stderr"]
    assert np.all(np.abs(emp[:, 1] - exact[:, 1]) < 4 * emp[:, 2])


def test_pde_command(tmp_path, capsys):
    code, _, _ = _run(["pde", "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK
    side = json.loads((tmp_path / "pde_t1.json").read_text())
    assert side["l1_vs_analytic"]["total"] < 0.05
    assert side["mass"] == pytest.approx(1.0, abs=1e-10)


def test_charfun_command_and_quality_exit(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"alpha": 0.5}))
    code, out, _ = _run(["charfun", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == EXIT_OK and "heavy-tailed=True" in out
    _, cols, data = read_csv(tmp_path / "charfun_t1.csv")
    assert cols == ["k", "re", "im"]
    assert data[data[:, 0] == 0.0, 1] == 1.0
    cfg.write_text(json.dumps({"alpha": 0.5, "k_max": 1000}))
    code, _, _ = _run(["charfun", "--config", str(cfg), "--out", str(tmp_path)], capsys)
    assert code == EXIT_QUALITY


def test_runtime_errors_exit_one(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"profile": {"kind": "tabulated", "samples": [[0, 1], [1, 1]]}, "t_end": 2.0}))
    code, _, err = _run(["simulate", "--config", str(cfg), "--paths", "10", "--out", str(tmp_path)], capsys)
    assert code == EXIT_RUNTIME
    assert json.loads(err)["error"] == "ExtrapolationError"


def test_bad_presets_and_configs(tmp_path, capsys):
    assert _run(["density", "--preset", "nope"], capsys)[0] == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(["density", "--config", str(bad)], capsys)[0] == EXIT_CONFIG
    bad.write_text(json.dumps({"params": {"c0": -1}}))
    assert _run(["density", "--config", str(bad)], capsys)[0] == EXIT_CONFIG
    bad.write_text(json.dumps({"rate": {"mode": "proportional", "lambda0": 2.0}}))
    assert _run(["density", "--config", str(bad)], capsys)[0] == EXIT_CONFIG


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "teleswim.cli", "classify", "0.5"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.strip() == "Subdiffusive, exponent 0.5"
