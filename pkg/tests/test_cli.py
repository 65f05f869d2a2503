import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

import gaussdrive.propagator as propagator
from gaussdrive.cli import main
from gaussdrive.driving import Constant
from gaussdrive.model import ModelParams
from gaussdrive.oracles import rk4_first_moments
from gaussdrive.verify import run_verify

GOLDEN = Path(__file__).parent / "golden"


def run(argv, capsys):
    code = main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def read_csv(path):
    lines = Path(path).read_text().splitlines()
    return lines[0].split(","), np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def test_trajectory_matches_golden_file(tmp_path, capsys):
    for k in range(2):
        out = tmp_path / f"run{k}"
        code, stdout, _ = run(["trajectory", "--config", GOLDEN / "fig1a.json", "--out", out], capsys)
        assert code == 0 and stdout.strip().endswith("trajectory.csv")
        assert (out / "trajectory.csv").read_bytes() == (GOLDEN / "fig1a_trajectory.csv").read_bytes()


def test_golden_trajectory_agrees_with_rk4():
    cols, rows = read_csv(GOLDEN / "fig1a_trajectory.csv")
    assert cols == ["t", "q", "p", "mu", "nu", "kappa", "sigma_xx", "sigma_pp", "sigma_xp", "R"]
    p = ModelParams(5.0, 1.0, 1.0, 1.0)
    ref = rk4_first_moments([(p, Constant(-11 / math.sqrt(2), 11 / math.sqrt(2)))], 1.0, 1.0, rows[:, 0])[0]
    assert np.abs(rows[:, 1:3] - ref).max() < 1e-7
    assert abs(rows[-1, 1] - 2) < 0.05 and abs(rows[-1, 2] + 2) < 0.05


def test_ellipse_matches_golden_file(tmp_path, capsys):
    code, _, _ = run(["ellipse", "--config", GOLDEN / "fig2a.json", "--out", tmp_path], capsys)
    assert code == 0
    assert (tmp_path / "ellipse.json").read_bytes() == (GOLDEN / "fig2a_ellipse.json").read_bytes()
    rec = json.loads((tmp_path / "ellipse.json").read_text())
    assert {"A", "B", "C", "a", "b", "theta"} <= set(rec)
    assert 4 * rec["A"] * rec["C"] - rec["B"] ** 2 > 0
    _, orbit = read_csv(tmp_path / "steady_orbit.csv")
    q, p = orbit[:, 1], orbit[:, 2]
    conic = rec["A"] * q**2 + rec["B"] * q * p + rec["C"] * p**2
    assert np.abs(conic - 1).max() < 1e-8


def test_zero_force_zero_displacement_rows(tmp_path, capsys):
    cfg = write_config(tmp_path, {"params": {"omega0": 1.0, "gamma": 0.5}, "initial": {"mu": 0.5},
                                  "t_max": 5, "n_samples": 11})
    assert run(["trajectory", "--config", cfg, "--out", tmp_path], capsys)[0] == 0
    _, rows = read_csv(tmp_path / "trajectory.csv")
    assert np.all(rows[:, 1] == 0) and np.all(rows[:, 2] == 0)


def test_set_overrides_and_log_grid(tmp_path, capsys):
    code, _, _ = run(["trajectory", "--config", GOLDEN / "fig1a.json", "--set", "n_samples=7",
                      "--set", "params.gamma=0.5", "--log-grid", "--out", tmp_path], capsys)
    assert code == 0
    _, rows = read_csv(tmp_path / "trajectory.csv")
    assert rows.shape[0] == 7 and rows[0, 0] == 0 and rows[1, 0] == pytest.approx(1e-3)
    assert rows[-1, 0] == pytest.approx(10.0)


def _error(err):
    lines = err.strip().splitlines()
    assert len(lines) == 1
    return json.loads(lines[0])


@pytest.mark.parametrize("argv", [
    ["trajectory", "--set", "params.omega0=-1"],
    ["trajectory", "--set", "params.omega0=1", "--set", "t_max=0"],
    ["trajectory", "--set", "params.omega0=1", "--set", "n_samples=1"],
    ["trajectory", "--set", "params.omega0=1", "--set", "bogus=1"],
    ["trajectory", "--config", "/nonexistent.json"],
    ["trajectory"],
    ["wigner", "--set", "params.omega0=1", "--set", 'outputs=["wigner"]'],
    ["ellipse", "--set", "params.omega0=1"],
    ["trajectory", "--set", "params.omega0=0.1", "--set", "params.gamma=0.01",
     "--set", "params.theta1=2", "--set", "t_max=1000"],
    ["trajectory", "--set", "params.omega0=1", "--sweep", "t_max=1:2"],
    ["nonsense"],
    ["verify", "--level", "medium"],
])
def test_error_paths_are_single_json_lines(tmp_path, capsys, argv):
    code, _, err = run(argv + ["--out", tmp_path] if argv[0] != "nonsense" else argv, capsys)
    assert code == 2
    rec = _error(err)
    assert rec["error"] and rec["message"]


def test_resonance_is_a_parameter_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"params": {"omega0": 1.0, "gamma": 0.0},
                                  "force": {"type": "harmonic", "R": 1.0, "Omega": 1.0}})
    code, _, err = run(["ellipse", "--config", cfg, "--out", tmp_path], capsys)
    assert code == 2 and _error(err)["error"] == "ParameterError"


def test_arithmetic_errors_exit_3(tmp_path, capsys):
    # anti-diffusion drives the Gaussian width through zero
    code, _, err = run(["trajectory", "--set", "params.omega0=1", "--set", "params.gamma=0.1",
                        "--set", "params.eta0=2", "--out", tmp_path], capsys)
    assert code == 3 and _error(err)["error"] == "CovarianceError"


def test_bad_json_config(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    code, _, err = run(["trajectory", "--config", cfg, "--out", tmp_path], capsys)
    assert code == 2 and "JSON" in _error(err)["message"]


def test_wigner_vacuum_normalization(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        "params": {"omega0": 1.0, "gamma": 0.5}, "initial": {"mu": 0.5}, "t_max": 1.0,
        "outputs": ["wigner"], "grid": {"Qmin": -8, "Qmax": 8, "nQ": 321, "Pmin": -8, "Pmax": 8, "nP": 321}})
    assert run(["wigner", "--config", cfg, "--out", tmp_path], capsys)[0] == 0
    _, rows = read_csv(tmp_path / "wigner.csv")
    dq = dp = 16 / 320
    assert abs(rows[:, 2].sum() * dq * dp - 1) < 1e-6


def test_spectrum_at_ep_reports_clusters(tmp_path, capsys):
    cfg = write_config(tmp_path, {"params": {"omega0": 1 / math.sqrt(2), "gamma": 1.0, "theta1": 1.0,
                                             "theta2": 1.0},
                                  "spectrum": {"cutoff": 16, "max_mn": 2, "dps": 50}})
    assert run(["spectrum", "--config", cfg, "--out", tmp_path], capsys)[0] == 0
    rep = json.loads((tmp_path / "ep_clusters.json").read_text())
    for c in rep["clusters"]:
        assert c["extended_count"] == c["multiplicity"]
        assert c["extended_radius"] < 1e-4
    _, rows = read_csv(tmp_path / "analytic.csv")
    assert rows.shape[1] == 6


def test_spectrum_underdamped_matches_grid(tmp_path, capsys):
    cfg = write_config(tmp_path, {"params": {"omega0": 1.0, "gamma": 0.3, "theta1": 0.4, "theta2": 0.3}})
    assert run(["spectrum", "--config", cfg, "--out", tmp_path], capsys)[0] == 0
    assert not (tmp_path / "ep_clusters.json").exists()
    _, rows = read_csv(tmp_path / "analytic.csv")
    assert rows[:, 5].max() < 1e-6


def test_sweep_writes_one_directory_per_point(tmp_path, capsys):
    code, stdout, _ = run(["trajectory", "--config", GOLDEN / "fig1a.json", "--sweep", "params.gamma=0.5:1.5:3",
                           "--out", tmp_path], capsys)
    assert code == 0
    index = json.loads((tmp_path / "sweep.json").read_text())
    assert [pt["value"] for pt in index["points"]] == [0.5, 1.0, 1.5]
    assert len(stdout.split()) == 3
    # the middle point is the golden configuration
    assert (tmp_path / "point_001" / "trajectory.csv").read_bytes() == \
        (GOLDEN / "fig1a_trajectory.csv").read_bytes()


def test_output_directory_from_environment(tmp_path, capsys, monkeypatch):
    env_dir, flag_dir = tmp_path / "env", tmp_path / "flag"
    monkeypatch.setenv("GAUSSDRIVE_OUT", str(env_dir))
    assert run(["trajectory", "--config", GOLDEN / "fig1a.json"], capsys)[0] == 0
    assert (env_dir / "trajectory.csv").exists()
    assert run(["trajectory", "--config", GOLDEN / "fig1a.json", "--out", flag_dir], capsys)[0] == 0
    assert (flag_dir / "trajectory.csv").exists()


def test_figures_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(["figures", "--out", a], capsys)[0] == 0
    assert run(["figures", "--out", b], capsys)[0] == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    assert any(n.startswith("fig1a_") for n in names) and any(n.startswith("fig2_") for n in names)
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "gaussdrive", "trajectory", "--set", "params.omega0=0",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 2
    assert json.loads(res.stderr)["error"]


# --------------------------------------------------------------------- verify

@pytest.fixture(scope="module")
def fast_report():
    return run_verify("fast", 7)


def test_verify_fast_passes(fast_report):
    failed = [c["name"] for c in fast_report["checks"] if not c["pass"]]
    assert not failed


def test_verify_deterministic_under_seed(fast_report, tmp_path, capsys):
    strip = lambda r: {k: v for k, v in r.items() if k != "timings"}
    again = run_verify("fast", 7)
    assert json.dumps(strip(again), sort_keys=True) == json.dumps(strip(fast_report), sort_keys=True)


def test_verify_cli_exit_codes(tmp_path, capsys, monkeypatch):
    import gaussdrive.cli as cli
    monkeypatch.setattr(cli, "run_verify", lambda level, seed: {
        "level": level, "seed": seed, "pass": False, "checks": [{"name": "x", "pass": False}]})
    code, stdout, err = run(["verify", "--out", tmp_path], capsys)
    assert code == 1 and json.loads(stdout)["pass"] is False
    assert _error(err)["error"] == "verification"
    monkeypatch.setattr(cli, "run_verify", lambda level, seed: {
        "level": level, "seed": seed, "pass": True, "checks": [], "timings": {"a": 1.0}})
    code, _, _ = run(["verify", "--out", tmp_path], capsys)
    assert code == 0
    assert "timings" not in json.loads((tmp_path / "verify.json").read_text())


def _scaled(fn, factor):
    def wrapped(*args, **kwargs):
        out = fn(*args, **kwargs)
        if isinstance(out, tuple) and not hasattr(out, "_fields"):
            return tuple(np.asarray(v) * factor for v in out)
        return out * factor
    return wrapped


def test_mutating_free_motion_is_detected(monkeypatch):
    monkeypatch.setattr(propagator, "_free_generic", _scaled(propagator._free_generic, 1 + 1e-3))
    rep = run_verify("fast", 0)
    failed = {c["suite"] for c in rep["checks"] if not c["pass"]}
    assert "first_moments" in failed


def test_mutating_covariance_coefficients_is_detected(monkeypatch):
    monkeypatch.setattr(propagator, "_g_vector", _scaled(propagator._g_vector, 1 + 1e-3))
    rep = run_verify("fast", 0)
    failed = {c["suite"] for c in rep["checks"] if not c["pass"]}
    assert failed & {"covariance", "stationary"}
