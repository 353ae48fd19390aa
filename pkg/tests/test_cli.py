import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fiberphase.cli import main, parse_angle
from fiberphase.evolution import wang_keiji_decompose
from fiberphase.geometry import HelixSpec, helix_gamma, sample_helix_positions, write_path_file


def _kv(text):
    out = {}
    for line in text.strip().splitlines():
        k, v = line.split(" = ", 1)
        out[k] = v
    return out


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_parse_angle():
    assert parse_angle("60deg") == pytest.approx(math.pi / 3)
    assert parse_angle("0.5") == 0.5
    assert parse_angle("1.5rad") == 1.5


# -- helix-info ------------------------------------------------------------------------


def test_helix_info_physical(capsys):
    code, out, _ = run(capsys, "helix-info", "--pitch", 0.02, "--radius", 0.001, "--index", 1.5)
    assert code == 0
    info = _kv(out)
    assert float(info["gamma_paper"]) == pytest.approx(5.3165e10, rel=1e-4)
    assert float(info["gamma_derived"]) > float(info["gamma_paper"])
    assert float(info["wang_keiji_residual"]) <= 1e-12 * float(info["gamma"]) ** 2


def test_helix_info_flat_radius(capsys):
    code, out, _ = run(capsys, "helix-info", "--pitch", 0.1, "--radius", 0)
    info = _kv(out)
    assert code == 0
    assert float(info["theta_derived"]) == 0.0
    assert float(info["geometric_phase_per_turn"]) == 0.0


def test_helix_info_angles(capsys):
    code, out, _ = run(capsys, "helix-info", "--theta", math.pi / 4, "--gamma", 1)
    info = _kv(out)
    assert code == 0
    assert float(info["omega1"]) == pytest.approx(-0.5)
    assert float(info["omega0"]) == pytest.approx(-0.5)
    assert abs(float(info["wang_keiji_residual"])) < 1e-15


def test_wang_keiji_residual_independent_of_gamma_convention():
    spec = HelixSpec(d=0.02, a=0.001, n=1.5)
    for conv in ("paper", "derived"):
        g = helix_gamma(spec, convention=conv)
        assert abs(wang_keiji_decompose(1.0, g).residual) <= 1e-12 * g * g


# -- simulate --------------------------------------------------------------------------


def test_simulate_one_turn(capsys, tmp_path):
    out_dir = tmp_path / "run"
    code, out, _ = run(capsys, "simulate", "--theta", "60deg", "--gamma", 2, "--periods", 1,
                       "--out", out_dir)
    assert code == 0
    summary = _kv(out)
    assert float(summary["phase_geometric"]) == pytest.approx(math.pi, abs=1e-8)
    assert abs(float(summary["phase_dynamical"])) < 1e-9 * 2 * math.pi
    assert float(summary["closed_form_deviation"]) < 1e-8
    # every printed number is in the machine-readable summary
    assert _kv((out_dir / "summary.txt").read_text()) == summary
    header = (out_dir / "trajectory.csv").read_text().splitlines()[0].split(",")
    assert header == ["t", "re_m+1", "re_m0", "re_m-1", "im_m+1", "im_m0", "im_m-1",
                      "helicity", "norm", "phase_total", "phase_dyn", "phase_geo"]
    traj = np.loadtxt(out_dir / "trajectory.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(traj[:, 7], 1.0, atol=1e-10)
    phases = np.loadtxt(out_dir / "phases.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(phases[:, 3], phases[:, 4], atol=1e-8)


def test_simulate_spin_half_labels(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--theta", 1.0, "--gamma", 1, "--spin", "1/2",
                       "--sigma", -1, "--out", tmp_path)
    assert code == 0
    summary = _kv(out)
    assert float(summary["m"]) == -0.5 and summary["sigma"] == "-1"
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header.startswith("t,re_m+1/2,re_m-1/2,im_m+1/2,im_m-1/2,")


def test_simulate_straight_fiber(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--theta", 0, "--gamma", 1, "--periods", 2,
                       "--out", tmp_path)
    assert code == 0
    summary = _kv(out)
    for key in ("phase_total", "phase_dynamical", "phase_geometric"):
        assert float(summary[key]) == 0.0
    traj = np.loadtxt(tmp_path / "trajectory.csv", delimiter=",", skiprows=1)
    assert np.all(traj[:, 1:7] == traj[0, 1:7])


def test_simulate_sampled_helix_file(capsys, tmp_path):
    theta, gamma = math.pi / 3, 2.0
    t = np.linspace(0, 2 * math.pi / gamma, 10001)
    f = tmp_path / "helix.csv"
    write_path_file(f, t, sample_helix_positions(theta, gamma, 1.0, t))
    code, out, _ = run(capsys, "simulate", "--path-file", f)
    assert code == 0
    summary = _kv(out)
    assert summary["path_kind"] == "sampled"
    assert abs(float(summary["phase_geometric"]) - math.pi) < 1e-6


def test_simulate_is_deterministic(capsys, tmp_path):
    for name in ("a", "b"):
        assert run(capsys, "simulate", "--theta", 0.7, "--gamma", 1.3, "--periods", 1.5,
                   "--out", tmp_path / name)[0] == 0
    for fname in ("trajectory.csv", "phases.csv", "summary.txt"):
        assert (tmp_path / "a" / fname).read_bytes() == (tmp_path / "b" / fname).read_bytes()


def test_simulate_config_file_with_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# helix\ntheta = 45deg\ngamma = 1.0\nspin = 1/2\nperiods = 1\n")
    code, out, _ = run(capsys, "simulate", "--config", cfg, "--gamma", 2.0)
    assert code == 0
    summary = _kv(out)
    assert float(summary["gamma"]) == 2.0
    assert float(summary["m"]) == 0.5
    assert float(summary["theta"]) == pytest.approx(math.pi / 4)


def test_simulate_physical_helix_derived(capsys):
    code, out, _ = run(capsys, "simulate", "--pitch", 0.02, "--radius", 0.001, "--index", 1.5,
                       "--gamma-convention", "derived", "--periods", 1,
                       "--steps-per-period", 2000)
    assert code == 0
    summary = _kv(out)
    theta = math.atan2(2 * math.pi * 0.001, 0.02)
    assert float(summary["theta"]) == pytest.approx(theta)
    assert float(summary["phase_geometric"]) == pytest.approx(
        2 * math.pi * (1 - math.cos(theta)), abs=1e-8)


@pytest.mark.parametrize("argv", [
    ["simulate"],
    ["simulate", "--theta", "1", "--gamma", "1", "--periods", "1", "--duration", "2"],
    ["simulate", "--theta", "1", "--gamma", "1", "--spin", "3/2"],
    ["simulate", "--theta", "1", "--gamma", "1", "--steps-per-period", "10"],
    ["simulate", "--theta", "abc", "--gamma", "1"],
    ["simulate", "--pitch", "0.1", "--radius", "0.01"],
    ["simulate", "--path-file", "x.csv", "--theta", "1"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_missing_path_file_exits_1(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--path-file", tmp_path / "nope.csv")
    assert code == 1 and err


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2


# -- verify ---------------------------------------------------------------------------


def test_verify_reduced_sweep_passes(capsys, tmp_path):
    report_file = tmp_path / "report.json"
    code, out, _ = run(capsys, "verify", "--periods", 1, "--random-paths", 1, "--quiet",
                       "--out", report_file)
    assert code == 0
    report = json.loads(report_file.read_text())
    assert report["passed"] and report["n_failed"] == 0
    names = {c["name"] for c in report["checks"]}
    assert names >= {"oracle_equivalence", "dynamical_phase_vanishes", "helicity_conservation",
                     "wang_keiji_residual", "motion_identity", "geometric_phase_law",
                     "solid_angle_consistency"}


def test_verify_detects_corrupted_hamiltonian(capsys, tmp_path):
    report_file = tmp_path / "report.json"
    code, out, _ = run(capsys, "verify", "--periods", 1, "--random-paths", 1,
                       "--corrupt-epsilon", 1e-3, "--out", report_file)
    assert code == 1
    failed = {c["name"] for c in json.loads(report_file.read_text())["checks"] if not c["passed"]}
    assert "dynamical_phase_vanishes" in failed
    assert "FAIL dynamical_phase_vanishes" in out


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "fiberphase.cli", "helix-info", "--theta", "1",
                           "--gamma", "1"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "wang_keiji_residual" in proc.stdout
