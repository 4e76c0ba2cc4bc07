import csv
import json
import shutil
import subprocess
import sys

import pytest

from toric_hcsck.cli import main


def run(tmp_path, toml, command, *extra):
    cfg = tmp_path / "run.toml"
    cfg.write_text(toml)
    out = tmp_path / "out"
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def report(out, name):
    return json.loads((out / name).read_text())


INTERVAL_CANONICAL = """
[deformation]
kind = "zero"
"""


def test_solve_canonical_interval(tmp_path):
    code, out = run(tmp_path, INTERVAL_CANONICAL, "solve")
    assert code == 0
    rep = report(out, "solve_report.json")
    assert rep["status"] == "SUCCESS"
    assert rep["report"]["iterations"] <= 2
    rows = list(csv.DictReader((out / "solve_field.csv").open()))
    assert list(rows[0]) == ["x1", "u", "det_G", "scalar_fd", "lambda_max", "min_eig_T"]
    assert all(abs(float(r["scalar_fd"]) - 2.0) < 1e-5 for r in rows)


def test_solve_square_domain_exceeded(tmp_path):
    toml = """
[polytope]
preset = "square"
[deformation]
kind = "constant"
matrix_re = [[8.0, 0.0], [0.0, 8.0]]
[spectral]
name = "hyperkahler"
[solver]
degree = 4
"""
    code, out = run(tmp_path, toml, "solve")
    assert code == 2
    assert report(out, "solve_report.json")["status"] == "NOT_SOLVABLE"


def test_solve_futaki_obstruction(tmp_path):
    toml = """
[affine]
mode = "explicit"
coeffs = [2.0, 10.0]
"""
    code, out = run(tmp_path, toml, "solve")
    assert code == 3
    assert report(out, "solve_report.json")["status"] == "FUTAKI_OBSTRUCTION"


@pytest.mark.parametrize("toml", ["seed = = 1", "[solver]\ndegre = 3\n", "[polytope]\npreset = \"hexagon\"\n"])
def test_config_errors_exit_1(tmp_path, toml):
    assert run(tmp_path, toml, "solve")[0] == 1


def test_solve_deterministic_modulo_timestamp(tmp_path):
    toml = """
[polytope]
preset = "simplex"
[deformation]
kind = "constant"
matrix_re = [[0.2, 0.0], [0.0, 0.1]]
matrix_im = [[0.0, 0.1], [0.1, 0.0]]
[spectral]
name = "hyperkahler"
[solver]
degree = 5
"""
    outs = []
    for i in range(2):
        d = tmp_path / f"r{i}"
        d.mkdir()
        code, out = run(d, toml, "solve")
        assert code == 0
        rep = report(out, "solve_report.json")
        rep.pop("timestamp")
        rep["config"].pop("out")
        outs.append((rep, (out / "solve_field.csv").read_text()))
    assert outs[0] == outs[1]


def test_verify_default_passes(tmp_path):
    code, out = run(tmp_path, "", "verify")
    assert code == 0
    assert report(out, "verify_report.json")["passed"]


def test_verify_boundary_fault_fails(tmp_path):
    code, out = run(tmp_path, "[verify]\nboundary_measure_scale = 2.0\n", "verify")
    assert code == 4
    suites = {s["name"]: s for s in report(out, "verify_report.json")["suites"]}
    assert not suites["integration_by_parts"]["passed"]


def test_verify_degree_two_passes_loosely(tmp_path):
    worst = {}
    for degree in ("2", "8"):
        d = tmp_path / degree
        d.mkdir()
        code, out = run(d, "", "verify", "--degree", degree)
        assert code == 0
        suites = {s["name"]: s for s in report(out, "verify_report.json")["suites"]}
        worst[degree] = suites["oracle_comparison"]["worst"]
        tol = suites["oracle_comparison"]["tolerance"]
    assert tol == 1e-5
    assert worst["8"] < worst["2"] <= 1e-2


def test_stability_simplex(tmp_path):
    code, out = run(tmp_path, "[polytope]\npreset = \"simplex\"\n[stability]\nn_probes = 200\n", "stability")
    assert code == 0
    rep = report(out, "stability_report.json")
    assert rep["A"] == pytest.approx([6.0, 0.0, 0.0], abs=1e-12)
    assert rep["lambda_hat"] > 0


def test_stability_obstructed(tmp_path):
    code, _ = run(tmp_path, "[affine]\nmode = \"explicit\"\ncoeffs = [2.0, 10.0]\n", "stability")
    assert code == 3


def test_siegel_battery(tmp_path):
    code, out = run(tmp_path, "[siegel]\nn = 2\ntrials = 100\n", "siegel", "--seed", "4")
    assert code == 0
    rep = report(out, "siegel_report.json")
    assert rep["passed"] and rep["seed"] == 4
    checks = {c["name"]: c["worst"] for c in rep["checks"]}
    assert max(checks["psi_equivariance"], checks["eig_correspondence"]) <= 1e-8


def test_siegel_bad_dimension(tmp_path):
    assert run(tmp_path, "[siegel]\nn = 5\n", "siegel")[0] == 1


def test_oracle1d(tmp_path):
    code, out = run(tmp_path, "", "oracle1d")
    assert code == 0
    assert report(out, "oracle1d_report.json")["sup_error"] <= 1e-5
    header = (out / "oracle1d_samples.csv").read_text().splitlines()[0]
    assert header == "y,oracle_u2,galerkin_u2"


def test_oracle1d_needs_interval(tmp_path):
    assert run(tmp_path, "[polytope]\npreset = \"square\"\n", "oracle1d")[0] == 1


def test_t_steps_override(tmp_path):
    code, out = run(tmp_path, "", "solve", "--t-steps", "2")
    assert code == 0
    assert report(out, "solve_report.json")["config"]["t_schedule"] == [0.0, 0.5, 1.0]


def test_help_documents_columns(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    for col in ("det_G", "scalar_fd", "lambda_max", "min_eig_T", "oracle_u2"):
        assert col in text


def test_module_entry_point(tmp_path):
    res = subprocess.run(
        [sys.executable, "-m", "toric_hcsck", "stability", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "stability_report.json").exists()


@pytest.mark.skipif(shutil.which("toric-hcsck") is None, reason="console script not installed")
def test_console_script_version():
    res = subprocess.run(["toric-hcsck", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.1.0"
