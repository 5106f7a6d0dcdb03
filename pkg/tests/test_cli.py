import csv
import io
import json
import math
import subprocess
import sys

import pytest

from trunclap.cli import main

import oracles as ref


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_eval_power_repr(capsys):
    code, out, _ = run(capsys, "eval", "--op", "I-", "--k", "1", "--N", "3", "--s", "0.75",
                       "--profile", "power:0.4", "--r", "1,2", "--format", "json")
    assert code == 0
    rows = json.loads(out)["rows"]
    # one orthogonal direction for k = 1 on a decreasing profile
    for row in rows:
        assert row["value"] == pytest.approx(ref.c_perp(0.4, 0.75) * row["r"] ** (-0.4 - 1.5), rel=1e-9)


def test_eval_methods_agree(capsys):
    base = ("eval", "--op", "I+", "--k", "2", "--N", "3", "--profile", "gaussian:1", "--r", "1", "--format", "json")
    _, a, _ = run(capsys, *base, "--method", "repr")
    _, b, _ = run(capsys, *base, "--method", "optimize")
    va, vb = json.loads(a)["rows"][0], json.loads(b)["rows"][0]
    assert vb["method"] == "optimize"
    assert va["value"] == pytest.approx(vb["value"], rel=1e-6)


def test_eval_directional_and_local(capsys):
    code, out, _ = run(capsys, "eval", "--op", "Idir", "--theta", "0.3", "--profile", "gaussian:1",
                       "--r", "1.5", "--format", "json")
    assert code == 0
    assert json.loads(out)["rows"][0]["value"] == pytest.approx(ref.gauss_directional(0.75, 1.5, 0.3), rel=1e-9)
    code, out, _ = run(capsys, "eval", "--op", "P-", "--profile", "gaussian:1", "--r", "1", "--format", "json")
    assert json.loads(out)["rows"][0]["value"] == pytest.approx(-4 / 2.718281828459045)
    assert run(capsys, "eval", "--op", "Idir")[0] == 2


def test_solve_json(capsys):
    code, out, _ = run(capsys, "solve", "--exponent", "gamma_bar", "--k", "2", "--s", "0.75", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["root"] == pytest.approx(0.155151, abs=1e-6)
    assert data["p_star"] == pytest.approx(1 + 1.5 / data["root"])
    assert {"root", "residual", "p_star"} <= set(data)
    code, out, _ = run(capsys, "solve", "--exponent", "j_threshold", "--k", "3", "--s", "0.8", "--format", "json")
    assert json.loads(out)["p_star"] == pytest.approx(3 / 1.4)


def test_constants(capsys):
    code, out, _ = run(capsys, "constants", "--name", "F_lower_bound", "--format", "json")
    assert code == 0
    assert json.loads(out)["rows"][0]["value"] == pytest.approx(math.pi ** 2 / 6, rel=1e-12)
    code, out, _ = run(capsys, "constants", "--name", "c_hat", "--gamma", "0.5", "--s", "0.6", "--format", "csv")
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["value"]) == pytest.approx(ref.c_hat(0.5, 0.6), rel=1e-9)


def test_json_is_byte_identical(capsys):
    argv = ("sweep", "--target", "gamma_tilde_trend", "--N", "3", "--s-grid", "0.8,0.9", "--format", "json")
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b


def test_sweep_csv_columns(capsys):
    code, out, _ = run(capsys, "sweep", "--target", "gamma_bar_trend", "--k", "2", "--s-grid", "0.6,0.75",
                       "--format", "csv")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "kind,k,N,s,value,residual,p_star"
    assert len(lines) == 3
    assert float(lines[2].split(",")[4]) == pytest.approx(0.155151, abs=1e-6)


def test_table_output(capsys):
    code, out, _ = run(capsys, "sweep", "--target", "constant_trends", "--k", "3", "--s-grid", "0.9,0.99")
    assert code == 0
    assert out.splitlines()[0].split() == ["kind", "k", "N", "s", "value", "residual", "p_star"]


def test_config_precedence(tmp_path, capsys):
    conf = tmp_path / "run.ini"
    conf.write_text("[run]\nformat = json\nk = 3\ns = 0.75\nexponent = gamma_bar\n")
    _, out, _ = run(capsys, "solve", "--config", str(conf))
    assert json.loads(out)["root"] == pytest.approx(0.5, abs=1e-9)
    _, out, _ = run(capsys, "solve", "--config", str(conf), "--k", "2")
    assert json.loads(out)["root"] == pytest.approx(0.155151, abs=1e-6)


def test_output_file(tmp_path, capsys):
    dest = tmp_path / "out.json"
    code, out, _ = run(capsys, "constants", "--name", "F_s", "--s", "1", "--format", "json", "--output", str(dest))
    assert code == 0 and out == ""
    assert abs(json.loads(dest.read_text())["rows"][0]["value"]) < 1e-7


def test_exit_codes(tmp_path, capsys):
    assert run(capsys)[0] == 2
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys, "eval", "--profile", "nonsense:1")[0] == 2
    assert run(capsys, "eval", "--s", "0.3")[0] == 2
    assert run(capsys, "solve", "--exponent", "gamma_bar", "--k", "1")[0] == 2
    assert run(capsys, "constants", "--name", "c_hat", "--gamma", "0.5", "--max-subdivisions", "1")[0] == 3
    bad = tmp_path / "bad.ini"
    bad.write_text("[p1]\nbuilder = gaussian_p1\nradii = 1\nclaim = supersolution\n")
    code, out, err = run(capsys, "verify", "--suite", str(bad), "--no-gate", "--format", "json")
    assert code == 1
    assert json.loads(out)["verdict"] == "fail"
    assert "p1: fail" in err


def test_verify_packaged_suite(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "paper-core", "--no-gate", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert data["suite"] == "paper-core"
    assert all(sc["verdict"] == "pass" for sc in data["scenarios"])


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "trunclap.cli", "solve", "--exponent", "beta_bar",
                           "--format", "json"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["root"] == pytest.approx(0.096279, abs=1e-6)
