import json
import math
import subprocess
import sys

import pytest

from symreg.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


@pytest.fixture
def sunset(tmp_path):
    path = tmp_path / "sunset.json"
    path.write_text(json.dumps([[1, 0], [1, 1], [0, 1]]))
    return str(path)


def problem_file(tmp_path, **fields):
    base = {"dim": 1, "matrix": [[1, 0], [1, 1], [0, 1]], "symbols": ["-2"]}
    base.update(fields)
    path = tmp_path / "problem.json"
    path.write_text(json.dumps(base))
    return str(path)


def test_integrate_power(capsys):
    code, out = run(capsys, "integrate", "--order", "-4", "--dim", "2")
    assert code == 0
    assert float(out["cutoff"]["value"]) == pytest.approx(math.pi, abs=1e-10)
    assert out["regularisation"] == {"kind": "riesz", "q": "1"}


def test_integrate_normalized_measure(capsys):
    _, plain = run(capsys, "integrate", "--order", "-1", "--dim", "1")
    _, norm = run(capsys, "integrate", "--order", "-1", "--dim", "1", "--measure", "normalized")
    assert float(norm["cutoff"]["value"]) == pytest.approx(float(plain["cutoff"]["value"]) / (2 * math.pi))


def test_integrate_symbol_file_and_dimreg(capsys, tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"order": "-2", "log_type": 0, "coeffs": [[0, 0, "1"]], "truncation": 8}))
    code, out = run(capsys, "integrate", "--symbol", str(path), "--dim", "2", "--reg", "dimreg")
    assert code == 0
    rows = {r["degree"]: float(r["coeff"]) for r in out["laurent"]}
    assert rows[0] == pytest.approx(-math.pi * (0.5772156649015329 + math.log(math.pi)), abs=1e-8)


def test_expand_reports_sectors_and_poles(capsys, sunset):
    code, out = run(capsys, "expand", "--matrix", sunset, "--orders=-2,-2,-2", "--dim", "3", "--order", "2")
    assert code == 0
    assert len(out["sectors"]) == 6
    assert {"rows": [0, 1, 2], "slope": "1", "constant": "0"} in out["pole_factors"]
    assert any(r["degree"] == -1 for r in out["laurent"])


def test_expand_rank_deficient(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps([[1, 2], [2, 4]]))
    code, out = run(capsys, "expand", "--matrix", str(path), "--orders=-2,-2", "--dim", "1")
    assert code == 2
    assert out["error"]["code"] == "RANK_DEFICIENT"


def test_renormalize_with_oracle(capsys, tmp_path):
    code, out = run(capsys, "renormalize", "--problem", problem_file(tmp_path), "--oracle")
    assert code == 0
    assert float(out["value"]) == pytest.approx(math.pi**2 / 3, rel=1e-8)
    assert float(out["oracle_delta"]) < 1e-6


def test_renormalize_birkhoff_divergent(capsys, tmp_path):
    path = problem_file(tmp_path, dim=3, method="birkhoff")
    code, out = run(capsys, "renormalize", "--problem", path, "--oracle")
    assert code == 0
    assert out["method"] == "birkhoff"
    assert "skipped" in out["oracle"]
    assert out["pole_parts_removed"]


def test_renormalize_evaluator_options(capsys, tmp_path):
    path = problem_file(tmp_path)
    for ev in ("e0", "kappa:0,2,1", "linear:shift"):
        code, out = run(capsys, "renormalize", "--problem", path, "--evaluator", ev)
        assert code == 0
        assert float(out["value"]) == pytest.approx(math.pi**2 / 3, rel=1e-8)


def test_unsupported_regularisation(capsys, tmp_path):
    path = problem_file(tmp_path, dim=2, regularisation="dimreg")
    code, out = run(capsys, "renormalize", "--problem", path)
    assert code == 2
    assert out["error"]["code"] == "UNSUPPORTED_REGULARISATION"


def test_schema_errors(capsys, tmp_path):
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"dim": 1, "matrix": [[1]]}))
    code, out = run(capsys, "renormalize", "--problem", str(path))
    assert code == 2 and out["error"]["code"] == "SCHEMA"


def test_oracle_subcommand(capsys, sunset):
    code, out = run(capsys, "oracle", "--matrix", sunset, "--orders=-2,-2,-2", "--dim", "1")
    assert code == 0
    assert float(out["value"]) == pytest.approx(math.pi**2 / 3, rel=1e-9)
    code, out = run(capsys, "oracle", "--matrix", sunset, "--orders=-2,-2,-2", "--dim", "3")
    assert code == 2 and out["error"]["code"] == "NOT_CONVERGENT"
    code, out = run(capsys, "oracle", "--radial", "-1", "--dim", "1")
    assert float(out["value"]) == pytest.approx(2 * math.log(2), abs=1e-7)


def test_verify_hopf_and_evaluators(capsys):
    for suite in ("hopf", "evaluators"):
        code, out = run(capsys, "verify", "--suite", suite, "--seed", "3")
        assert code == 0 and out["all_passed"]


def test_output_is_deterministic(tmp_path):
    path = problem_file(tmp_path, dim=3)
    cmd = [sys.executable, "-m", "symreg.cli", "renormalize", "--problem", path]
    first = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, text=True, check=True).stdout
    assert first == second
