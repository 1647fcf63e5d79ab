"""End-to-end CLI contract: commands, file formats, exit codes, determinism."""

import json
import os
import subprocess
import sys

import pytest

ENV = dict(os.environ, QFINE_NUMBA="0")  # keep subprocess startup light


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "qfine.cli", *args],
        capture_output=True,
        text=True,
        env=ENV,
    )


@pytest.fixture
def tuple_file(tmp_path):
    t = {"n": 1, "T0": [[1.0]], "T1": [[2.0]], "T2": [[0.0]], "T3": [[0.0]]}
    path = tmp_path / "tuple.json"
    path.write_text(json.dumps(t))
    return str(path)


@pytest.fixture
def fq_file(tmp_path):
    d = {"kind": "poly", "coeffs": [[0, 0, 0, 0], [1, 0, 0, 0]], "side": "left"}
    path = tmp_path / "fq.json"
    path.write_text(json.dumps(d))
    return str(path)


def test_verify_small_run_exits_zero(tmp_path):
    out = tmp_path / "report.json"
    r = run_cli(
        "verify", "--dim", "2", "--trials", "2", "--seed", "7",
        "--identities", "SUNBOU", "FREL", "TRANSFORM_VS_INTEGRAL_Q",
        "--out", str(out),
    )
    assert r.returncode == 0, r.stderr
    rep = json.loads(out.read_text())
    assert rep["all_pass"]
    assert len(rep["results"]) == 6
    for entry in rep["results"]:
        assert entry["pass"]
        assert entry["max_residual"] <= entry["threshold"]


def test_verify_deterministic_bytes(tmp_path):
    args = (
        "verify", "--dim", "1", "--trials", "2", "--seed", "11",
        "--identities", "SUNBOU", "CONST_INVARIANCE_Q", "TRANSFORM_VS_INTEGRAL_S",
    )
    a = run_cli(*args)
    b = run_cli(*args)
    assert a.returncode == b.returncode == 0
    assert a.stdout == b.stdout


def test_verify_markdown_table(tmp_path):
    out = tmp_path / "report.md"
    r = run_cli(
        "verify", "--dim", "1", "--trials", "1", "--format", "md",
        "--identities", "SUNBOU", "TRANSFORM_VS_INTEGRAL_P2",
        "--out", str(out),
    )
    assert r.returncode == 0, r.stderr
    text = out.read_text()
    assert "| identity |" in text
    assert "Unbounded-calculus admission gates" in text
    assert "f(alpha)=0 and d_alpha f(alpha)=0" in text


def test_calculus_s_of_q_returns_tuple(tmp_path, tuple_file, fq_file):
    out = tmp_path / "res.json"
    r = run_cli(
        "calculus", "--tuple", tuple_file, "--function", fq_file,
        "--kind", "S", "--out", str(out),
    )
    assert r.returncode == 0, r.stderr
    res = json.loads(out.read_text())
    assert abs(res["components"]["T0"][0][0] - 1.0) < 1e-9
    assert abs(res["components"]["T1"][0][0] - 2.0) < 1e-9
    assert res["meta"]["kind"] == "S"
    assert res["meta"]["nodes_used"] > 0


def test_calculus_q_of_q_is_minus_two(tmp_path, tuple_file, fq_file):
    out = tmp_path / "res.json"
    r = run_cli(
        "calculus", "--tuple", tuple_file, "--function", fq_file,
        "--kind", "Q", "--out", str(out),
    )
    assert r.returncode == 0, r.stderr
    res = json.loads(out.read_text())
    assert abs(res["components"]["T0"][0][0] + 2.0) < 1e-9
    for name in ("T1", "T2", "T3"):
        assert abs(res["components"][name][0][0]) < 1e-9


def test_calculus_gate_violation_exit_4(tmp_path, tuple_file):
    f = {"kind": "rational", "coeffs": [[1, 0, 0, 0]], "poles": [9.0]}
    fpath = tmp_path / "f.json"
    fpath.write_text(json.dumps(f))
    r = run_cli(
        "calculus", "--tuple", tuple_file, "--function", str(fpath),
        "--kind", "P2", "--mode", "unbounded-transform", "--alpha", "5.0",
    )
    assert r.returncode == 4
    assert "f(alpha)=0" in r.stderr


def test_spectrum_plain_output(tuple_file):
    r = run_cli("spectrum", "--tuple", tuple_file)
    assert r.returncode == 0
    assert r.stdout.strip() == "(1, 2)"


def test_spectrum_real_diagonal(tmp_path):
    t = {
        "n": 2,
        "T0": [[1.0, 0.0], [0.0, 3.0]],
        "T1": [[0.0, 0.0], [0.0, 0.0]],
        "T2": [[0.0, 0.0], [0.0, 0.0]],
        "T3": [[0.0, 0.0], [0.0, 0.0]],
    }
    path = tmp_path / "t.json"
    path.write_text(json.dumps(t))
    r = run_cli("spectrum", "--tuple", str(path))
    assert r.returncode == 0
    assert r.stdout.splitlines() == ["(1, 0)", "(3, 0)"]


def test_fueter_cubic_within_tolerance(tmp_path):
    d = {"kind": "poly", "coeffs": [[0] * 4, [0] * 4, [0] * 4, [1, 0, 0, 0]]}
    path = tmp_path / "f3.json"
    path.write_text(json.dumps(d))
    out = tmp_path / "resid.json"
    r = run_cli("fueter", "--function", str(path), "--trials", "20", "--out", str(out))
    assert r.returncode == 0, r.stderr
    res = json.loads(out.read_text())
    assert max(res["residuals"].values()) <= 1e-4
    assert "max residual" in r.stdout


def test_unattainable_rtol_exit_3():
    r = run_cli(
        "verify", "--dim", "1", "--trials", "1", "--rtol", "1e-20",
        "--nodes-cap", "256", "--identities", "TRANSFORM_VS_INTEGRAL_S",
    )
    assert r.returncode == 3
    assert "did not converge" in r.stderr


def test_noncommuting_tuple_rejected(tmp_path, fq_file):
    t = {
        "n": 2,
        "T0": [[0.0, 0.0], [0.0, 0.0]],
        "T1": [[0.0, 1.0], [0.0, 0.0]],
        "T2": [[0.0, 0.0], [1.0, 0.0]],
        "T3": [[0.0, 0.0], [0.0, 0.0]],
    }
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(t))
    r = run_cli("calculus", "--tuple", str(path), "--function", fq_file, "--kind", "S")
    assert r.returncode == 3
    assert "commute" in r.stderr


def test_identity_failure_exit_2(tmp_path, monkeypatch):
    # force a failing threshold through a tiny nodes cap is exit 3; instead
    # patch a report through the python API to exercise the exit-2 path
    from qfine import cli

    class Args:
        dim, trials, seed = 1, 1, 0
        margin, rtol, nodes_cap = 0.3, 1e-10, 2**14
        identities = ["SUNBOU"]
        format, out = "json", str(tmp_path / "r.json")

    def fake_run(**kw):
        return {
            "config": {"identities": ["SUNBOU"], "dim": 1, "trials": 1,
                        "seed": 0, "rtol": 1e-10, "margin": 0.3,
                        "nodes_cap": 2**14},
            "results": [{"identity": "SUNBOU", "dim": 1, "seed": 0,
                          "samples": 10, "max_residual": 1.0,
                          "threshold": 1e-8, "pass": False, "nodes_used": 0}],
            "all_pass": False,
            "notes": {},
        }

    monkeypatch.setattr(cli, "run_verification", lambda **kw: fake_run())
    assert cli.cmd_verify(Args()) == 2


def test_scalar_case_algebraic_residuals_tight(tmp_path):
    out = tmp_path / "r.json"
    r = run_cli(
        "verify", "--dim", "1", "--trials", "1", "--seed", "5",
        "--identities", "SUNBOU", "PROTQAQT_1", "PROTQAQT_2", "NEWFAP",
        "REQAQT", "P2_TRANSFORM", "FREL", "SRESOLVENT_EQ",
        "--out", str(out),
    )
    assert r.returncode == 0, r.stderr
    rep = json.loads(out.read_text())
    assert all(e["max_residual"] <= 1e-12 for e in rep["results"])
