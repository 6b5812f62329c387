import io
import json
import os
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from circuitode.cli import run

SCHEMA = json.loads(resources.files("circuitode").joinpath("schemas/derive.schema.json")
                    .read_text(encoding="utf-8"))


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), out, err)
    return code, out.getvalue(), err.getvalue()


def test_derive_ota_text():
    code, out, err = call("derive", "--circuit", "ota", "--target", "x3", "--format", "text")
    assert code == 0 and not err
    assert "ode: C*x3' = C*g_m3*e1' + g_m3*g_m4*e1" in out.splitlines()
    assert "assumes: g_m4 != 0" in out


def test_unknown_circuit_exit_2():
    code, out, err = call("derive", "--circuit", "nosuch")
    assert code == 2 and "UnknownCircuit" in err and not out


def test_check_duffing_passes():
    code, out, err = call("check", "--circuit", "duffing")
    assert code == 0, err
    assert "series residuals (order 6): 0 0 0 0 0 0" in out and "result: pass" in out


@pytest.mark.parametrize("name", ["ota", "duffing", "rectifier", "lc_diode", "chua"])
def test_derive_json_matches_schema(name):
    code, out, _ = call("derive", "--circuit", name, "--format", "json", "--all-rules")
    assert code == 0
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    assert doc["circuit"] == name and doc["rules"]


def test_check_json_matches_schema():
    code, out, _ = call("check", "--circuit", "ota", "--format", "json", "--step", "1e-3")
    doc = json.loads(out)
    jsonschema.validate(doc, SCHEMA)
    assert code == 0 and doc["check"]["passed"]


def test_latex_output():
    code, out, _ = call("derive", "--circuit", "ota", "--format", "latex")
    assert code == 0 and out.startswith("\\[") and "\\dot{x3}" in out


def test_budget_failure_exit_1(monkeypatch):
    assert call("derive", "--circuit", "chua", "--budget", "1")[0] == 1
    monkeypatch.setenv("CIRCUITODE_BUDGET", "1")
    code, _, err = call("derive", "--circuit", "chua")
    assert code == 1 and "BudgetExceeded" in err


def test_parse_error_exit_2(tmp_path):
    f = tmp_path / "bad.sys"
    f.write_text("constants a;\nunknowns x;\nx' = a*x + g;\n", encoding="utf-8")
    code, _, err = call("derive", "--file", str(f))
    assert code == 2 and "line 3, column 12" in err


def test_file_input(tmp_path):
    f = tmp_path / "rc.sys"
    f.write_text("constants R, C;\nexcitations u;\nunknowns i, v;\n"
                 "u = R*i + v;\ni = C*v';\n", encoding="utf-8")
    code, out, _ = call("derive", "--file", str(f), "--target", "v")
    assert code == 0 and "ode: R*C*v' = -v + u" in out


def test_check_with_fixture_file(tmp_path):
    f = tmp_path / "fx.json"
    f.write_text(json.dumps({
        "constants": {"C": 1, "R": "1/4", "a": 1, "b": "1/5"},
        "base_ic": {"psi": "1/3", "v_C": 0},
        "excitations": {"v0": [["cos", 1, 2]]},
        "span": [0, "1/2"], "step": 1e-3}), encoding="utf-8")
    code, out, err = call("check", "--circuit", "duffing", "--fixture", str(f))
    assert code == 0, err + out
    assert "on [0, 0.5]" in out


def test_malformed_fixture(tmp_path):
    f = tmp_path / "fx.json"
    f.write_text("{", encoding="utf-8")
    assert call("check", "--circuit", "duffing", "--fixture", str(f))[0] == 2


def test_check_without_fixture():
    assert call("check", "--circuit", "transformer_rectifier")[0] == 2


def test_usage_errors():
    assert call("derive")[0] == 2
    assert call("derive", "--circuit", "ota", "--file", "x.sys")[0] == 2
    assert call("check", "--circuit", "ota", "--format", "latex")[0] == 2
    assert call("derive", "--circuit", "ota", "--target", "zz")[0] == 2


def test_list_circuits():
    code, out, _ = call("list-circuits")
    assert code == 0
    names = [line.split()[0] for line in out.splitlines()]
    assert names == ["ota", "duffing", "chua", "rectifier", "lc_diode", "transformer_rectifier"]


def test_algebraize():
    code, out, _ = call("algebraize", "i_nl = -I0*arctan(v_nl/V0)", "--constants", "I0, V0")
    assert code == 0
    assert out.splitlines()[0] in ("V0^2*i_nl' + i_nl'*v_nl^2 + I0*V0*v_nl' = 0",
                                   "i_nl'*v_nl^2 + V0^2*i_nl' + I0*V0*v_nl' = 0")
    assert "retained:" in out


def test_algebraize_nested_exit_2():
    assert call("algebraize", "i = exp(exp(v))")[0] == 2


def test_deterministic_across_processes():
    cmd = [sys.executable, "-m", "circuitode", "derive", "--circuit", "chua", "--format", "json"]
    runs = [subprocess.run(cmd, capture_output=True, text=True, check=True).stdout for _ in range(2)]
    env_runs = subprocess.run(cmd, capture_output=True, text=True, check=True,
                              env={**os.environ, "PYTHONHASHSEED": "123"}).stdout
    assert runs[0] == runs[1] == env_runs
