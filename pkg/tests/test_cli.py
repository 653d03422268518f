import json
import subprocess
import sys
from math import pi

import pytest

from wresidue import cli
from wresidue.cosphere import ImaginaryResidue


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def balanced(s):
    depth = 0
    for ch in s:
        depth += {"{": 1, "}": -1}.get(ch, 0)
        if depth < 0:
            return False
    return depth == 0


def test_unperturbed_latex(capsys):
    code, out, _ = run(capsys, "density", "--triple", "unperturbed", "--m", "3", "--format", "latex")
    assert code == 0
    assert r"-\frac{1}{6}" in out and "2^{3}" in out
    assert balanced(out) and "$" not in out and r"\documentclass" not in out


def test_type1_m2_json(capsys):
    code, out, _ = run(capsys, "density", "--triple", "type1", "--m", "2")
    assert code == 0
    doc = cli.parse_document(out)
    inv = {row["name"]: row["coefficient"] for row in doc["invariants"]}
    assert inv == {"s": "-1/12", "lap_f": "0", "grad_f_sq": "0"}
    assert all(r["prefactor"] == {"volSphere": True, "trId": "2^m"} for r in doc["results"])


def test_json_round_trip(capsys):
    _, out, _ = run(capsys, "density", "--triple", "type2", "--m", "2")
    assert cli.emit_document(cli.parse_document(out)) == out


def test_eval_vol(capsys):
    _, out, _ = run(capsys, "density", "--triple", "unperturbed", "--m", "2", "--eval-vol")
    pre = json.loads(out)["results"][0]["prefactor"]
    assert pre["volSphere"] is False and pre["trId"] == 4
    assert float(pre["value"]) == pytest.approx(4 * 2 * pi ** 2)


def test_latex_with_numeric_context(tmp_path, capsys):
    ctx = {"m": 2, "riem": [[1, 2, 1, 2, "1/2"]], "fJets": [[[], 2], [[1], "1/3"]], "xJets": None}
    path = tmp_path / "ctx.json"
    path.write_text(json.dumps(ctx))
    code, out, _ = run(capsys, "density", "--triple", "type1", "--m", "2", "--context", str(path))
    assert code == 0
    doc = json.loads(out)
    assert doc["invariants"] is None
    assert [r["termKey"] for r in doc["results"]] == ["1"]
    code, out, _ = run(capsys, "density", "--triple", "type1", "--m", "2", "--context", str(path), "--format", "latex")
    assert code == 0 and balanced(out)


def test_bianchi_violation_exit_3(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"m": 2, "riem": [[1, 2, 3, 4, 1]]}))
    code, _, err = run(capsys, "density", "--triple", "type1", "--m", "2", "--context", str(path))
    assert code == 3 and "Bianchi" in err


@pytest.mark.parametrize("content", ['{"m": 3}', "not json", '{"m": 2, "fJets": [[[], 0]]}'])
def test_context_errors_exit_3(tmp_path, capsys, content):
    path = tmp_path / "ctx.json"
    path.write_text(content)
    code, _, _ = run(capsys, "density", "--triple", "type1", "--m", "2", "--context", str(path))
    assert code == 3


def test_missing_context_file(capsys):
    code, _, _ = run(capsys, "density", "--triple", "type1", "--m", "2", "--context", "/nonexistent.json")
    assert code == 3


@pytest.mark.parametrize("argv", [
    ["density", "--triple", "type1", "--m", "1"],
    ["density", "--triple", "type9", "--m", "2"],
    ["density", "--m", "2"],
    ["moments", "--indices", "1,1", "--n", "5"],
    ["moments", "--indices", "1,x", "--n", "4"],
    ["verify", "--m-list", "a,b"],
    [],
])
def test_flag_errors_exit_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_pipeline_error_exit_4(capsys, monkeypatch):
    def boom(spec):
        raise ImaginaryResidue("i survives")

    monkeypatch.setattr(cli, "wres_density", boom)
    code, _, err = run(capsys, "density", "--triple", "type1", "--m", "2")
    assert code == 4 and "ImaginaryResidue" in err


def test_moments(capsys):
    _, out, _ = run(capsys, "moments", "--indices", "1,1", "--n", "4")
    assert json.loads(out)["results"][0]["coefficient"] == "1/4"
    _, out, _ = run(capsys, "moments", "--indices", "1,2", "--n", "4")
    assert json.loads(out)["results"][0]["coefficient"] == "0"
    _, out, _ = run(capsys, "moments", "--indices", "1,1,2,2", "--n", "4", "--mc-samples", "1000000", "--seed", "1")
    doc = json.loads(out)
    assert doc["results"][0]["coefficient"] == "1/24"
    assert doc["monteCarlo"]["passed"]
    assert abs(float(doc["monteCarlo"]["estimate"]) - 1 / 24) < 3 * float(doc["monteCarlo"]["stderr"])


def test_verify_lemmas(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "lemmas", "--m-list", "2")
    assert code == 0
    doc = json.loads(out)
    got = {r["target"] for r in doc["reports"]}
    assert got == set(cli.SUITES["lemmas"])
    assert all(r["status"] == "ExactMatch" or r["erratum"] for r in doc["reports"])


def test_verify_oracles_deterministic(capsys):
    args = ("verify", "--suite", "oracles", "--m-list", "2", "--seed", "7", "--mc-samples", "20000")
    code1, out1, _ = run(capsys, *args)
    code2, out2, _ = run(capsys, *args)
    assert code1 == code2 == 0
    assert out1 == out2
    assert all(c["passed"] for c in json.loads(out1)["checks"])


def test_verify_exit_1_on_unadjudicated(capsys, monkeypatch):
    from wresidue.actions import VerificationReport

    def fake(ctx, target):
        return VerificationReport(target, ctx.m, "Mismatch", {}, "EngineDisagreesWithOracle")

    monkeypatch.setattr(cli, "compare_with_paper", fake)
    code, _, _ = run(capsys, "verify", "--suite", "theorems", "--m-list", "2")
    assert code == 1


def test_default_m_list():
    assert cli._parse_m_list("") == [2, 3, 4]
    assert cli._parse_m_list(None) == [2, 3, 4]
    assert cli._parse_m_list("2,5") == [2, 5]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "wresidue", "moments", "--indices", "1,1", "--n", "6"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    assert json.loads(res.stdout)["results"][0]["coefficient"] == "1/6"
