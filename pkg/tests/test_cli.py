import json

import pytest

from sdharmonic.cli import dumps, run


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _checks(text):
    return {c["name"]: c for c in json.loads(text)["checks"]}


def test_verify_A(capsys):
    code, out, _ = _run(capsys, "verify", "--model", "A")
    assert code == 0
    checks = _checks(out)
    for name in ("dω=0", "*ω=ω", "ω=*₃μ+dθ∧μ", "dλ=ω"):
        assert checks[name]["status"] == "pass"
    assert all({"name", "anchor", "status", "value", "tolerance"} <= set(c) for c in checks.values())


@pytest.mark.parametrize("model", ["B", "B-glued"])
def test_verify_other_models(capsys, model):
    code, out, _ = _run(capsys, "verify", "--model", model)
    assert code == 0
    if model == "B-glued":
        assert _checks(out)["φ*λ=λ"]["status"] == "pass"


def test_classify_B(capsys):
    code, out, _ = _run(capsys, "classify", "--model", "B", "--R", "1/2")
    res = json.loads(out)["result"]
    assert code == 0 and res["class"] == "Unoriented" and res["monodromy"] == -1


def test_census_B(capsys):
    code, out, _ = _run(capsys, "census", "--model", "B", "--grid", "101")
    assert code == 0
    checks = _checks(out)
    assert checks["poles doubled"]["status"] == "pass"
    assert checks["(±1,0,0) single"]["status"] == "pass"


def test_reeb_csv(capsys, tmp_path):
    code, out, _ = _run(capsys, "reeb", "--model", "A", "--point", "0,0,0,1", "--T", "1", "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "orbit.csv").read_text().splitlines()
    assert lines[0] == "t,theta,x1,x2,x3"
    assert len(lines) == 1 + 101
    assert (tmp_path / "reeb.json").read_text() == out


def test_moser_descriptor(capsys, tmp_path):
    desc = {
        "family": {"omega0": {"kind": "A"}, "perturbation": {
            "epsilon": "1/10",
            # a cubic primitive makes eta vanish to second order on C
            "generator": {"degree": 1, "components": {"1": [{"c": "1", "pow": [0, 3, 0]}]}},
        }},
        "particles": {"seed": 3, "count": 20, "region": [0.2, 0.8]},
        "steps": 8,
        "output": str(tmp_path / "flow.csv"),
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(desc))
    code, out, err = _run(capsys, "moser", "--input", str(path))
    assert code == 0, err
    rows = (tmp_path / "flow.csv").read_text().splitlines()
    assert rows[0].endswith(",error") and len(rows) == 21


def test_moser_default_reports_failed_decay(capsys, tmp_path):
    code, out, err = _run(capsys, "moser", "--out", str(tmp_path))
    checks = _checks(out)
    assert checks["pullback error"]["status"] == "pass"
    # the default perturbation does not vanish on C; see the decisions log
    assert code == 1 and "eta order at C" in err


def test_graft_mismatch_is_input_error(capsys):
    code, _, err = _run(capsys, "graft", "--model", "B", "--target", "A")
    assert code == 2 and "Unoriented" in err


def test_bad_inputs(capsys):
    assert _run(capsys, "verify", "--model", "Z")[0] == 2
    assert _run(capsys, "frobnicate")[0] == 2
    assert _run(capsys, "classify", "--model", "B", "--R", "3/2")[0] == 2
    assert _run(capsys, "classify", "--model", "A", "--R", "1/2")[0] == 2
    assert _run(capsys, "reeb", "--point", "0,0.5,0,0")[0] == 2
    assert _run(capsys, "moser", "--input", "/nonexistent.json")[0] == 2
    assert _run(capsys, "verify", "--tolerance", "bogus=1")[0] == 2


def test_tolerance_override(capsys):
    code, out, _ = _run(capsys, "reeb", "--point", "0,0,0,1", "--T", "1", "--tolerance", "drift=-1")
    assert code == 1


def test_deterministic_reports(capsys):
    a = _run(capsys, "moser", "--seed", "4")[1]
    b = _run(capsys, "moser", "--seed", "4")[1]
    c = _run(capsys, "moser", "--seed", "5")[1]
    assert a == b and a != c


def test_dumps_float_precision():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps(1.0) == "1.0"
    assert dumps(float("nan")) == "null"
    assert json.loads(dumps({"a": [1, 2.5], "b": None, "c": True})) == {"a": [1, 2.5], "b": None, "c": True}
