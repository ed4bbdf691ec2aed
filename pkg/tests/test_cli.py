from __future__ import annotations

import json
import subprocess
import sys
from fractions import Fraction

import pytest

from unimeas.cli import main
from unimeas.exact import Dyadic


def _run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def _cfg(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def _q(d: dict) -> Fraction:
    return Dyadic.from_json(d).to_fraction()


def test_integrate_lebesgue_bump(tmp_path, capsys):
    cfg = _cfg(tmp_path, {"measure": {"kind": "lebesgue"}, "function": "(bump @0 1/4 1/2)"})
    code, out, _ = _run(capsys, ["integrate", "--config", cfg, "--k", "16"])
    assert code == 0
    res = json.loads(out)
    assert res["k"] == 16
    assert _q(res["integral"]["lo"]) <= Fraction(3, 8) <= _q(res["integral"]["hi"])


def test_integrate_dirac_one(tmp_path, capsys):
    cfg = _cfg(tmp_path, {"measure": {"kind": "dirac", "parameters": {"space": {"kind": "cantor"},
                                                                        "point": {"bits": "0"}}},
                          "function": "(one)"})
    code, out, _ = _run(capsys, ["integrate", "--config", cfg])
    assert code == 0
    iv = json.loads(out)["integral"]
    assert _q(iv["lo"]) == _q(iv["hi"]) == 1


def test_integrate_bad_json(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    code, _, err = _run(capsys, ["integrate", "--config", str(p)])
    assert code == 2 and "bad JSON" in err


def test_integrate_missing_fields(tmp_path, capsys):
    code, _, _ = _run(capsys, ["integrate", "--config", _cfg(tmp_path, {"measure": {"kind": "lebesgue"}})])
    assert code == 2


def test_precision_cap(tmp_path, capsys):
    cfg = _cfg(tmp_path, {"measure": {"kind": "lebesgue"}, "function": "(one)"})
    assert _run(capsys, ["integrate", "--config", cfg, "--k", "41"])[0] == 2
    assert _run(capsys, ["demo", "martingale", "--budget", "0"])[0] == 2


def test_unknown_demo(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["demo", "nope"])
    assert exc.value.code == 2


def test_demo_tent(capsys):
    code, out, _ = _run(capsys, ["demo", "tent", "--depth", "8"])
    assert code == 0
    rep = json.loads(out)
    series = [_q(d) for d in rep["deficiency"]]
    assert all(b > a for a, b in zip(series, series[1:]))
    assert rep["status"] == "ok"


def test_demo_tent_csv(tmp_path, capsys):
    csv = tmp_path / "t.csv"
    code, _, _ = _run(capsys, ["demo", "tent", "--depth", "4", "--csv", str(csv)])
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "stage,lo,hi" and len(lines) == 5


def test_demo_martingale(capsys):
    code, out, _ = _run(capsys, ["demo", "martingale", "--depth", "12"])
    assert code == 0
    rep = json.loads(out)
    assert rep["uniform"]["exceedances"] == [] and rep["uniform"]["verdict"] == "passes"


def test_demo_kurtz_atom_fails(tmp_path, capsys):
    cfg = _cfg(tmp_path, {"fixture": "atom"})
    code, out, err = _run(capsys, ["demo", "kurtz", "--config", cfg, "--depth", "2", "--budget", "64"])
    assert code == 1
    assert "unverified at budget" in err
    assert json.loads(out)["status"] == "fail"


@pytest.mark.parametrize("name", ["zero-measure", "support", "xi-sample", "extend-pipeline"])
def test_other_demos_pass(name, capsys):
    code, out, _ = _run(capsys, ["demo", name, "--depth", "6", "--k", "10"])
    assert code == 0
    assert json.loads(out)["status"] == "ok"


def test_out_file_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["demo", "xi-sample", "--seed", "42", "--depth", "10", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.json"
    main(["demo", "xi-sample", "--seed", "43", "--depth", "10", "--out", str(c)])
    assert c.read_bytes() != a.read_bytes()


def test_console_script_entry(tmp_path):
    cfg = _cfg(tmp_path, {"measure": {"kind": "lebesgue"}, "function": "(one)"})
    proc = subprocess.run([sys.executable, "-m", "unimeas.cli", "integrate", "--config", cfg, "--k", "8"],
                          capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["integral"]["lo"] == {"mantissa": 1, "exponent": 0}


@pytest.mark.parametrize("depth", [1, 3, 5, 6])
def test_demo_support_shallow_depths(depth, capsys):
    code, out, _ = _run(capsys, ["demo", "support", "--depth", str(depth)])
    assert code == 0
    rep = json.loads(out)
    assert rep["live_from_depth"] == 6
    names = [c["check"] for c in rep["checks"]]
    assert ("center value grows" in names) == (depth >= 6)
