import json
from functools import partial
from importlib.resources import files

import pytest

from winmdp.cli import main
from winmdp.datasets import load_branching
from winmdp.io import format_model
from winmdp.oracle import brute_force_value


def _data(name):
    return str(files("winmdp") / "data" / name)


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), err


def test_check_yes(capsys):
    code, doc, _ = _run(capsys, "check", _data("coin_flip.mdp"), "--objective", "fw-par", "--lambda", "1",
                        "--state", "s", "--threshold", "1/1")
    assert code == 0
    assert doc["value"] == "1/1" and doc["decision"] == "yes"


def test_check_no(capsys):
    code, doc, _ = _run(capsys, "check", _data("reopening.mdp"), "--objective", "bw-par",
                        "--state", "s1", "--threshold", "1/100")
    assert code == 1
    assert doc["value"] == "0/1" and doc["decision"] == "no"


def test_check_missing_lambda(capsys):
    code, doc, err = _run(capsys, "check", _data("coin_flip.mdp"), "--objective", "dfw-par", "--state", "s")
    assert code == 2 and doc is None
    assert "error" in err


def test_check_inconclusive(capsys):
    code, doc, _ = _run(capsys, "check", _data("reopening_mp.mdp"), "--objective", "bw-mp",
                        "--state", "s1", "--threshold", "1/2")
    assert code == 3
    assert doc["confidence"] == "bounded_by_cap"


def test_check_dfw_value_and_strategy(capsys, tmp_path):
    out = tmp_path / "sigma.json"
    code, doc, _ = _run(capsys, "check", _data("coin_flip.mdp"), "--objective", "dfw-par", "--lambda", "3",
                        "--state", "s", "--emit-strategy", "--strategy-out", str(out))
    assert code == 0
    assert doc["value"] == "3/4"
    assert "strategy" in doc
    assert json.loads(out.read_text())["memory"]


@pytest.mark.parametrize(
    "argv",
    [
        ["check", "nowhere.mdp", "--objective", "fw-par", "--lambda", "1", "--state", "s"],
        ["check", _data("coin_flip.mdp"), "--objective", "fw-mp", "--lambda", "1", "--state", "s"],
        ["check", _data("coin_flip.mdp"), "--objective", "xw-par", "--lambda", "1", "--state", "s"],
        ["check", _data("coin_flip.mdp"), "--objective", "fw-par", "--lambda", "0", "--state", "s"],
        ["check", _data("coin_flip.mdp"), "--objective", "fw-par", "--lambda", "1", "--state", "q"],
        ["check", _data("coin_flip.mdp"), "--objective", "bw-par", "--lambda", "2", "--state", "s"],
        ["check", _data("coin_flip.mdp"), "--objective", "fw-par", "--lambda", "1", "--state", "s", "--threshold", "3/2"],
        ["check", _data("coin_flip.mdp"), "--objective", "fw-par", "--lambda", "1", "--state", "s", "--threshold", "half"],
        ["classify", _data("coin_flip.mdp"), "--kind", "mp", "--lambda", "1"],
        ["classify", _data("coin_flip.mdp"), "--kind", "par"],
        ["oracle", _data("coin_flip.mdp"), "--objective", "bw-par"],
        ["simulate", _data("coin_flip.mdp"), "--objective", "dfw-par", "--lambda", "3",
         "--samples", "10", "--horizon", "2", "--seed", "0"],
        [],
    ],
)
def test_usage_errors(capsys, argv):
    assert main(argv) == 2


def test_syntax_error_reports_line(capsys, tmp_path):
    bad = tmp_path / "bad.mdp"
    bad.write_text("mdp par\nstate t priority 0\naction t a\n  t 2/1\n")
    code, _, err = _run(capsys, "check", str(bad), "--objective", "fw-par", "--lambda", "1", "--state", "t")
    assert code == 2
    assert "4" in err


def test_large_lambda_warns(capsys):
    code, _, err = _run(capsys, "check", _data("coin_flip.mdp"), "--objective", "dfw-par", "--lambda", "21", "--state", "s")
    assert code == 0
    assert "warning" in err


def test_classify(capsys):
    code, doc, _ = _run(capsys, "classify", _data("reopening.mdp"), "--kind", "par", "--bounded")
    assert code == 0
    assert [r["result"] for r in doc["mec_report"]] == ["not_good"]
    code, doc, _ = _run(capsys, "classify", _data("coin_flip.mdp"), "--kind", "par", "--lambda", "1")
    assert [r["result"] for r in doc["mec_report"]] == ["good"]


def test_simulate_with_exported_strategy(capsys, tmp_path):
    sigma = tmp_path / "sigma.json"
    _run(capsys, "check", _data("coin_flip.mdp"), "--objective", "dfw-par", "--lambda", "3",
         "--state", "s", "--strategy-out", str(sigma))
    code, doc, _ = _run(capsys, "simulate", _data("coin_flip.mdp"), "--objective", "dfw-par", "--lambda", "3",
                        "--state", "s", "--samples", "20000", "--horizon", "30", "--seed", "7",
                        "--strategy", str(sigma))
    assert code == 0
    assert abs(doc["estimate"] - 0.75) < 0.02
    lo, hi = doc["interval_99"]
    assert lo <= doc["estimate"] <= hi
    assert doc["convention"].startswith("prefix estimate")


def test_simulate_malformed_strategy(capsys, tmp_path):
    sigma = tmp_path / "sigma.json"
    sigma.write_text("{}")
    code, _, _ = _run(capsys, "simulate", _data("coin_flip.mdp"), "--objective", "dfw-par", "--lambda", "3",
                      "--samples", "10", "--horizon", "5", "--seed", "0", "--strategy", str(sigma))
    assert code == 2


def test_oracle(capsys, tmp_path):
    code, doc, _ = _run(capsys, "oracle", _data("coin_flip.mdp"), "--objective", "dfw-par", "--lambda", "3")
    assert code == 0
    assert doc["values"] == {"s": "3/4", "t": "1/1"}


def test_oracle_too_large(capsys, tmp_path, monkeypatch):
    import winmdp.cli
    monkeypatch.setattr(winmdp.cli, "brute_force_value", partial(brute_force_value, limit=2))
    path = tmp_path / "branching.mdp"
    path.write_text(format_model(load_branching()))
    code, _, err = _run(capsys, "oracle", str(path), "--objective", "fw-par", "--lambda", "5")
    assert code == 2
    assert "more than 2" in err
