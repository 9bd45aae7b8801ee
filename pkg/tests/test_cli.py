import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from ltvnull import cli, io

ROTATION = {"n": 2, "A": [["0", "1"], ["-1", "0"]], "b": ["0", "1"], "c": ["1", "0"]}
PERIODIC = {"n": 2, "k_min": 0, "k_max": 1, "extension": {"periodic": 2},
            "steps": [{"k": 0, "A": [["1", "2"], ["0", "1"]], "b": ["0", "1"], "c": ["1", "0"]},
                      {"k": 1, "A": [["0", "1"], ["-1", "1/2"]], "b": ["1", "1"],
                       "c": ["1", "1"]}]}


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, doc in (("rot", ROTATION), ("per", PERIODIC)):
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(doc))
        out[name] = p
    return out


def _rows(path):
    with open(path) as f:
        return list(csv.reader(f))


def test_nullify_all_reports_zero_product(files, tmp_path, capsys):
    code = cli.main(["nullify", "--system", str(files["per"]), "--time", "0", "--all",
                     "--out", str(tmp_path / "t.csv")])
    out, err = capsys.readouterr()
    assert code == 0
    doc = json.loads(out)
    assert doc["steps"] <= doc["bound"] == 28 and doc["mode"] == "rational"
    assert "exact zero" in err
    rows = _rows(tmp_path / "t.csv")
    assert rows[0] == ["k", "x_1", "x_2", "y", "F"]
    assert rows[-1][1:3] == ["0", "0"]


def test_nullify_is_byte_identical_across_runs(files, tmp_path):
    outs = []
    for i in range(2):
        sched, trace = tmp_path / f"s{i}.json", tmp_path / f"t{i}.csv"
        assert cli.main(["nullify", "--system", str(files["per"]), "--time", "1",
                         "--state", "3,-1/2", "--seed", "5", "--schedule", str(sched),
                         "--out", str(trace)]) == 0
        outs.append((sched.read_bytes(), trace.read_bytes()))
    assert outs[0] == outs[1]


def test_simulate_with_emitted_schedule(files, tmp_path, capsys):
    sched = tmp_path / "s.json"
    cli.main(["nullify", "--system", str(files["per"]), "--time", "0", "--state", "1,2",
              "--schedule", str(sched)])
    capsys.readouterr()
    assert cli.main(["simulate", "--system", str(files["per"]), "--time", "0", "--state", "1,2",
                     "--feedback", str(sched)]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["k", "x_1", "x_2", "y", "u"]
    assert rows[-1][1:3] == ["0", "0"]


def test_sweep_flags_pi_singular(files, capsys):
    assert cli.main(["sweep", "--system", str(files["rot"]), "--delta-min", "pi/4",
                     "--delta-max", "pi", "--steps", "4"]) == 0
    rows = list(csv.reader(capsys.readouterr().out.splitlines()))
    assert rows[0] == ["delta", "k", "min_sv", "decoupling", "verdict"]
    assert [r[-1] for r in rows[1:]] == ["controllable"] * 3 + ["singular"]
    assert float(rows[-1][0]) == pytest.approx(np.pi)


def test_canon_on_canonical_file_gives_identity(files, tmp_path, capsys):
    canon, T = tmp_path / "c.json", tmp_path / "T.json"
    assert cli.main(["canon", "--system", str(files["per"]), "--out", str(canon)]) == 0
    assert cli.main(["canon", "--system", str(canon), "--transform", str(T)]) == 0
    doc = json.loads(T.read_text())
    assert all(e["matrix"] == [["1", "0"], ["0", "1"]] for e in doc["T"])
    assert {"range", "T"} <= set(doc)


def test_discretize_emits_loadable_file(files, tmp_path):
    out = tmp_path / "d.json"
    assert cli.main(["discretize", "--system", str(files["rot"]), "--delta", "0.5",
                     "--k-range", "0,2", "--out", str(out)]) == 0
    s = io.load_system(out)
    assert list(s.indices()) == [0, 1, 2]


def test_check_passes(capsys):
    assert cli.main(["check", "--count", "3"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "PASS  coeff_matrix_det > 0" in out


def test_check_on_file(files, capsys):
    assert cli.main(["check", "--system", str(files["per"])]) == 0


def test_check_exit_code_on_violation(monkeypatch, capsys):
    monkeypatch.setattr(cli, "coeff_matrix_det", lambda k, m: -1)
    assert cli.main(["check", "--count", "1"]) == cli.EXIT_INVARIANT
    assert "FAIL  coeff_matrix_det > 0" in capsys.readouterr().out


def test_validation_errors_exit_one(files, tmp_path, capsys):
    assert cli.main(["nullify", "--system", str(tmp_path / "missing.json"), "--time", "0",
                     "--all"]) == 1
    assert cli.main(["nullify", "--system", str(files["per"]), "--time", "0",
                     "--state", "1,2,3"]) == 1
    assert cli.main(["nullify", "--system", str(files["rot"]), "--time", "0", "--all"]) == 1
    assert cli.main(["discretize", "--system", str(files["rot"]), "--delta", "-1",
                     "--k-range", "0,1"]) == 1
    assert cli.main(["sweep", "--system", str(files["rot"]), "--delta-min", "1",
                     "--delta-max", "2", "--steps", "3", "--tol", "0"]) == 1
    assert "error" in capsys.readouterr().err


def test_stage_failures_exit_two(tmp_path, capsys):
    doc = {"n": 2, "k_min": 0, "k_max": 0, "extension": {"periodic": 1},
           "steps": [{"k": 0, "A": [[1, 0], [0, 1]], "b": [1, 0], "c": [1, 0]}]}
    p = tmp_path / "u.json"
    p.write_text(json.dumps(doc))
    assert cli.main(["canon", "--system", str(p)]) == 2
    assert "[canonical]" in capsys.readouterr().err
    assert cli.main(["nullify", "--system", str(p), "--time", "0", "--state", "1,1"]) == 2
    assert "[nullifier:precondition]" in capsys.readouterr().err


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "ltvnull", "check", "--count", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
