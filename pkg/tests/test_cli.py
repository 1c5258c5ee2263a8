import json

import pytest

from bdgkit.cli import EXIT_CAPACITY, EXIT_CONFIG, EXIT_FAIL, EXIT_IO, EXIT_OK, main

FAST = ["--suite", "bdg-exact", "--suite", "stein"]


def test_run_csv_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(FAST + ["--seed", "3", "--out", str(a)]) == EXIT_OK
    assert main(["run"] + FAST + ["--seed", "3", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().splitlines()[0] == "name,family,p,lhs,rhs,ratio,tracked_constant,pass"


def test_run_json(tmp_path):
    out = tmp_path / "r.json"
    assert main(FAST + ["--format", "json", "--out", str(out)]) == EXIT_OK
    rows = json.loads(out.read_text())
    assert rows and all("ratio" in r for r in rows)


def test_small_cap_fails(tmp_path, capsys):
    code = main(["--suite", "bdg-exact", "--p", "3", "--cap", "0.1", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_FAIL
    assert "FAIL" in capsys.readouterr().err


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"suites": ["stein"], "seed": 2}))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o.csv")]) == EXIT_OK
    cfg.write_text("{oops")
    assert main(["--config", str(cfg)]) == EXIT_CONFIG
    assert main(["--config", str(tmp_path / "missing.json")]) == EXIT_IO


@pytest.mark.parametrize("argv", [["--suite", "nope"], ["--p", "a,b"], ["--format", "xml"], ["--cap", "-2"]])
def test_bad_arguments(argv):
    assert main(argv) == EXIT_CONFIG


def test_bad_output_path(tmp_path):
    assert main(FAST + ["--out", str(tmp_path / "no" / "such" / "dir.csv")]) == EXIT_IO


@pytest.mark.parametrize("cmd", ["davis-dump", "davis"])
def test_davis_dump(tmp_path, cmd):
    out = tmp_path / "d.json"
    assert main([cmd, "--seed", "1", "--horizon", "3", "--dim", "2", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    names = [p["name"] for p in doc["processes"]]
    assert names == ["M", "L", "K", "K1", "K2"]
    assert doc["spec"]["dim"] == 2


def test_davis_dump_one_step(tmp_path):
    out = tmp_path / "d.json"
    assert main(["davis-dump", "--horizon", "1", "--out", str(out)]) == EXIT_OK
    procs = {p["name"]: p["values"] for p in json.loads(out.read_text())["processes"]}
    assert procs["K"] == procs["M"]
    assert all(v == 0 for t in procs["L"] for a in t for v in a)


def test_davis_dump_capacity():
    assert main(["davis-dump", "--horizon", "30", "--branching", "3"]) == EXIT_CAPACITY
