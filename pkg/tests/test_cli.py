"""Command-line interface: eval, bench and primitives."""
import json

import pytest
from click.testing import CliRunner

from pramdb.cli import check_primitive, loglog_slope, main


@pytest.fixture
def files(tmp_path):
    (tmp_path / "R.csv").write_text("A,B\n1,2\n2,3\n3,4\n")
    (tmp_path / "S.csv").write_text("B,C\n2,5\n3,6\n9,9\n")
    (tmp_path / "db.json").write_text(json.dumps({"relations": [{"name": "R", "file": "R.csv"},
                                                                {"name": "S", "file": "S.csv"}]}))
    (tmp_path / "Rg.csv").write_text("A,B\nx,y\ny,z\n")
    (tmp_path / "Sg.csv").write_text("B,C\nw,w\ny,q\n")
    (tmp_path / "dbo.json").write_text(json.dumps({"setting": "ordered", "relations": [
        {"name": "R", "file": "Rg.csv", "ordered_by": ["B", "A"]},
        {"name": "S", "file": "Sg.csv", "ordered_by": ["B", "C"]}]}))
    (tmp_path / "q.dl").write_text("Q(a,c) :- R(a,b), S(b,c).\n")
    (tmp_path / "p.plan").write_text("(select (sjoin R S) A 'x')\n")
    (tmp_path / "tri.dl").write_text("Q(a,b,c) :- R(a,b), S(b,c), T(a,c).\n")
    return tmp_path


def run(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


def test_eval_report_and_results(files):
    res = run("eval", files / "db.json", files / "q.dl", "--verify", "--results", files / "out.csv")
    assert res.exit_code == 0, res.output
    rep = json.loads(res.output)
    assert rep["report_version"] == 1 and rep["oracle_match"] is True
    assert rep["result_cardinality"] == 2 and rep["method"] == "acyclic"
    assert all(isinstance(rep["metrics"][k], int) for k in ("work", "depth", "space"))
    assert all(a["ok"] for a in rep["assertions"])
    assert (files / "out.csv").read_text() == "a,c\n1,5\n2,6\n"


def test_eval_is_byte_identical_on_replay(files):
    outs = {run("eval", files / "db.json", files / "q.dl", "--seed", "7").output for _ in range(2)}
    assert len(outs) == 1


@pytest.mark.parametrize("variant", ["a", "b", "c", "naive"])
def test_eval_plan_ordered_setting(files, variant):
    res = run("eval", files / "dbo.json", files / "p.plan", "--verify", "--variant", variant,
              "--out", files / "r.json")
    assert res.exit_code == 0, res.output
    rep = json.loads((files / "r.json").read_text())
    assert rep["oracle_match"] is True and rep["result_cardinality"] == 1 and rep["setting"] == "ordered"


def test_eval_errors_exit_nonzero(files):
    assert run("eval", files / "db.json", files / "tri.dl").exit_code == 2  # unknown relation T
    assert run("eval", files / "db.json", files / "q.dl", "--mode", "common").exit_code == 2
    assert run("eval", files / "db.json", files / "q.dl", "--method", "free_connex").exit_code == 2
    assert run("eval", files / "db.json", files / "q.dl", "--epsilon", "0").exit_code != 0


def test_bench_table(files):
    res = run("bench", "uniform", "--sizes", "64,128", "--format", "csv")
    assert res.exit_code == 0, res.output
    lines = res.output.strip().splitlines()
    assert lines[0] == "n,rep,IN,OUT,cells,work,depth,space"
    assert lines[-1].startswith("# slope=") and "depth_constant=true" in lines[-1]
    js = json.loads(run("bench", "acyclic", "--sizes", "32,64").output)
    assert js["depth_constant"] is True and isinstance(js["slope"], str)


@pytest.mark.parametrize("name", ["prefix-sums", "compact", "padded-sort", "links", "schedule"])
def test_primitives_command(name):
    res = run("primitives", name, "-n", "512")
    assert res.exit_code == 0 and "PASS" in res.output
    assert check_primitive(name, 0, "1/2", "1/2")[0]


def test_primitives_range_violation():
    res = run("primitives", "padded-sort", "-n", "16", "--c", "1", "--max-value", "1000")
    assert res.exit_code == 2 and "exceeds range" in res.output


def test_slope_helper():
    assert abs(loglog_slope([1, 2, 4], [3, 6, 12]) - 1.0) < 1e-12
