import csv
import json

import pytest

from entropic_lp.cli import run, trace_header


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture
def ex11_file(tmp_path):
    doc = {"type": "transport", "mu": [7, 8], "nu": [4, 5, 6], "cost": [[1, 0, 1], [0, 2, 5]]}
    return _write(tmp_path, "ex11.json", doc)


@pytest.fixture
def segment_file(tmp_path):
    return _write(tmp_path, "seg.json", {"type": "lp", "A": [[1, 1]], "b": [2], "c": [0, 1]})


def test_degree_prints_72(capsys):
    assert run(["degree", "--d1", "2", "--e1", "2", "--d2", "2", "--e2", "2"]) == 0
    assert capsys.readouterr().out.strip() == "72"


def test_degree_verify(capsys):
    assert run(["degree", "--d1", "2", "--e1", "2", "--d2", "2", "--e2", "3", "--verify"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "177"
    assert "agrees" in out[1]


def test_solve_sinkhorn_report(ex11_file, capsys):
    assert run(["solve", "--input", ex11_file, "--method", "sinkhorn", "--epsilon", "1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["residuals"]["primal_inf"] <= 1e-10
    assert doc["residuals"]["toric_inf"] <= 1e-8
    assert len(doc["x"]) == 6 and len(doc["p"]) == 4


@pytest.mark.parametrize("method", ["gis", "ascent", "mirror"])
def test_solve_other_methods(ex11_file, tmp_path, method):
    out = tmp_path / "out.json"
    assert run(["solve", "--input", ex11_file, "--method", method, "--epsilon", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["converged"] and doc["method"] == method


def test_sinkhorn_on_lp_is_a_mismatch(segment_file, capsys):
    assert run(["solve", "--input", segment_file, "--method", "sinkhorn", "--epsilon", "1"]) == 2
    assert "transport" in capsys.readouterr().err


def test_gis_without_ones_is_a_mismatch(tmp_path):
    doc = {
        "type": "conic", "d1": 2, "e1": 2, "d2": 2, "e2": 2, "mu": [1, 1], "nu": [1, 1],
        "cost": [[[[0] * 2] * 2] * 2] * 2, "normalized": False,
    }
    path = _write(tmp_path, "conic.json", doc)
    assert run(["solve", "--input", path, "--method", "gis", "--epsilon", "1"]) == 2


def test_nonconvergence_exit_code(ex11_file):
    args = ["solve", "--input", ex11_file, "--method", "sinkhorn", "--epsilon", "0.05", "--max-iter", "1"]
    assert run(args) == 3


@pytest.mark.parametrize(
    "doc",
    [
        {"type": "bogus"},
        {"type": "lp", "A": [[1, 1], [1, 1]], "b": [1, 1], "c": [0, 0]},
        {"type": "transport", "mu": [1, 2], "nu": [1, 1], "cost": [[0, 0], [0, 0]]},
        {"type": "transport", "mu": [1, 1]},
        [1, 2, 3],
    ],
)
def test_invalid_inputs_exit_1(tmp_path, doc):
    path = _write(tmp_path, "bad.json", doc)
    assert run(["build", "--input", path, "--emit-matrix"]) == 1


def test_unreadable_file_exits_1(tmp_path):
    bad = tmp_path / "broken.json"
    bad.write_text("{not json")
    assert run(["oracle", "--input", str(bad)]) == 1


def test_path_segment(segment_file, tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    args = ["path", "--input", segment_file, "--epsilon0", "1", "--theta", "0.8", "--mu-min", "1e-4", "--csv", str(trace)]
    assert run(args) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["status"] == "converged"
    assert summary["final_vertex"] == [2.0, 0.0]
    assert summary["final_vertex_exact"] == ["2", "0"]
    with open(trace, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == trace_header(1, 2) == ["mu", "t_1", "x_1", "x_2", "cost"]
    mus = [float(r[0]) for r in rows[1:]]
    assert all(a > b for a, b in zip(mus, mus[1:]))


def test_oracle_output(ex11_file, capsys):
    assert run(["oracle", "--input", ex11_file]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["x_exact"] == ["0", "1", "6", "4", "4", "0"]
    assert doc["cost_exact"] == "14" and doc["unique"]


def test_oracle_infeasible(tmp_path, capsys):
    path = _write(tmp_path, "inf.json", {"type": "lp", "A": [[1, 1], [1, 2]], "b": [1, 5], "c": [0, 0]})
    assert run(["oracle", "--input", path]) == 0
    assert json.loads(capsys.readouterr().out) == {"feasible": False}


def test_cone_verdict(capsys):
    assert run(["cone", "--d1", "2", "--e1", "2", "--d2", "2", "--e2", "2", "--point", "4,1,1,1"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["member"] is False
    assert run(["cone", "--d1", "2", "--e1", "2", "--d2", "2", "--e2", "2", "--point", "1, 1, 1, 1/2"]) == 0
    assert json.loads(capsys.readouterr().out)["member"] is True


def test_cone_bad_point():
    assert run(["cone", "--d1", "2", "--e1", "2", "--d2", "2", "--e2", "2", "--point", "1,x,1,1"]) == 1


def test_build_is_idempotent(ex11_file, tmp_path):
    first = tmp_path / "first.json"
    second = tmp_path / "second.json"
    assert run(["build", "--input", ex11_file, "--emit-matrix", "--out", str(first)]) == 0
    assert run(["build", "--input", str(first), "--emit-matrix", "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    doc = json.loads(first.read_text())
    assert doc["A"][0] == [1, 1, 1, 0, 0, 0]


def test_build_conic_column_order(tmp_path, capsys):
    doc = {
        "type": "conic", "d1": 2, "e1": 2, "d2": 2, "e2": 2, "mu": [1, 1], "nu": [1, 1],
        "cost": [[[[0, 1], [2, 3]], [[4, 5], [6, 7]]], [[[8, 9], [10, 11]], [[12, 13], [14, 15]]]],
        "normalized": False,
    }
    path = _write(tmp_path, "conic.json", doc)
    assert run(["build", "--input", path, "--emit-matrix"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["c"] == list(range(16))
    assert out["A"][2] == [1, 2, 0, 0] * 4


def test_output_is_deterministic(ex11_file, capsys):
    run(["solve", "--input", ex11_file, "--method", "ascent", "--epsilon", "0.5"])
    a = capsys.readouterr().out
    run(["solve", "--input", ex11_file, "--method", "ascent", "--epsilon", "0.5"])
    assert capsys.readouterr().out == a
