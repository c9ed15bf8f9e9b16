import json

import numpy as np
import pytest

from conftest import periodic_scalar_problem
from sgriccati import io
from sgriccati.bench import random_game_problem
from sgriccati.cli import main, parse_dims
from sgriccati.outer import SolveOptions, solve_game_riccati


def test_problem_roundtrip(tmp_path):
    for p in (random_game_problem(2, 3), periodic_scalar_problem()):
        path = tmp_path / "p.json"
        io.save_problem(path, p)
        q = io.load_problem(path)
        assert q.dims == p.dims and q.period == p.period
        for t in (0.0, 0.3):
            a, b = p.at(t), q.at(t)
            assert np.array_equal(a.R, b.R) and np.array_equal(a.A[0], b.A[0])


def test_problem_file_layout(tmp_path):
    path = tmp_path / "p.json"
    io.save_problem(path, periodic_scalar_problem())
    doc = json.loads(path.read_text())
    assert set(doc["dims"]) == {"n", "m1", "m2", "r"}
    assert doc["A"][0]["fourier"]["harmonics"][0]["sin"] == [[0.5]]
    assert "constant" in doc["M"]


def test_solution_roundtrip(tmp_path):
    X, _, _ = solve_game_riccati(periodic_scalar_problem(), SolveOptions(nodes=32))
    path = tmp_path / "s.json"
    io.save_solution(path, X)
    doc = json.loads(path.read_text())
    assert doc["kind"] == "grid" and doc["nodes"] == 32 and len(doc["samples"]) == 33
    Y = io.load_solution(path)
    assert np.array_equal(X.samples, Y.samples)
    assert np.array_equal(X.at(0.37), Y.at(0.37))


def test_bad_documents():
    with pytest.raises(io.FormatError):
        io.problem_from_dict({"dims": {"n": 1}})
    with pytest.raises(io.FormatError):
        io.solution_from_dict({"kind": "table"})


def test_parse_dims():
    assert parse_dims("1..4") == [1, 2, 3, 4]
    assert parse_dims("2,5") == [2, 5]


def test_cli_roundtrip(tmp_path, capsys):
    p, s, r, v = (str(tmp_path / n) for n in ("p.json", "s.json", "r.json", "v.json"))
    assert main(["generate", "--dim", "2", "--seed", "9", "--out", p]) == 0
    assert main(["solve", "--problem", p, "--out", s, "--report", r]) == 0
    assert json.loads(open(r).read())["success"] is True
    assert main(["verify", "--problem", p, "--solution", s, "--report", v]) == 0
    bad = json.loads(open(s).read())
    bad["X"][0][0] += 1.0
    open(s, "w").write(json.dumps(bad))
    assert main(["verify", "--problem", p, "--solution", s]) == 3


def test_cli_exit_codes(tmp_path):
    missing = str(tmp_path / "none.json")
    assert main(["verify", "--problem", missing, "--solution", missing]) == 4
    broken = tmp_path / "b.json"
    broken.write_text('{"dims": {"n": 1}}')
    assert main(["solve", "--problem", str(broken), "--out", str(tmp_path / "o.json")]) == 2
    doc = io.problem_to_dict(random_game_problem(1, 1))
    doc["R22"] = {"constant": [[-1.0]]}
    invalid = tmp_path / "i.json"
    invalid.write_text(json.dumps(doc))
    assert main(["solve", "--problem", str(invalid), "--out", str(tmp_path / "o.json")]) == 2
    p = str(tmp_path / "p.json")
    main(["generate", "--dim", "1", "--seed", "2", "--out", p])
    assert main(["solve", "--problem", p, "--out", str(tmp_path / "o.json"),
                 "--max-outer", "1"]) == 3


def test_cli_bench(tmp_path):
    out = tmp_path / "r.csv"
    code = main(["bench", "--dims", "1..2", "--trials", "3", "--seed", "5", "--out", str(out),
                 "--inner-out", str(tmp_path / "i.csv"), "--summary", str(tmp_path / "s.txt"),
                 "--no-timing"])
    assert code == 0
    assert len(out.read_text().splitlines()) == 7
