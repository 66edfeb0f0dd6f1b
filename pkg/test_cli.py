"""Command-line tests; each calls scripts.ppack.main with an argv list."""
import csv
import json

import pytest

from scripts.ppack import main
from services.instance_io import parse_solution, read_instance, read_point
from services.rng import RNG_ID


def _gen(tmp_path, capsys):
    instance, point = tmp_path / "inst.txt", tmp_path / "inst.frac"
    code = main(["gen", "--family", "k-sparse-exact", "--m", "16", "--n", "16", "--k", "3",
                 "--seed", "1", "--out", str(instance), "--frac", str(point)])
    assert code == 0
    return instance, point, json.loads(capsys.readouterr().out)


def test_gen_writes_instance_and_point(tmp_path, capsys):
    instance, point, info = _gen(tmp_path, capsys)
    assert info["m"] == 16
    assert info["rng"] == RNG_ID
    assert read_instance(instance).max_row_size == 3
    values = read_point(point).values
    assert len(values) == 16
    assert values[0] == pytest.approx(1 / 3)


def test_walk_reports_summary(tmp_path, capsys):
    instance, point, _ = _gen(tmp_path, capsys)
    out = tmp_path / "walked.frac"
    code = main(["walk", "--in", str(instance), "--frac", str(point), "--seed", "2",
                 "--stop-unfixed", "1", "--out", str(out)])
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["max_unfixed"] <= 1
    assert summary["log_base"] == "e"
    assert len(read_point(out).values) == 16


def test_round_writes_result_and_solution(tmp_path, capsys):
    instance, point, _ = _gen(tmp_path, capsys)
    result, solution = tmp_path / "result.json", tmp_path / "x.sol"
    code = main(["round", "--method", "walk-lll", "--in", str(instance), "--frac", str(point),
                 "--seed", "3", "--json", str(result), "--sol", str(solution)])
    assert code == 0
    document = json.loads(result.read_text())
    assert document["method"] == "walk-lll"
    assert document["t_used"] >= 1
    assert len(parse_solution(solution.read_text())) == 16


def test_round_rejects_infeasible_point(tmp_path, capsys):
    instance, _, _ = _gen(tmp_path, capsys)
    point = tmp_path / "bad.frac"
    point.write_text("frac 16\n" + " ".join(["1"] * 16) + "\n")
    assert main(["round", "--method", "rt", "--in", str(instance), "--frac", str(point)]) == 2
    assert "violates" in capsys.readouterr().err


def test_analyze_lower_bound_cell(tmp_path):
    output = tmp_path / "cells.csv"
    assert main(["analyze", "--mode", "lowerbound", "--n", "12", "--k", "3", "--t", "1",
                 "--csv", str(output)]) == 0
    with open(output, newline="") as f:
        [row] = list(csv.DictReader(f))
    assert row["target_size"] == "4"
    assert row["bound_holds"] == "True"


def test_accept_chernoff(capsys):
    assert main(["accept", "--suite", "chernoff", "--workers", "1"]) == 0
    assert "[PASS] chernoff" in capsys.readouterr().out


def test_accept_unknown_suite(capsys):
    assert main(["accept", "--suite", "nope"]) == 2
