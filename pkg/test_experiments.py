"""Tests for plan parsing, sweeps, rounding dispatch and acceptance suites."""
import csv
import hashlib
import json

import pytest

from schemas.experiments import RESULT_COLUMNS
from services.acceptance import SUITES, run_suite
from services.errors import PlanFormatError, UnknownSuiteError
from services.experiment_runner import parse_plan, parse_value, run_plan
from services.generators import default_point, random_k_sparse
from services.lll_engine import lll_error_target
from services.rounding_methods import run_method

PLAN = """
# two methods on one shared instance
out results/demo
cell k-sparse-exact m=16 n=16 k=3 seed=1 rt 3 10
cell k-sparse-exact m=16 n=16 k=3 seed=1 greedy 3 10
"""


def _read_rows(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_parse_value():
    assert parse_value("true") is True
    assert parse_value("3") == 3
    assert parse_value("0.5") == 0.5
    assert parse_value("auto") == "auto"


def test_parse_plan():
    plan = parse_plan(PLAN)
    assert plan.output_dir == "results/demo"
    assert len(plan.cells) == 2
    cell = plan.cells[0]
    assert cell.method == "rt"
    assert cell.trials == 3
    assert cell.trial_seed(2) == 12
    assert cell.generator.seed == 1
    assert not cell.regenerate


def test_parse_plan_regenerates_without_generator_seed():
    plan = parse_plan("cell k-sparse-exact m=8 n=8 k=2 walk-lll t=auto stop_unfixed=1 2 5\n")
    cell = plan.cells[0]
    assert cell.regenerate
    assert cell.params == {"t": "auto", "stop_unfixed": 1}


@pytest.mark.parametrize("line", [
    "cell no-such-family m=8 n=8 k=2 rt 2 5",
    "cell k-sparse-exact m=8 n=8 k=2 no-such-method 2 5",
    "cell k-sparse-exact m=8 n=8 k=2 rt 0 5",
    "cell k-sparse-exact m=8 n=8 k=2 rt 2",
    "cell k-sparse-exact m=8 n=8 rt 2 5",
    "run everything",
])
def test_parse_plan_errors(line):
    with pytest.raises(PlanFormatError):
        parse_plan(line)


def test_empty_plan_writes_header_only(tmp_path):
    results = run_plan(parse_plan("# nothing\n"), workers=1, output_dir=tmp_path)
    assert results == []
    lines = (tmp_path / "results.csv").read_text().splitlines()
    assert lines == [",".join(RESULT_COLUMNS)]


def test_plan_produces_one_row_per_trial(tmp_path):
    results = run_plan(parse_plan(PLAN), workers=1, output_dir=tmp_path)
    rows = _read_rows(tmp_path / "results.csv")
    assert len(results) == len(rows) == 6
    assert [(r["cell"], r["trial"]) for r in rows] == [(str(c), str(t)) for c in range(2) for t in range(3)]
    assert all(r["status"] == "ok" for r in rows)
    assert len({r["instance_digest"] for r in rows}) == 1

    document = json.loads((tmp_path / "cell_0000.json").read_text())
    assert document["method"] == "rt"
    assert len(document["results"]) == 3
    assert document["metadata"]["log_base"] == "e"

    summary = _read_rows(tmp_path / "summary.csv")
    assert len(summary) == 2
    assert int(summary[0]["ok"]) == 3
    assert float(summary[0]["linf_load_max"]) == max(r.linf_load for r in results[:3])


def test_plan_runs_are_reproducible(tmp_path):
    run_plan(parse_plan(PLAN), workers=1, output_dir=tmp_path / "a")
    run_plan(parse_plan(PLAN), workers=1, output_dir=tmp_path / "b")
    for name in ("results.csv", "summary.csv", "cell_0000.json", "cell_0001.json"):
        assert _digest(tmp_path / "a" / name) == _digest(tmp_path / "b" / name)


def test_worker_count_does_not_change_output(tmp_path):
    plan = ("cell k-sparse-exact m=16 n=16 k=3 walk-lll 4 20\n"
            "cell k-sparse-exact m=16 n=16 k=3 seed=2 rt 4 20\n")
    run_plan(parse_plan(plan), workers=1, output_dir=tmp_path / "serial")
    run_plan(parse_plan(plan), workers=4, output_dir=tmp_path / "pooled")
    for name in ("results.csv", "summary.csv", "cell_0000.json", "cell_0001.json"):
        assert _digest(tmp_path / "serial" / name) == _digest(tmp_path / "pooled" / name)


def test_failed_trials_are_recorded(tmp_path):
    plan = parse_plan("cell k-sparse-exact m=16 n=16 k=3 seed=1 walk-lll t=1 2 0\n"
                      "cell k-sparse-exact m=16 n=16 k=3 seed=1 rt 1 0\n")
    results = run_plan(plan, workers=1, output_dir=tmp_path)
    assert [r.status for r in results] == ["error", "error", "ok"]
    assert "guard" in results[0].error


def test_run_method_dispatch():
    instance = random_k_sparse(32, 32, 4, seed=3)
    point = default_point(instance)
    rt = run_method("rt", instance, point, seed=1)
    assert rt.stats["opt_fractional"] == pytest.approx(8.0)
    greedy = run_method("greedy", instance, point, seed=1)
    assert greedy.stats["k"] == 4
    lll = run_method("lll", instance, point, seed=1)
    assert lll.stats["t_used"] == lll_error_target(lll.stats["d_measured"])
    assert lll.converged
    with pytest.raises(ValueError):
        run_method("no-such-method", instance, point, seed=1)


def test_unknown_suite():
    with pytest.raises(UnknownSuiteError):
        run_suite("no-such-suite")
    assert "chernoff" in SUITES


def test_chernoff_suite_passes():
    [result] = run_suite("chernoff", workers=1)
    assert result.passed
    assert result.measured["strict_triples"] == 1000
