"""Tests for the bound calculators and brute-force oracles."""
import math

import pytest

from schemas.instances import PackingInstance
from services.errors import EnumerationBudgetError, MixedInstanceError
from services.generators import random_k_sparse
from services.instance_model import evaluate
from services.analysis import (
    brute_force_min_load,
    hit_probability_sweep,
    hypergeometric_pmf,
    lower_bound_condition,
    pipeline_report,
    row_hit_probability,
    sum_tail,
)


def test_lower_bound_condition_threshold():
    assert lower_bound_condition(300, 10, 2, 2)
    assert not lower_bound_condition(290, 10, 2, 2)


def test_lower_bound_condition_with_unit_target():
    assert lower_bound_condition(100, 10, 2, 1)
    assert not lower_bound_condition(70, 10, 2, 1)


def test_lower_bound_condition_is_monotone_in_m():
    results = [lower_bound_condition(m, 10, 3, 2) for m in range(10, 5000, 10)]
    first_true = results.index(True)
    assert all(results[first_true:])


def test_sum_tail():
    assert sum_tail(2, 2) == pytest.approx(2 * math.exp(-1))


def test_row_hit_probability_example():
    cell = row_hit_probability(12, 3, 1)
    assert cell.target_size == 4
    assert cell.exact == pytest.approx(1 - 56 / 220)
    assert cell.bound_holds
    assert row_hit_probability(12, 3, 0).exact == 1.0


def test_hypergeometric_pmf_sums_to_one():
    assert math.fsum(hypergeometric_pmf(20, 5, 7, j) for j in range(6)) == pytest.approx(1.0)
    assert math.fsum(hypergeometric_pmf(100, 10, 30, j) for j in range(11)) == pytest.approx(1.0, rel=1e-9)


def test_hypergeometric_log_path_matches_exact_counts():
    expected = math.comb(20, 3) * math.comb(41, 5) / math.comb(61, 8)
    assert hypergeometric_pmf(61, 8, 20, 3) == pytest.approx(expected, rel=1e-9)


def test_hit_probability_sweep_has_no_violations():
    cells = hit_probability_sweep(64, 8)
    assert cells
    assert all(cell.bound_holds for cell in cells)
    assert all(cell.target_size >= cell.t for cell in cells)


def test_brute_force_small_examples():
    instance = PackingInstance.create([[0, 1], [1, 2]], 3)
    assert brute_force_min_load(instance, 1).min_max_load == 1
    best = brute_force_min_load(instance, 2)
    assert best.min_max_load == 1
    assert best.best_support == (0, 2)
    assert best.enumerated == 3

    doubled = PackingInstance.create([[0, 1], [0, 1]], 2)
    assert brute_force_min_load(doubled, 2).min_max_load == 2


def test_brute_force_dense_pairs():
    instance = random_k_sparse(400, 12, 2, seed=5)
    assert brute_force_min_load(instance, 6).min_max_load >= 2


def test_brute_force_is_invariant_under_column_permutation():
    instance = random_k_sparse(30, 9, 3, seed=2)
    permutation = [3, 7, 0, 8, 1, 5, 2, 6, 4]
    permuted = PackingInstance.create([[permutation[i] for i in row] for row in instance.rows], 9)
    assert (brute_force_min_load(instance, 4).min_max_load
            == brute_force_min_load(permuted, 4).min_max_load)


def test_brute_force_workers_agree_with_serial():
    instance = random_k_sparse(40, 10, 3, seed=8)
    assert brute_force_min_load(instance, 4, workers=2) == brute_force_min_load(instance, 4)


def test_brute_force_budget():
    instance = random_k_sparse(10, 20, 3, seed=1)
    with pytest.raises(EnumerationBudgetError):
        brute_force_min_load(instance, 6, budget=10)


def test_pipeline_report():
    instance = PackingInstance.create([[0, 1], [1, 2]], 3)
    outcomes = {
        "rt": evaluate(instance, [1, 1, 1]),
        "walk-lll": evaluate(instance, [1, 0, 1]),
    }
    report = pipeline_report(instance, outcomes, opt=1.5)
    assert report.d == 1
    assert report.lll_target == 3
    assert report.rt_reference is None
    assert [e.method for e in report.entries] == ["rt", "walk-lll"]
    assert report.entries[1].linf_load == 1
    assert report.entries[1].objective == 2.0
    assert report.entries[1].ratio == pytest.approx(1 / 3)
    assert all(e.passed for e in report.entries)


def test_pipeline_report_rejects_mixed_instances():
    instance = PackingInstance.create([[0, 1], [1, 2]], 3)
    other = PackingInstance.create([[0, 2]], 3)
    with pytest.raises(MixedInstanceError):
        pipeline_report(instance, [("rt", evaluate(other, [1, 0, 0]))])
