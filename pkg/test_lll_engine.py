"""Tests for the dependency graph, Moser-Tardos and the two-stage pipelines."""
import math

import numpy as np
import pytest

from schemas.instances import FractionalPoint, PackingInstance
from schemas.lll import FixedRounding, LllConfig
from schemas.walk import FixStatus, WalkState
from services.errors import DampedScaleError, LllGuardError
from services.generators import hypergraph_bmatch, random_k_sparse
from services.instance_model import incidence, row_loads
from services.lll_engine import (
    asymmetric_lll_check,
    build_dependency,
    chernoff_tail,
    column_bound_error,
    damped_beta,
    damped_round,
    damped_scale,
    greedy_repair,
    independent_round,
    iterated_round,
    lll_error_target,
    lll_error_target_tight,
    moser_tardos,
    objective_event_id,
    objective_tail,
    rounding_probabilities,
    rt_reference,
    walk_lll_error_branches,
    violating_rows,
)
from services.rng import Purpose, stream


def _disjoint_instance(rows: int, k: int) -> PackingInstance:
    return PackingInstance.create([list(range(j * k, (j + 1) * k)) for j in range(rows)], rows * k)


def test_dependency_degrees():
    instance = PackingInstance.create([[0, 1], [1, 2], [0]], 3)
    graph = build_dependency(instance)
    assert graph.degree == [2, 1, 1]
    assert graph.max_degree == 2
    assert graph.active_vars == 3


def test_dependency_of_disjoint_rows_is_zero():
    graph = build_dependency(_disjoint_instance(5, 3))
    assert graph.max_degree == 0


def test_dependency_restricted_to_active_columns():
    instance = PackingInstance.create([[0, 1], [1, 2], [0]], 3)
    graph = build_dependency(instance, active_vars=[0])
    assert graph.degree == [1, 0, 1]
    assert graph.active_vars == 1


def test_dependency_is_symmetric():
    instance = random_k_sparse(60, 40, 4, seed=2)
    A = incidence(instance).toarray()
    shared = (A @ A.T) > 0
    np.fill_diagonal(shared, False)
    assert shared.sum(axis=1).tolist() == build_dependency(instance).degree


def test_lll_error_target_examples():
    assert lll_error_target(0) == 2
    assert lll_error_target(3) == 4
    assert lll_error_target(1000) == 12


def test_tight_error_target():
    assert lll_error_target_tight(2) == 4
    assert lll_error_target_tight(10 ** 6) < 22
    targets = [lll_error_target_tight(d) for d in range(2, 200)]
    assert targets == sorted(targets)
    with pytest.raises(ValueError):
        lll_error_target_tight(1)


def test_chernoff_tail():
    assert chernoff_tail(1.0, math.e - 1.0) == pytest.approx(math.exp(-1.0), abs=1e-12)
    assert chernoff_tail(2.0, 1.0) == pytest.approx(chernoff_tail(1.0, 1.0) ** 2)
    assert chernoff_tail(1.0, 1e-9) == pytest.approx(1.0, abs=1e-6)


def test_violating_rows():
    instance = PackingInstance.create([[0, 1], [1, 2]], 3)
    assert violating_rows(instance, [1, 1, 1], t=1, floor=None) == [0, 1]
    assert violating_rows(instance, [1, 0, 1], t=1, floor=None) == []
    assert violating_rows(instance, [0, 0, 0], t=1, floor=1.0) == [objective_event_id(instance)]
    assert violating_rows(instance, [1, 1, 1], t=None, floor=0) == []


def test_independent_round_extremes():
    assert independent_round(FractionalPoint.uniform(5, 0.0), seed=1) == (0,) * 5
    assert independent_round(FractionalPoint.uniform(5, 1.0), seed=1) == (1,) * 5
    mean = np.mean(independent_round([0.25] * 100_000, seed=3))
    assert abs(mean - 0.25) <= 0.005


def test_moser_tardos_keeps_good_integral_point():
    instance = PackingInstance.create([[0, 1], [1, 2]], 3)
    config = LllConfig(error_target=1, objective_floor=1.0, seed=4)
    outcome = moser_tardos(instance, FractionalPoint(values=(1.0, 0.0, 1.0)), config)
    assert outcome.solution == (1, 0, 1)
    assert outcome.stats["resamples"] == 0
    assert outcome.converged


def test_moser_tardos_on_disjoint_rows():
    instance = _disjoint_instance(256, 8)
    point = FractionalPoint.uniform(instance.n_vars, 1 / 8)
    for seed in range(20):
        config = LllConfig(error_target=lll_error_target(0), objective_floor=128.0, seed=seed)
        outcome = moser_tardos(instance, point, config)
        assert outcome.converged
        assert outcome.linf_load <= 2
        assert outcome.objective >= 128.0
        assert outcome.stats["resamples"] <= 2560


def test_resampling_touches_only_the_event_variables():
    instance = random_k_sparse(32, 32, 4, seed=2)
    p = np.full(32, 0.25)
    seed = 7
    previous = (stream(seed, Purpose.LLL).random(32) < p).astype(np.int64)
    A = incidence(instance)
    events = []

    def observer(event, variables, x):
        nonlocal previous
        outside = np.ones(32, dtype=bool)
        outside[variables] = False
        assert np.array_equal(x[outside], previous[outside])
        if event < instance.m:
            assert variables.tolist() == A.indices[A.indptr[event]:A.indptr[event + 1]].tolist()
        previous = x.copy()
        events.append(event)

    config = LllConfig(error_target=1, objective_floor=0.0, seed=seed, max_resamples=200)
    outcome = moser_tardos(instance, FractionalPoint(values=tuple(p)), config, observer=observer)
    assert len(events) == outcome.stats["resamples"] <= 200
    if outcome.converged:
        assert outcome.linf_load <= 1


def test_moser_tardos_cap_returns_best_seen():
    instance = PackingInstance.create([list(range(8))], 8)
    config = LllConfig(error_target=1, objective_floor=0.0, max_resamples=5, seed=1)
    outcome = moser_tardos(instance, FractionalPoint.uniform(8, 0.99), config)
    assert not outcome.converged
    assert outcome.stats["resamples"] == 5
    assert outcome.linf_load > 1


def test_moser_tardos_reports_stuck_rows():
    instance = PackingInstance.create([[0, 1], [2]], 3)
    config = LllConfig(error_target=1, seed=0)
    outcome = moser_tardos(instance, FractionalPoint(values=(1.0, 1.0, 0.5)), config)
    assert outcome.stats["stuck_rows"] == 1
    assert not outcome.converged


def test_damped_scale_examples():
    assert damped_scale(1000, 100, 10, 3) == pytest.approx(math.sqrt(10))
    assert damped_scale(1000, 100, 10, 1e6) == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(DampedScaleError):
        damped_scale(1000, 100, 10, 1)


def test_damped_beta():
    assert damped_beta(1, 1, 3) == pytest.approx(math.e)
    beta = damped_beta(16, 1, 4)
    assert beta == pytest.approx(2 * math.e, rel=1e-6)
    assert (beta / math.e) ** 4 > 16
    assert chernoff_tail(4 / beta, beta - 1) <= (math.e / beta) ** 4 <= 1 / 16


def test_objective_tail_and_asymmetric_check():
    assert objective_tail(200, 0.5) == pytest.approx(math.exp(-25))
    check = asymmetric_lll_check(m=100, d=10, alpha=1, t=8, row_mean=1, opt=200, epsilon=0.5)
    assert check.row_condition
    assert check.objective_condition
    assert check.holds
    weak = asymmetric_lll_check(m=100, d=10, alpha=1, t=8, row_mean=1, opt=1, epsilon=0.5)
    assert not weak.objective_condition
    assert not weak.holds


def test_reference_error_expressions():
    assert rt_reference(1000) == pytest.approx(math.log(1000) / math.log(math.log(1000)))
    dependency = (math.log(10) + math.log(math.log(1000))) / math.log(math.log(10 * math.log(1000)))
    assert column_bound_error(10, 1000, 10) == pytest.approx(max(dependency, rt_reference(100)))
    branches = walk_lll_error_branches(1024, 1024, 10, 1000)
    assert branches.objective_branch == 0.0
    assert branches.value == branches.dependency_branch
    with pytest.raises(ValueError):
        rt_reference(2)


def test_greedy_repair_respects_q():
    instance = random_k_sparse(256, 256, 12, seed=3)
    outcome = greedy_repair(instance, 12, seed=3)
    q = outcome.stats["q"]
    assert q == math.ceil(math.log(12))
    assert outcome.linf_load <= q
    assert max(row_loads(instance, outcome.solution)) <= q


def test_rounding_probabilities_nearest():
    state = WalkState(
        values=np.array([0.01, 0.5, 0.99]),
        start=np.array([0.2, 0.5, 0.8]),
        fixed=np.array([FixStatus.FIXED_LOW, FixStatus.UNFIXED, FixStatus.FIXED_HIGH], dtype=np.int8),
        unfixed_per_row=np.array([1]),
        accumulated_error=np.zeros(1),
    )
    sparse = FractionalPoint(values=(0.01, 0.5, 0.99))
    assert rounding_probabilities(state, sparse, FixedRounding.NEAREST).values == (0.0, 0.5, 1.0)
    assert rounding_probabilities(state, sparse, FixedRounding.INDEPENDENT) == sparse


def test_iterated_round_small_instance():
    instance = random_k_sparse(128, 128, 5, seed=4)
    point = FractionalPoint.uniform(128, 0.2)
    outcome = iterated_round(instance, point, seed=4)
    stats = outcome.stats
    assert stats["t_used"] == lll_error_target(stats["d_measured"])
    assert stats["guard_holds"]
    assert stats["opt_fractional"] == pytest.approx(25.6)
    if outcome.converged:
        assert outcome.linf_load <= stats["t_used"]
        assert outcome.objective >= stats["objective_floor"]
    assert outcome == iterated_round(instance, point, seed=4)


def test_iterated_round_guard():
    instance = random_k_sparse(128, 128, 5, seed=4)
    point = FractionalPoint.uniform(128, 0.2)
    with pytest.raises(LllGuardError):
        iterated_round(instance, point, seed=1, t=1)
    outcome = iterated_round(instance, point, seed=1, t=1, allow_guard_failure=True,
                             lll_overrides={"max_resamples": 50})
    assert outcome.stats["guard_holds"] is False
    assert outcome.stats["resamples"] <= 50


def test_dependency_degree_covers_every_fractional_variable():
    instance = random_k_sparse(64, 64, 8, seed=1)
    point = FractionalPoint.uniform(64, 0.03)
    kept = iterated_round(instance, point, seed=3, fixed_rounding=FixedRounding.INDEPENDENT)
    assert kept.stats["walk_steps"] == 0
    assert kept.stats["lll_vars"] == 64
    assert kept.stats["d_measured"] == build_dependency(instance).max_degree
    assert kept.stats["t_used"] == lll_error_target(kept.stats["d_measured"])

    snapped = iterated_round(instance, point, seed=3, objective_floor=0.0)
    assert snapped.stats["fixed_rounding"] == "nearest"
    assert snapped.stats["lll_vars"] == 0
    assert snapped.stats["d_measured"] == 0
    assert snapped.solution == (0,) * 64


def test_default_floor_follows_epsilon():
    instance = _disjoint_instance(4, 2)
    point = FractionalPoint.uniform(8, 0.5)
    outcome = moser_tardos(instance, point, LllConfig(error_target=2, epsilon=0.25, seed=1))
    assert outcome.stats["objective_floor"] == pytest.approx(3.0)
    assert outcome.converged
    assert outcome.objective >= 3.0
    explicit = moser_tardos(instance, point, LllConfig(error_target=2, objective_floor=0.0, seed=1))
    assert explicit.stats["objective_floor"] == 0.0


def test_damped_round_is_strictly_feasible():
    for seed in range(3):
        instance, point = hypergraph_bmatch(128, 128, 8, 2, seed=seed, certify=True)
        outcome = damped_round(instance, point, seed=seed)
        assert outcome.linf_load <= 2
        assert outcome.stats["S_used"] >= 1.0
        assert outcome.stats["damped_beta"] > math.e


def test_damped_round_needs_substitution_for_unit_rhs():
    instance, point = hypergraph_bmatch(64, 64, 4, 1, seed=0, certify=True)
    with pytest.raises(DampedScaleError):
        damped_round(instance, point, seed=0)
    outcome = damped_round(instance, point, seed=0, integer_substitution=True)
    assert outcome.stats["integer_substitution"] is True


def test_damped_round_needs_uniform_rhs():
    instance = PackingInstance.create([[0, 1], [1, 2]], 3, rhs=[1, 2])
    with pytest.raises(DampedScaleError):
        damped_round(instance, FractionalPoint.uniform(3, 0.25))


def test_pipeline_preserves_marginals_without_events():
    instance = PackingInstance.create([[0, 1], [1, 2]], 3)
    point = FractionalPoint(values=(0.3, 0.5, 0.2))
    runs = 1500
    ones = np.zeros(3)
    for seed in range(runs):
        outcome = iterated_round(
            instance, point, seed=seed, objective_floor=0.0, fixed_rounding=FixedRounding.INDEPENDENT,
            walk_overrides={"gamma": 0.02}, lll_overrides={"error_target": None},
        )
        ones += outcome.solution
    assert np.all(np.abs(ones / runs - np.array(point.values)) <= 0.05)
