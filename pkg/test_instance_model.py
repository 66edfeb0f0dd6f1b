"""Tests for instance validation, evaluation and the text formats."""
import pytest

from schemas.instances import FractionalPoint, PackingInstance
from services.errors import DimensionMismatchError, InfeasiblePointError, InstanceFormatError
from services.generators import random_k_sparse
from services.instance_io import (
    format_instance,
    instance_digest,
    parse_instance,
    parse_point,
    read_instance,
    read_point,
    write_instance,
    write_point,
    write_solution,
)
from services.instance_model import check_feasibility, column_index, evaluate, fractional_objective, validate


def _path_instance() -> PackingInstance:
    return PackingInstance.create([[0, 1], [1, 2]], 3)


def test_validate_accepts_half_point():
    checked = validate(_path_instance(), FractionalPoint.uniform(3, 0.5))
    assert checked.slack_checked
    assert check_feasibility(_path_instance(), checked).max_row_sum == 1.0


def test_validate_rejects_overloaded_row():
    with pytest.raises(InfeasiblePointError) as excinfo:
        validate(_path_instance(), FractionalPoint(values=(1.0, 1.0, 0.0)))
    report = excinfo.value.report
    assert report.offending_rows == [0]
    assert report.max_row_sum == 2.0


def test_validate_length_mismatch():
    with pytest.raises(DimensionMismatchError):
        validate(_path_instance(), FractionalPoint.uniform(4, 0.1))


def test_uniform_point_on_k_sparse_instance_is_feasible():
    instance = random_k_sparse(8, 16, 4, seed=7)
    validate(instance, FractionalPoint.uniform(16, 0.25))


def test_point_outside_unit_cube_rejected():
    with pytest.raises(ValueError):
        FractionalPoint(values=(0.5, 1.5))


def test_evaluate_zero_solution():
    outcome = evaluate(_path_instance(), [0, 0, 0])
    assert outcome.linf_load == 0
    assert outcome.objective == 0.0


def test_evaluate_loads_and_objective():
    outcome = evaluate(_path_instance(), [1, 1, 0])
    assert outcome.linf_load == 2
    assert outcome.objective == 2.0
    assert outcome.instance_digest == instance_digest(_path_instance())


def test_evaluate_repeated_single_column_rows():
    instance = PackingInstance.create([[0], [0], [0]], 1)
    outcome = evaluate(instance, [1])
    assert outcome.linf_load == 1
    assert outcome.objective == 1.0


def test_evaluate_is_deterministic():
    instance = random_k_sparse(32, 32, 4, seed=1)
    solution = [i % 2 for i in range(32)]
    assert evaluate(instance, solution) == evaluate(instance, solution)


def test_evaluate_rejects_non_binary_solution():
    with pytest.raises(ValueError):
        evaluate(_path_instance(), [0, 2, 0])


def test_weights_are_normalized_by_max():
    instance = PackingInstance.create([[0, 1]], 2, weights=[2.0, 4.0])
    assert instance.weights == (0.5, 1.0)
    assert instance.weight_scale == 4.0
    assert instance.weight_floor == 2.0
    assert fractional_objective(instance, FractionalPoint.uniform(2, 0.5)) == 0.75


def test_rows_are_sorted_and_duplicates_rejected():
    assert PackingInstance.create([[2, 0]], 3).rows == ((0, 2),)
    with pytest.raises(ValueError):
        PackingInstance.create([[0, 0]], 3)
    with pytest.raises(ValueError):
        PackingInstance.create([[0, 3]], 3)


def test_strict_instances_reject_short_rows():
    with pytest.raises(ValueError):
        PackingInstance.create([[0]], 3, strict=True)


def test_uniform_rhs():
    assert _path_instance().uniform_rhs == 1.0
    assert PackingInstance.create([[0], [1]], 2, rhs=[1, 2]).uniform_rhs is None


def test_column_index_is_transpose_of_rows():
    columns = column_index(_path_instance())
    assert columns.shape == (2, 3)
    assert columns[:, 1].nnz == 2


def test_instance_text_round_trip(tmp_path):
    instance = PackingInstance.create([[0, 2], [1], [0, 1, 2]], 3, rhs=[1, 2, 3], weights=[1, 4, 2])
    assert parse_instance(format_instance(instance)) == instance

    path = tmp_path / "inst.txt"
    write_instance(instance, path)
    assert read_instance(path) == instance
    assert instance_digest(read_instance(path)) == instance_digest(instance)


def test_round_trip_keeps_weight_floor_exact():
    instance = PackingInstance.create([[0, 1], [1, 2]], 3, weights=[1, 7, 3])
    assert instance.weight_floor == pytest.approx(7.0)
    text = format_instance(instance)
    assert "wfloor " in text
    parsed = parse_instance(text)
    assert parsed.weight_floor == instance.weight_floor
    assert parsed.weights == instance.weights
    assert parsed == instance


def test_instance_format_ignores_comments():
    text = "# header comment\nppack 1 2\n\nrhs 1\nw 1 1\nrow 0 0 1\n"
    assert parse_instance(text).rows == ((0, 1),)


def test_instance_format_errors():
    with pytest.raises(InstanceFormatError):
        parse_instance("rhs 1\n")
    with pytest.raises(InstanceFormatError):
        parse_instance("ppack 2 2\nrhs 1 1\nw 1 1\nrow 0 0 1\n")
    with pytest.raises(InstanceFormatError):
        parse_instance("ppack 1 2\nrhs 1\nw 1 1\nrow 0 0 1\nbogus 3\n")


def test_point_and_solution_files(tmp_path):
    point = FractionalPoint(values=(0.25, 0.5, 1.0))
    write_point(point, tmp_path / "x.frac")
    assert read_point(tmp_path / "x.frac") == point

    write_solution([1, 0, 1], tmp_path / "x.sol")
    assert (tmp_path / "x.sol").read_text() == "sol 3\n1 0 1\n"

    with pytest.raises(InstanceFormatError):
        parse_point("frac 2\n0.5\n")
