"""Validation and evaluation shared by every engine."""
import logging
import math
from typing import Dict, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from config import settings
from schemas.instances import FeasibilityReport, FractionalPoint, PackingInstance, RoundingOutcome, StatValue
from services.errors import DimensionMismatchError, InfeasiblePointError
from services.instance_io import instance_digest

logger = logging.getLogger(__name__)


def incidence(instance: PackingInstance) -> sp.csr_matrix:
    """Row-sparse 0-1 constraint matrix A (m x n)."""
    indptr = np.zeros(instance.m + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(row) for row in instance.rows])
    indices = np.fromiter(
        (i for row in instance.rows for i in row), dtype=np.int64, count=int(indptr[-1])
    )
    data = np.ones(len(indices), dtype=np.int64)
    return sp.csr_matrix((data, indices, indptr), shape=(instance.m, instance.n_vars))


def column_index(instance: PackingInstance) -> sp.csc_matrix:
    """Column-to-rows inverted index (the CSC form of A)."""
    return incidence(instance).tocsc()


def _check_length(instance: PackingInstance, length: int, what: str) -> None:
    if length != instance.n_vars:
        raise DimensionMismatchError(
            f"{what} has length {length}, instance has {instance.n_vars} variables"
        )


def check_feasibility(
    instance: PackingInstance,
    point: FractionalPoint,
    tolerance: Optional[float] = None,
) -> FeasibilityReport:
    """Row sums of a point against the right-hand sides, without raising."""
    _check_length(instance, len(point.values), "point")
    tol = settings.feasibility_tolerance if tolerance is None else tolerance
    sums = incidence(instance) @ np.asarray(point.values, dtype=float)
    rhs = np.asarray(instance.rhs, dtype=float)
    excess = sums - rhs
    return FeasibilityReport(
        max_row_sum=float(sums.max()) if len(sums) else 0.0,
        max_violation=float(max(excess.max(), 0.0)) if len(excess) else 0.0,
        offending_rows=[int(j) for j in np.flatnonzero(excess > tol)],
        tolerance=tol,
    )


def validate(
    instance: PackingInstance,
    point: FractionalPoint,
    tolerance: Optional[float] = None,
) -> FractionalPoint:
    """
    Check a fractional point against every constraint.

    Args:
        instance: Packing instance
        point: Candidate point in [0, 1]^n
        tolerance: Absolute slack allowed per row (defaults to settings)

    Returns:
        The point with slack_checked set

    Raises:
        DimensionMismatchError: point length differs from n_vars
        InfeasiblePointError: some row sum exceeds rhs + tolerance
    """
    report = check_feasibility(instance, point, tolerance)
    if not report.feasible:
        shown = ", ".join(str(j) for j in report.offending_rows[:20])
        raise InfeasiblePointError(
            f"point violates {len(report.offending_rows)} row(s) [{shown}]; "
            f"max violation {report.max_violation:.6g}",
            report=report,
        )
    return point.model_copy(update={"slack_checked": True})


def row_loads(instance: PackingInstance, solution: Sequence[int]) -> np.ndarray:
    return incidence(instance) @ np.asarray(solution, dtype=np.int64)


def objective_value(instance: PackingInstance, values: Sequence[float]) -> float:
    """<c, values>, summed exactly so repeated calls agree bit for bit."""
    return math.fsum(c * v for c, v in zip(instance.weights, values))


def evaluate(
    instance: PackingInstance,
    solution: Sequence[int],
    stats: Optional[Mapping[str, StatValue]] = None,
    converged: bool = True,
) -> RoundingOutcome:
    """
    Measure a 0-1 solution.

    Args:
        instance: Packing instance
        solution: 0-1 vector of length n_vars
        stats: Run counters to attach to the outcome
        converged: False when the producing method hit its cap

    Returns:
        RoundingOutcome with linf_load and objective computed from solution
    """
    _check_length(instance, len(solution), "solution")
    solution = tuple(int(s) for s in solution)
    loads = row_loads(instance, solution)
    return RoundingOutcome(
        solution=solution,
        linf_load=int(loads.max()) if len(loads) else 0,
        objective=objective_value(instance, solution),
        stats=dict(stats or {}),
        converged=converged,
        instance_digest=instance_digest(instance),
    )


def fractional_objective(instance: PackingInstance, point: FractionalPoint) -> float:
    """OPT = <c, x'> for the given fractional point."""
    _check_length(instance, len(point.values), "point")
    return objective_value(instance, point.values)


def merge_stats(*parts: Mapping[str, StatValue]) -> Dict[str, StatValue]:
    merged: Dict[str, StatValue] = {}
    for part in parts:
        merged.update(part)
    return merged
