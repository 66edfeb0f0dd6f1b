"""Packing-instance, fractional-point and outcome schemas."""
import math
from typing import Dict, List, Optional, Sequence, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


StatValue = Union[bool, int, float, str]


class PackingInstance(BaseModel):
    """A 0-1 packing program: maximize <c, x> subject to A x <= rhs.

    Rows are stored sparsely as sorted column-index tuples. Weights are
    normalized so that the largest one equals 1; `weight_scale` records the
    divisor applied to the raw weights.
    """
    model_config = ConfigDict(frozen=True)

    rows: Tuple[Tuple[int, ...], ...]
    n_vars: int = Field(..., ge=1)
    rhs: Tuple[float, ...]
    weights: Tuple[float, ...]
    weight_floor: float = Field(..., ge=1.0)
    weight_scale: float = Field(1.0, gt=0)

    @field_validator("rows", mode="before")
    @classmethod
    def _sort_rows(cls, rows):
        return tuple(tuple(sorted(row)) for row in rows)

    @model_validator(mode="after")
    def _check_invariants(self) -> "PackingInstance":
        n = self.n_vars
        for j, row in enumerate(self.rows):
            for a, b in zip(row, row[1:]):
                if a == b:
                    raise ValueError(f"row {j} repeats column {a}")
            if row and (row[0] < 0 or row[-1] >= n):
                raise ValueError(f"row {j} has a column outside [0, {n})")
        if len(self.rhs) != len(self.rows):
            raise ValueError(f"rhs has {len(self.rhs)} entries for {len(self.rows)} rows")
        if any(not math.isfinite(b) or b < 0 for b in self.rhs):
            raise ValueError("rhs entries must be finite and nonnegative")
        if len(self.weights) != n:
            raise ValueError(f"weights has {len(self.weights)} entries for {n} variables")
        if any(not (0 < c <= 1) for c in self.weights):
            raise ValueError("weights must lie in (0, 1]")
        if max(self.weights) != 1.0:
            raise ValueError("weights must be normalized so that max weight is 1")
        if min(self.weights) < 1.0 / self.weight_floor * (1 - 1e-12):
            raise ValueError(
                f"weight_floor {self.weight_floor} inconsistent with min weight {min(self.weights)}"
            )
        return self

    @classmethod
    def create(
        cls,
        rows: Sequence[Sequence[int]],
        n_vars: int,
        rhs: Optional[Sequence[float]] = None,
        weights: Optional[Sequence[float]] = None,
        weight_floor: Optional[float] = None,
        strict: bool = False,
    ) -> "PackingInstance":
        """
        Build an instance, normalizing raw weights by their maximum.

        Args:
            rows: Column indices of the ones in each constraint row
            n_vars: Number of variables
            rhs: Per-row right-hand side (defaults to all ones)
            weights: Raw positive objective weights (defaults to all ones)
            weight_floor: Ratio p with min weight >= 1/p (computed when omitted)
            strict: Reject rows with fewer than 2 or more than n-1 variables

        Returns:
            PackingInstance
        """
        rows = [tuple(int(i) for i in row) for row in rows]
        if strict:
            for j, row in enumerate(rows):
                if not 2 <= len(set(row)) <= n_vars - 1:
                    raise ValueError(
                        f"row {j} has {len(set(row))} variables; strict instances need 2..{n_vars - 1}"
                    )
        if rhs is None:
            rhs = [1.0] * len(rows)
        if weights is None:
            weights = [1.0] * n_vars
        raw = [float(c) for c in weights]
        if not raw or any(not math.isfinite(c) or c <= 0 for c in raw):
            raise ValueError("weights must be positive and finite")
        scale = max(raw)
        normalized = tuple(c / scale for c in raw)
        floor = weight_floor if weight_floor is not None else 1.0 / min(normalized)
        return cls(
            rows=rows,
            n_vars=n_vars,
            rhs=tuple(float(b) for b in rhs),
            weights=normalized,
            weight_floor=max(1.0, floor),
            weight_scale=scale,
        )

    @property
    def m(self) -> int:
        """Number of constraint rows."""
        return len(self.rows)

    @property
    def max_row_size(self) -> int:
        """Largest row cardinality (the k of a k-sparse family)."""
        return max((len(row) for row in self.rows), default=0)

    @property
    def uniform_rhs(self) -> Optional[float]:
        """The common right-hand side, or None when rows differ."""
        if not self.rhs:
            return None
        first = self.rhs[0]
        return first if all(b == first for b in self.rhs) else None


class FractionalPoint(BaseModel):
    """A point in [0, 1]^n, optionally checked against an instance."""
    model_config = ConfigDict(frozen=True)

    values: Tuple[float, ...]
    slack_checked: bool = False

    @field_validator("values")
    @classmethod
    def _in_unit_cube(cls, values):
        for i, v in enumerate(values):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"value {i} = {v} lies outside [0, 1]")
        return values

    @classmethod
    def uniform(cls, n: int, value: float) -> "FractionalPoint":
        """Point with every coordinate equal to value."""
        return cls(values=(float(value),) * n)


class FeasibilityReport(BaseModel):
    """Result of checking a fractional point against the constraints."""
    max_row_sum: float
    max_violation: float
    offending_rows: List[int] = Field(default_factory=list)
    tolerance: float

    @property
    def feasible(self) -> bool:
        return not self.offending_rows


class RoundingOutcome(BaseModel):
    """A rounded 0-1 vector with its measured load and objective."""
    model_config = ConfigDict(frozen=True)

    solution: Tuple[int, ...]
    linf_load: int
    objective: float
    stats: Dict[str, StatValue] = Field(default_factory=dict)
    converged: bool = True
    instance_digest: str = ""

    @field_validator("solution")
    @classmethod
    def _zero_one(cls, solution):
        if any(s not in (0, 1) for s in solution):
            raise ValueError("solution entries must be 0 or 1")
        return solution


class InstancePayload(BaseModel):
    """Wire form of an instance: raw rows, rhs and weights."""
    rows: List[List[int]]
    n_vars: int = Field(..., ge=1)
    rhs: Optional[List[float]] = None
    weights: Optional[List[float]] = Field(None, description="Raw positive weights; normalized on load")

    def to_instance(self) -> PackingInstance:
        return PackingInstance.create(self.rows, self.n_vars, rhs=self.rhs, weights=self.weights)

    @classmethod
    def from_instance(cls, instance: PackingInstance) -> "InstancePayload":
        return cls(
            rows=[list(row) for row in instance.rows],
            n_vars=instance.n_vars,
            rhs=list(instance.rhs),
            weights=[c * instance.weight_scale for c in instance.weights],
        )
