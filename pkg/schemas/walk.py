"""Random-walk configuration and state."""
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, List, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class FixStatus(IntEnum):
    FIXED_LOW = -1
    UNFIXED = 0
    FIXED_HIGH = 1


class WalkConfig(BaseModel):
    """Parameters of the Gaussian sparsification walk."""
    model_config = ConfigDict(frozen=True)

    gamma: float = Field(..., gt=0, description="Step scale")
    delta: float = Field(..., gt=0, lt=0.5, description="Fixing margin")
    scale: float = Field(1.0, ge=1.0, description="Initial down-scaling S")
    stop_unfixed: int = Field(
        ..., ge=0, description="Stop once every row has at most this many unfixed variables; 0 walks until all are fixed"
    )
    max_steps: int = Field(1_000_000, ge=1)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    strict_log_relation: bool = Field(False, description="Also require gamma <= delta / ln n")
    trace: bool = Field(False, description="Keep one trace row per step")

    @model_validator(mode="after")
    def _gamma_below_delta(self) -> "WalkConfig":
        if self.gamma > self.delta:
            raise ValueError(f"gamma={self.gamma} must not exceed delta={self.delta}")
        return self

    @property
    def relation(self) -> str:
        return "gamma<=delta/ln(n)" if self.strict_log_relation else "gamma<=delta"


class TraceRow(NamedTuple):
    step: int
    phase: int
    max_unfixed: int
    max_abs_error: float
    num_fixed_low: int
    num_fixed_high: int


TRACE_COLUMNS = TraceRow._fields


@dataclass
class WalkState:
    """Live state of one walk; owned and mutated by a single worker."""
    values: np.ndarray  # X_t
    start: np.ndarray  # X_0 = x'/S
    fixed: np.ndarray  # FixStatus codes, int8
    unfixed_per_row: np.ndarray
    accumulated_error: np.ndarray  # <V_j, X_t - X_0>
    step_count: int = 0
    phase: int = 0
    incomplete: bool = False
    phase_max_increment: List[float] = field(default_factory=list)
    trace: List[TraceRow] = field(default_factory=list)

    @property
    def num_fixed_low(self) -> int:
        return int(np.count_nonzero(self.fixed == FixStatus.FIXED_LOW))

    @property
    def num_fixed_high(self) -> int:
        return int(np.count_nonzero(self.fixed == FixStatus.FIXED_HIGH))

    @property
    def unfixed_indices(self) -> np.ndarray:
        return np.flatnonzero(self.fixed == FixStatus.UNFIXED)

    @property
    def max_unfixed(self) -> int:
        return int(self.unfixed_per_row.max()) if len(self.unfixed_per_row) else 0

    @property
    def max_abs_error(self) -> float:
        return float(np.abs(self.accumulated_error).max()) if len(self.accumulated_error) else 0.0

    def trace_row(self) -> TraceRow:
        return TraceRow(
            self.step_count, self.phase, self.max_unfixed,
            self.max_abs_error, self.num_fixed_low, self.num_fixed_high,
        )

    def summary(self) -> Dict[str, object]:
        """Scalar counters for result files."""
        return {
            "walk_steps": self.step_count,
            "phases_completed": self.phase,
            "fixed_low": self.num_fixed_low,
            "fixed_high": self.num_fixed_high,
            "unfixed": int(len(self.unfixed_indices)),
            "max_unfixed": self.max_unfixed,
            "max_abs_error": self.max_abs_error,
            "walk_incomplete": self.incomplete,
        }


class PhaseBudget(BaseModel):
    """Per-phase error increment against the phase's error allowance."""
    phase: int
    max_increment: float
    budget: float
    within: bool


class AbsorptionStats(BaseModel):
    """Summary of many independent one-variable walks."""
    trials: int
    fraction_high: float
    mean_steps: float
    std_error_steps: float
    unfinished: int = 0
