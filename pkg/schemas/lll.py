"""Local-lemma stage schemas."""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field


class Selection(str, Enum):
    """Which violated row Moser-Tardos resamples next."""
    LOWEST = "lowest"
    RANDOM = "random"


class FixedRounding(str, Enum):
    """How walk-fixed coordinates enter the final rounding."""
    INDEPENDENT = "independent"  # round at the absorbed value
    NEAREST = "nearest"  # snap to the closer endpoint


class DependencyGraph(BaseModel):
    degree: List[int]
    max_degree: int
    active_vars: int = Field(..., description="Variables the rows were restricted to")


class LllConfig(BaseModel):
    """Moser-Tardos parameters."""
    model_config = ConfigDict(frozen=True, use_enum_values=True)

    error_target: Optional[int] = Field(None, ge=1, description="Row load ceiling t; None disables row events")
    epsilon: float = Field(0.5, gt=0, lt=1, description="Objective slack; the default floor is (1 - epsilon) <c, point>")
    objective_floor: Optional[float] = Field(None, ge=0, description="Objective event threshold; 0 disables it")
    max_resamples: int = Field(1_000_000, ge=1)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    selection: Selection = Selection.LOWEST


class LllCheck(BaseModel):
    """Both asymmetric local-lemma inequalities, evaluated with Chernoff bounds."""
    row_event_bound: float
    row_event_allowance: float
    objective_event_bound: float
    objective_event_allowance: float

    @property
    def row_condition(self) -> bool:
        return self.row_event_bound < self.row_event_allowance

    @property
    def objective_condition(self) -> bool:
        return self.objective_event_bound < self.objective_event_allowance

    @property
    def holds(self) -> bool:
        return self.row_condition and self.objective_condition


class ErrorBranches(BaseModel):
    """The two arguments of the max in the main error expression."""
    dependency_branch: float
    objective_branch: float

    @property
    def value(self) -> float:
        return max(self.dependency_branch, self.objective_branch)
