"""Bound-calculator and oracle result schemas."""
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field


class HitProbability(BaseModel):
    """Probability that a random k-subset meets a fixed target set in at least t places."""
    n: int
    k: int
    t: int
    target_size: int
    exact: float
    lower_bound: float

    @property
    def bound_holds(self) -> bool:
        return self.exact >= self.lower_bound


class MinLoadResult(BaseModel):
    best_support: Tuple[int, ...]
    min_max_load: int
    enumerated: int


class BoundEntry(BaseModel):
    """One method's measured load next to the theoretical target."""
    method: str
    linf_load: int
    objective: float
    theoretical: float
    ratio: float
    passed: bool
    converged: bool = True


class BoundReport(BaseModel):
    """Measured outcomes on one instance against the theoretical error targets."""
    instance_digest: str
    m: int
    n: int
    d: int = Field(..., description="Max dependency degree over all variables")
    lll_target: int
    rt_reference: Optional[float] = None
    walk_lll_error: Optional[float] = None
    slack: float = 1.0
    entries: List[BoundEntry] = Field(default_factory=list)


REPORT_COLUMNS = ("method", "linf_load", "objective", "theoretical", "ratio", "passed", "converged")
LOWER_BOUND_COLUMNS = ("n", "k", "t", "target_size", "exact", "lower_bound", "bound_holds")
ORACLE_COLUMNS = ("support_size", "min_max_load", "enumerated", "best_support")
