"""Experiment plan and result schemas."""
from enum import Enum
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from schemas.generators import GeneratorSpec
from schemas.instances import StatValue


class Method(str, Enum):
    """Rounding methods runnable from plans, the CLI and the HTTP surface."""
    RT = "rt"
    GREEDY = "greedy"
    WALK_LLL = "walk-lll"
    DAMPED = "damped"
    LLL = "lll"


class RunMetadata(BaseModel):
    tool_version: str
    log_base: str
    rng: str


class PlanCell(BaseModel):
    """One (instance family, method) pair run for `trials` seeds."""
    model_config = ConfigDict(use_enum_values=True)

    generator: GeneratorSpec
    method: Method
    params: Dict[str, StatValue] = Field(default_factory=dict)
    trials: int = Field(..., ge=1)
    seed_base: int = Field(..., ge=0)
    regenerate: bool = Field(False, description="Draw a fresh instance per trial from the trial seed")

    def trial_seed(self, trial: int) -> int:
        return self.seed_base + trial


class ExperimentPlan(BaseModel):
    cells: List[PlanCell] = Field(default_factory=list)
    output_dir: Optional[str] = None
    metadata: RunMetadata


class RoundResult(BaseModel):
    """One (cell, trial) result row; failed trials carry status "error"."""
    cell: int
    trial: int
    seed: int
    family: str
    method: str
    status: str = "ok"
    error: str = ""
    linf_load: Optional[int] = None
    objective: Optional[float] = None
    opt_fractional: Optional[float] = None
    resamples: int = 0
    walk_steps: int = 0
    d_measured: Optional[int] = None
    t_used: Optional[int] = None
    S_used: float = 1.0
    converged: bool = False
    instance_digest: str = ""
    config: Dict[str, StatValue] = Field(default_factory=dict)


RESULT_COLUMNS = (
    "cell", "trial", "seed", "family", "method", "status", "linf_load", "objective",
    "opt_fractional", "resamples", "walk_steps", "d_measured", "t_used", "S_used",
    "converged", "instance_digest", "error",
)
SUMMARY_COLUMNS = (
    "cell", "family", "method", "trials", "ok",
    "linf_load_median", "linf_load_mean", "linf_load_max",
    "objective_median", "objective_mean", "objective_max",
)


class AcceptanceResult(BaseModel):
    """Measured values of one acceptance criterion against its threshold."""
    suite: str
    passed: bool
    measured: Dict[str, StatValue] = Field(default_factory=dict)
    expected: str
