"""Instance validation, evaluation and generation endpoints."""
from typing import List, Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from schemas.generators import GeneratorSpec
from schemas.instances import FractionalPoint, InstancePayload, RoundingOutcome
from services.generators import generate
from services.instance_io import instance_digest
from services.instance_model import check_feasibility, evaluate

router = APIRouter(tags=["instances"])


class ValidateRequest(BaseModel):
    """Request model for point validation."""
    instance: InstancePayload
    point: List[float] = Field(..., description="Fractional point, one value per variable")


class ValidateResponse(BaseModel):
    """Row-sum diagnostics of a fractional point."""
    feasible: bool
    max_row_sum: float
    max_violation: float
    offending_rows: List[int]
    tolerance: float


class EvaluateRequest(BaseModel):
    """Request model for solution evaluation."""
    instance: InstancePayload
    solution: List[int] = Field(..., description="0-1 vector, one entry per variable")


class GenerateResponse(BaseModel):
    """A generated instance, its digest and the family's fractional point."""
    instance: InstancePayload
    point: Optional[List[float]] = None
    dropped_rows: int = 0
    rng: str
    digest: str


@router.post("/instances/validate", response_model=ValidateResponse)
def validate_point(request: ValidateRequest):
    """Check a fractional point against every row; never fails on infeasibility."""
    try:
        report = check_feasibility(request.instance.to_instance(), FractionalPoint(values=tuple(request.point)))
        return ValidateResponse(**report.model_dump(), feasible=report.feasible)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/instances/evaluate", response_model=RoundingOutcome)
def evaluate_solution(request: EvaluateRequest):
    try:
        return evaluate(request.instance.to_instance(), request.solution)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/generate", response_model=GenerateResponse)
def generate_instance(spec: GeneratorSpec):
    """
    Build a seeded instance.

    Identical specs return identical instances and digests.
    """
    try:
        generated = generate(spec)
        return GenerateResponse(
            instance=InstancePayload.from_instance(generated.instance),
            point=list(generated.point.values) if generated.point else None,
            dropped_rows=generated.dropped_rows,
            rng=generated.rng,
            digest=instance_digest(generated.instance),
        )
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
