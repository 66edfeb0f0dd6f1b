"""Bound calculator endpoints."""
import math
from typing import Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from schemas.analysis import HitProbability
from services.analysis import lower_bound_condition, row_hit_probability

router = APIRouter(prefix="/analysis", tags=["analysis"])


class LowerBoundRequest(BaseModel):
    m: int = Field(..., ge=1)
    n: int = Field(..., ge=1)
    k: int = Field(..., ge=1)
    t: int = Field(..., ge=1)


class LowerBoundResponse(BaseModel):
    """Whether the counting argument applies, with the m/n ratio it needs."""
    condition: bool
    required_ratio: float


class HitProbabilityRequest(BaseModel):
    n: int = Field(..., ge=1)
    k: int = Field(..., ge=1)
    t: int = Field(..., ge=0)
    target_size: Optional[int] = Field(None, ge=0, description="Defaults to n // k")


@router.post("/lower-bound", response_model=LowerBoundResponse)
def lower_bound(request: LowerBoundRequest):
    try:
        condition = lower_bound_condition(request.m, request.n, request.k, request.t)
        required = math.exp(request.k) * float(request.t) ** request.t
        return LowerBoundResponse(condition=condition, required_ratio=required)
    except (ValueError, OverflowError) as e:
        raise HTTPException(status_code=400, detail=str(e))


@router.post("/hit-probability", response_model=HitProbability)
def hit_probability(request: HitProbabilityRequest):
    try:
        return row_hit_probability(request.n, request.k, request.t, request.target_size)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
