"""Rounding endpoint."""
from typing import Dict, List, Optional

from fastapi import APIRouter, HTTPException
from pydantic import BaseModel, Field

from schemas.experiments import Method
from schemas.instances import FractionalPoint, InstancePayload, RoundingOutcome, StatValue
from services.generators import default_point
from services.rounding_methods import run_method

router = APIRouter(tags=["rounding"])


class RoundRequest(BaseModel):
    """Request model for a single rounding run."""
    instance: InstancePayload
    point: Optional[List[float]] = Field(None, description="Fractional point; defaults to min(rhs)/k everywhere")
    method: Method = Method.WALK_LLL
    seed: int = Field(0, ge=0, lt=2 ** 64)
    params: Dict[str, StatValue] = Field(default_factory=dict)


@router.post("/round", response_model=RoundingOutcome)
def round_point(request: RoundRequest):
    """
    Round a fractional point with one method.

    Returns the 0-1 solution with its load, objective and run counters.
    """
    try:
        instance = request.instance.to_instance()
        if request.point is None:
            point = default_point(instance)
        else:
            point = FractionalPoint(values=tuple(request.point))
        return run_method(request.method.value, instance, point, request.seed, request.params)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e))
