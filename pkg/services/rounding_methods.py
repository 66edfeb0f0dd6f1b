"""Dispatch from method names to the rounding engines."""
import logging
from typing import Mapping, Optional

from config import settings
from schemas.experiments import Method
from schemas.instances import FractionalPoint, PackingInstance, RoundingOutcome, StatValue
from schemas.lll import FixedRounding, LllConfig
from services.instance_model import evaluate, fractional_objective, merge_stats, validate
from services.lll_engine import (
    build_dependency,
    damped_round,
    greedy_repair,
    independent_round,
    iterated_round,
    lll_error_target,
    moser_tardos,
)

logger = logging.getLogger(__name__)

WALK_KEYS = ("gamma", "delta", "stop_unfixed", "max_steps")


def _target(params: Mapping[str, StatValue]) -> Optional[int]:
    value = params.get("t", "auto")
    return None if value in (None, "auto") else int(value)


def run_method(
    method: str,
    instance: PackingInstance,
    point: FractionalPoint,
    seed: int,
    params: Optional[Mapping[str, StatValue]] = None,
) -> RoundingOutcome:
    """
    Run one rounding method.

    Args:
        method: One of rt, greedy, walk-lll, damped, lll
        instance: Packing instance
        point: Feasible fractional point (ignored by greedy)
        seed: Trial seed
        params: Method options (t, scale, gamma, delta, stop_unfixed, max_steps,
            fixed_rounding, floor, epsilon, allow_guard_failure, alpha,
            integer_substitution, B, k, selection, max_resamples)

    Returns:
        RoundingOutcome whose stats include opt_fractional
    """
    params = dict(params or {})
    method = Method(method)
    if method == Method.GREEDY:
        k = int(params.get("k") or instance.max_row_size or 1)
        outcome = greedy_repair(instance, k, seed)
        return outcome.model_copy(update={"stats": merge_stats(outcome.stats, {"k": k})})

    point = validate(instance, point)
    opt = fractional_objective(instance, point)
    walk = {key: params[key] for key in WALK_KEYS if key in params}

    if method == Method.RT:
        outcome = evaluate(instance, independent_round(point, seed))
    elif method == Method.WALK_LLL:
        outcome = iterated_round(
            instance,
            point,
            seed=seed,
            t=_target(params),
            scale=float(params.get("scale", 1.0)),
            fixed_rounding=FixedRounding(params.get("fixed_rounding", FixedRounding.NEAREST.value)),
            objective_floor=params.get("floor"),
            allow_guard_failure=bool(params.get("allow_guard_failure", False)),
            walk_overrides=walk,
            lll_overrides={key: params[key] for key in ("selection", "max_resamples") if key in params},
        )
    elif method == Method.DAMPED:
        outcome = damped_round(
            instance,
            point,
            B=float(params["B"]) if params.get("B") is not None else None,
            seed=seed,
            alpha=float(params.get("alpha", 1.0)),
            integer_substitution=bool(params.get("integer_substitution", False)),
            fixed_rounding=FixedRounding(params.get("fixed_rounding", FixedRounding.INDEPENDENT.value)),
            walk_overrides=walk,
        )
    else:
        d = build_dependency(instance).max_degree
        target = _target(params)
        config = LllConfig(
            error_target=lll_error_target(d) if target is None else target,
            objective_floor=params.get("floor"),
            epsilon=float(params.get("epsilon", 0.5)),
            max_resamples=int(params.get("max_resamples", settings.default_max_resamples)),
            selection=params.get("selection", "lowest"),
            seed=seed,
        )
        outcome = moser_tardos(instance, point, config)
        outcome = outcome.model_copy(update={"stats": merge_stats(outcome.stats, {"d_measured": d})})

    return outcome.model_copy(update={"stats": merge_stats(outcome.stats, {"opt_fractional": opt})})
