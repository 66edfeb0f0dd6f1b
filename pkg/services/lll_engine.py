"""Local-lemma rounding: dependency graphs, Moser-Tardos resampling and the
two-stage pipelines built on the Gaussian walk."""
import logging
import math
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from config import settings
from schemas.instances import FractionalPoint, PackingInstance, RoundingOutcome
from schemas.lll import DependencyGraph, ErrorBranches, FixedRounding, LllCheck, LllConfig, Selection
from schemas.walk import FixStatus, WalkState
from services.errors import DampedScaleError, LllGuardError
from services.instance_model import (
    column_index,
    evaluate,
    fractional_objective,
    incidence,
    merge_stats,
    row_loads,
    validate,
)
from services.rng import Purpose, stream
from services.walk_engine import default_walk_config, walk_round

logger = logging.getLogger(__name__)

BETA_SLACK = 1.0 + 1e-9

# observer(event_id, resampled_vars, solution) after every resampling round
ResampleObserver = Callable[[int, np.ndarray, np.ndarray], None]


def build_dependency(
    instance: PackingInstance,
    active_vars: Optional[Sequence[int]] = None,
) -> DependencyGraph:
    """
    Count, for every row, the other rows sharing a column with it.

    Args:
        instance: Packing instance
        active_vars: Restrict rows to these columns (all columns when None)

    Returns:
        DependencyGraph with per-row degrees and their maximum
    """
    A = incidence(instance)
    active = instance.n_vars
    if active_vars is not None:
        mask = np.zeros(instance.n_vars, dtype=np.int64)
        mask[np.asarray(active_vars, dtype=np.int64)] = 1
        active = int(mask.sum())
        A = (A @ sp.diags(mask)).tocsr()
        A.eliminate_zeros()
    shared = (A @ A.T).tocoo()
    off_diagonal = shared.row != shared.col
    degree = np.bincount(shared.row[off_diagonal], minlength=instance.m)
    return DependencyGraph(
        degree=degree.tolist(),
        max_degree=int(degree.max()) if instance.m else 0,
        active_vars=active,
    )


def lll_error_target(d: int) -> int:
    """Smallest t with e * 2^-t * (d + 1) <= 1."""
    if d < 0:
        raise ValueError(f"d must be nonnegative, got {d}")
    t = 0
    while math.e * (d + 1) > 2.0 ** t:
        t += 1
    return t


def chernoff_tail(mean: float, delta: float) -> float:
    """Upper bound (e^D / (1+D)^(1+D))^mean on Pr[U >= (1+D) E[U]]."""
    if mean <= 0 or delta <= 0:
        raise ValueError(f"mean and delta must be positive, got mean={mean}, delta={delta}")
    return math.exp(mean * (delta - (1.0 + delta) * math.log1p(delta)))


def lll_error_target_tight(d: int) -> int:
    """
    Smallest t with chernoff_tail(1, t - 1) <= 1/(e (d + 1)).

    Row means below 1 only make the tail smaller, so the unit mean is the
    worst case for rows whose fractional load is at most 1.
    """
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d}")
    threshold = 1.0 / (math.e * (d + 1))
    t = 2
    while chernoff_tail(1.0, t - 1) > threshold:
        t += 1
    return t


def independent_round(
    point: Union[FractionalPoint, Sequence[float]],
    seed: int,
    purpose: Purpose = Purpose.INDEPENDENT,
) -> Tuple[int, ...]:
    """Set every coordinate to 1 independently with probability point_i."""
    values = np.asarray(point.values if isinstance(point, FractionalPoint) else point, dtype=float)
    draws = stream(seed, purpose).random(len(values))
    return tuple((draws < values).astype(int).tolist())


def objective_event_id(instance: PackingInstance) -> int:
    """Event id of the objective event; rows use ids 0..m-1."""
    return instance.m


def violating_rows(
    instance: PackingInstance,
    solution: Sequence[int],
    t: Optional[int],
    floor: Optional[float],
) -> list:
    """Ids of rows loaded above t, then the objective event id if the objective is below floor."""
    events = []
    if t is not None:
        events = np.flatnonzero(row_loads(instance, solution) > t).tolist()
    if floor:
        objective = math.fsum(c * s for c, s in zip(instance.weights, solution))
        if objective < floor:
            events.append(objective_event_id(instance))
    return events


def moser_tardos(
    instance: PackingInstance,
    point: FractionalPoint,
    config: LllConfig,
    observer: Optional[ResampleObserver] = None,
) -> RoundingOutcome:
    """
    Round independently, then resample violated events until none remain.

    A row event resamples the row's variables; the objective event resamples
    every variable and is picked only when no row is violated. Rows whose
    probability-one variables alone exceed t can never be repaired; they are
    counted as stuck and the outcome is unconverged.

    Args:
        instance: Packing instance
        point: Rounding probabilities, one per variable
        config: Error target, objective floor, resample cap and seed; without an
            explicit floor the objective event fires below (1 - epsilon) <c, point>
        observer: Called after every resampling round

    Returns:
        RoundingOutcome; when max_resamples runs out, the best solution seen
        (fewest violated events, then highest objective) with converged=False
    """
    n, m = instance.n_vars, instance.m
    p = np.asarray(point.values, dtype=float)
    if len(p) != n:
        raise ValueError(f"point has length {len(p)}, instance has {n} variables")
    A = incidence(instance)
    columns = column_index(instance)
    weights = np.asarray(instance.weights, dtype=float)
    t = config.error_target
    if config.objective_floor is None:
        floor = (1.0 - config.epsilon) * float(weights @ p)
    else:
        floor = config.objective_floor
    rng = stream(config.seed, Purpose.LLL)

    stuck = np.zeros(m, dtype=bool)
    if t is not None:
        stuck = (A @ (p >= 1.0).astype(np.int64)) > t
        if stuck.any():
            logger.warning(f"[LLL] {int(stuck.sum())} row(s) exceed t={t} with certain variables alone")

    x = (rng.random(n) < p).astype(np.int64)
    loads = A @ x
    objective = float(weights @ x)
    resamples = row_resamples = 0
    best, best_key = x.copy(), None
    converged = True

    while True:
        over = np.flatnonzero((loads > t) & ~stuck) if t is not None else np.empty(0, dtype=np.int64)
        objective_low = floor > 0 and objective < floor
        key = (len(over) + int(objective_low), -objective)
        if best_key is None or key < best_key:
            best, best_key = x.copy(), key
        if not len(over) and not objective_low:
            break
        if resamples >= config.max_resamples:
            converged = False
            x = best
            logger.warning(
                f"[LLL] max_resamples={config.max_resamples} reached with "
                f"{len(over)} row(s) over t={t} and objective {objective:.6g} vs floor {floor:.6g}"
            )
            break

        if len(over):
            j = int(over[0] if config.selection == Selection.LOWEST else over[rng.integers(len(over))])
            variables = A.indices[A.indptr[j]:A.indptr[j + 1]]
            event = j
            row_resamples += 1
        else:
            variables = np.arange(n)
            event = objective_event_id(instance)
        fresh = (rng.random(len(variables)) < p[variables]).astype(np.int64)
        change = fresh - x[variables]
        moved = change != 0
        x[variables] = fresh
        if moved.any():
            loads += columns[:, variables[moved]] @ change[moved]
            objective += float(weights[variables[moved]] @ change[moved])
        resamples += 1
        if observer is not None:
            observer(event, variables, x)

    stats = {
        "resamples": resamples,
        "row_resamples": row_resamples,
        "objective_resamples": resamples - row_resamples,
        "stuck_rows": int(stuck.sum()),
        "t_used": t if t is not None else 0,
        "objective_floor": floor,
    }
    return evaluate(instance, x.tolist(), stats, converged=converged and not stuck.any())


def damped_scale(m: int, opt: float, d: float, B: float) -> float:
    """Down-scaling max((m/opt)^(1/(B-1)), d^(1/(B-1)))."""
    if B <= 1:
        raise DampedScaleError(
            f"B={B} makes the exponent 1/(B-1) undefined; substitute B+1 for integral right-hand sides"
        )
    if opt <= 0 or m < 1 or d < 0:
        raise ValueError(f"need opt > 0, m >= 1, d >= 0; got opt={opt}, m={m}, d={d}")
    exponent = 1.0 / (B - 1.0)
    return max((m / opt) ** exponent, d ** exponent)


def damped_beta(d: float, alpha: float, B: float) -> float:
    """Damping e (d alpha)^(1/B), nudged up so that (beta/e)^B > d alpha strictly."""
    if d < 1 or alpha < 1 or B < 1:
        raise ValueError(f"need d, alpha, B >= 1; got d={d}, alpha={alpha}, B={B}")
    return math.e * (d * alpha) ** (1.0 / B) * BETA_SLACK


def objective_tail(opt: float, epsilon: float) -> float:
    """Bound exp(-eps^2 OPT / 2) on the objective falling below (1 - eps) OPT."""
    if opt <= 0 or not 0 < epsilon < 1:
        raise ValueError(f"need opt > 0 and 0 < epsilon < 1; got opt={opt}, epsilon={epsilon}")
    return math.exp(-epsilon * epsilon * opt / 2.0)


def asymmetric_lll_check(
    m: int,
    d: int,
    alpha: float,
    t: int,
    row_mean: float,
    opt: float,
    epsilon: float,
) -> LllCheck:
    """
    Evaluate the asymmetric local-lemma conditions with y_i = 1/(alpha d), y_obj = 1/2.

    A row event (load above t, mean row_mean) must have probability below
    y_i (1 - y_i)^d (1 - y_obj); the objective event must have probability
    below y_obj (1 - y_i)^m.
    """
    if d < 1 or alpha < 1 or t < 1 or row_mean <= 0:
        raise ValueError("need d >= 1, alpha >= 1, t >= 1 and row_mean > 0")
    y = 1.0 / (alpha * d)
    row_bound = chernoff_tail(row_mean, t / row_mean - 1.0) if t > row_mean else 1.0
    return LllCheck(
        row_event_bound=row_bound,
        row_event_allowance=y * (1.0 - y) ** d * 0.5,
        objective_event_bound=objective_tail(opt, epsilon),
        objective_event_allowance=0.5 * (1.0 - y) ** m,
    )


def _loglog_ratio(x: float) -> float:
    if x <= math.e:
        raise ValueError(f"ln x / ln ln x needs x > e, got {x}")
    return math.log(x) / math.log(math.log(x))


def rt_reference(m: int) -> float:
    """Independent-rounding error scale ln m / ln ln m."""
    return _loglog_ratio(m)


def column_bound_error(rho: int, m: int, opt: float) -> float:
    """Error bound for matrices with at most rho ones per column and unit rhs."""
    if rho < 1 or m < 3 or opt <= 0:
        raise ValueError(f"need rho >= 1, m >= 3, opt > 0; got rho={rho}, m={m}, opt={opt}")
    spread = rho * math.log(m)
    if spread <= math.e:
        raise ValueError(f"rho ln m = {spread:.6g} must exceed e")
    dependency = (math.log(rho) + math.log(math.log(m))) / math.log(math.log(spread))
    return max(dependency, _loglog_ratio(m / opt))


def walk_lll_error_branches(m: int, n: int, k: int, opt: float) -> ErrorBranches:
    """
    Both branches of the error expression for k-sparse rows.

    The dependency branch uses d ~ (mk ln m / n) ln m; the objective branch
    is ln(m/OPT)/ln ln(m/OPT), and 0 when m/OPT <= e, where the objective
    event is already unlikely.
    """
    if m < 3 or n < 1 or k < 1 or opt <= 0:
        raise ValueError(f"need m >= 3, n, k >= 1 and opt > 0; got m={m}, n={n}, k={k}, opt={opt}")
    density = m * k * math.log(m) / n
    spread = density * math.log(m)
    if density <= 0 or spread <= math.e:
        raise ValueError(f"(mk ln m / n) ln m = {spread:.6g} must exceed e")
    dependency = (math.log(density) + math.log(math.log(m))) / math.log(math.log(spread))
    ratio = m / opt
    objective = _loglog_ratio(ratio) if ratio > math.e else 0.0
    return ErrorBranches(dependency_branch=dependency, objective_branch=objective)


def greedy_repair(instance: PackingInstance, k: int, seed: int) -> RoundingOutcome:
    """
    Baseline: set each variable to 1 with probability 1/k, then clear rows
    above q = max(1, ceil(ln(mk/n))) in ascending column order.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    n, m = instance.n_vars, instance.m
    q = max(1, math.ceil(math.log(m * k / n))) if m * k > n else 1
    x = (stream(seed, Purpose.GREEDY).random(n) < 1.0 / k).astype(np.int64)
    A = incidence(instance)
    zeroed = 0
    for j in np.flatnonzero(A @ x > q):
        cols = A.indices[A.indptr[j]:A.indptr[j + 1]]
        ones = cols[x[cols] == 1]
        excess = len(ones) - q
        if excess > 0:
            x[ones[:excess]] = 0
            zeroed += excess
    return evaluate(instance, x.tolist(), {"q": q, "zeroed": zeroed})


def rounding_probabilities(state: WalkState, sparse: FractionalPoint, mode: FixedRounding) -> FractionalPoint:
    """Per-variable probabilities for the final rounding of a walk's output."""
    if FixedRounding(mode) == FixedRounding.INDEPENDENT:
        return sparse
    values = np.asarray(sparse.values, dtype=float)
    values[state.fixed == FixStatus.FIXED_LOW] = 0.0
    values[state.fixed == FixStatus.FIXED_HIGH] = 1.0
    return FractionalPoint(values=tuple(values.tolist()))


def lll_guard_holds(t: int, d: int) -> bool:
    return math.e * 2.0 ** (-t) * (d + 1) <= 1.0


def iterated_round(
    instance: PackingInstance,
    point: FractionalPoint,
    seed: int = 0,
    t: Optional[int] = None,
    scale: float = 1.0,
    fixed_rounding: FixedRounding = FixedRounding.NEAREST,
    objective_floor: Optional[float] = None,
    allow_guard_failure: bool = False,
    walk_overrides: Optional[dict] = None,
    lll_overrides: Optional[dict] = None,
) -> RoundingOutcome:
    """
    Walk-then-resample pipeline.

    The walk sparsifies x'/scale. Moser-Tardos then rounds the walk's output;
    the dependency degree d is measured over the variables it receives with a
    probability strictly between 0 and 1, and the error target defaults to
    lll_error_target(d). Fixed coordinates snap to the nearest endpoint unless
    fixed_rounding is INDEPENDENT, which keeps them fractional.

    Args:
        instance: Packing instance
        point: Feasible fractional point x'
        seed: Seed shared by the walk and the resampling streams
        t: Error target; None picks lll_error_target(d)
        scale: Initial down-scaling S
        fixed_rounding: How fixed coordinates are rounded
        objective_floor: Objective event threshold; defaults to OPT/(2S), 0 disables it
        allow_guard_failure: Run even when e 2^-t (d+1) > 1
        walk_overrides: Extra WalkConfig fields
        lll_overrides: Extra LllConfig fields

    Returns:
        RoundingOutcome with walk and resampling counters in stats

    Raises:
        LllGuardError: the guard fails for an explicit t without override
    """
    point = validate(instance, point)
    walk_config = default_walk_config(instance, seed=seed, scale=scale, **(walk_overrides or {}))
    state, sparse = walk_round(instance, point, walk_config)
    probabilities = rounding_probabilities(state, sparse, fixed_rounding)
    p = np.asarray(probabilities.values)
    active = np.flatnonzero((p > 0.0) & (p < 1.0))
    dependency = build_dependency(instance, active)
    d = dependency.max_degree
    target = lll_error_target(d) if t is None else t
    guard = lll_guard_holds(target, d)
    if not guard:
        message = f"e * 2^-{target} * ({d} + 1) > 1: local-lemma guard fails"
        if not allow_guard_failure:
            raise LllGuardError(message)
        logger.warning(f"[LLL] {message}; running under override")

    opt = fractional_objective(instance, point)
    floor = opt / (2.0 * scale) if objective_floor is None else objective_floor
    lll_config = LllConfig(**{
        "error_target": target,
        "objective_floor": floor,
        "max_resamples": settings.default_max_resamples,
        "seed": seed,
        **(lll_overrides or {}),
    })
    outcome = moser_tardos(instance, probabilities, lll_config)
    stats = merge_stats(outcome.stats, state.summary(), {
        "d_measured": d,
        "lll_vars": int(active.size),
        "S_used": scale,
        "opt_fractional": opt,
        "guard_holds": guard,
        "fixed_rounding": FixedRounding(fixed_rounding).value,
        "gamma": walk_config.gamma,
        "delta": walk_config.delta,
        "stop_unfixed": walk_config.stop_unfixed,
        "relation": walk_config.relation,
    })
    logger.info(
        f"[LLL] walk-lll d={d} t={target} resamples={stats['resamples']} "
        f"load={outcome.linf_load} objective={outcome.objective:.6g}"
    )
    return outcome.model_copy(update={
        "stats": stats,
        "converged": outcome.converged and not state.incomplete,
    })


def damped_round(
    instance: PackingInstance,
    point: FractionalPoint,
    B: Optional[float] = None,
    seed: int = 0,
    alpha: float = 1.0,
    integer_substitution: bool = False,
    fixed_rounding: FixedRounding = FixedRounding.INDEPENDENT,
    walk_overrides: Optional[dict] = None,
) -> RoundingOutcome:
    """
    Strictly feasible rounding for a uniform right-hand side B.

    Scales x' by S = max(1, damped_scale(m, OPT, d, B)), walks from x'/S and
    resamples with error target B and objective floor (OPT/S)/2. With
    integer_substitution the exponent uses B+1 instead of B.

    Raises:
        DampedScaleError: rhs not uniform, or the effective B is at most 1
    """
    rhs = instance.uniform_rhs
    if rhs is None:
        raise DampedScaleError("damped rounding needs every row to share one right-hand side")
    if B is None:
        B = rhs
    elif not math.isclose(B, rhs):
        raise DampedScaleError(f"B={B} differs from the instance right-hand side {rhs}")
    exponent_B = B + 1 if integer_substitution else B
    if exponent_B <= 1:
        raise DampedScaleError(
            f"B={B} makes damped_scale undefined; rerun with integer substitution (B+1)"
        )

    point = validate(instance, point)
    opt = fractional_objective(instance, point)
    d = build_dependency(instance).max_degree
    scale = max(1.0, damped_scale(instance.m, opt, d, exponent_B)) if opt > 0 else 1.0
    beta = damped_beta(max(d, 1), alpha, B) if B >= 1 else math.e
    outcome = iterated_round(
        instance,
        point,
        seed=seed,
        t=max(1, int(math.floor(B))),
        scale=scale,
        fixed_rounding=fixed_rounding,
        objective_floor=opt / scale / 2.0,
        allow_guard_failure=True,
        walk_overrides=walk_overrides,
    )
    stats = merge_stats(outcome.stats, {
        "B": B,
        "integer_substitution": integer_substitution,
        "d_full": d,
        "damped_beta": beta,
        "S_used": scale,
    })
    return outcome.model_copy(update={"stats": stats})
