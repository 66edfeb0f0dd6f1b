"""Gaussian random-walk sparsification.

Every unfixed coordinate takes independent N(0, gamma^2) steps until it enters
[0, delta] or [1 - delta, 1], where it freezes. The walk stops once each row has
at most `stop_unfixed` unfixed variables. Because every coordinate is a bounded
martingale, E[y'] = x'/S and a coordinate fixes high with probability equal to
its distance from the low barrier over the barrier gap.
"""
import logging
import math
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

import numpy as np

from config import settings
from schemas.instances import FractionalPoint, PackingInstance
from schemas.walk import AbsorptionStats, FixStatus, PhaseBudget, WalkConfig, WalkState
from services.errors import PhaseOverflowError
from services.instance_model import incidence
from services.rng import Purpose, stream

logger = logging.getLogger(__name__)

STEP_LIMIT = 2 ** 62
BUDGET_SLACK = 3.0


def _ceil(value: float, tol: float = 1e-9) -> int:
    """Ceiling that treats values within tol of an integer as that integer."""
    nearest = round(value)
    if abs(value - nearest) <= tol * max(1.0, abs(value)):
        return int(nearest)
    return math.ceil(value)


def phase_duration(p: int, n: int, gamma: float) -> int:
    """Steps in phase p: ceil(2^(2p) / (n^2 gamma^2)), computed exactly."""
    if p < 0 or n < 1 or gamma <= 0:
        raise ValueError(f"need p >= 0, n >= 1, gamma > 0; got p={p}, n={n}, gamma={gamma}")
    steps = math.ceil(Fraction(4) ** p / (n * n * Fraction(gamma) ** 2))
    if steps > STEP_LIMIT:
        raise PhaseOverflowError(f"phase {p} needs {steps} steps, above 2^62")
    return int(steps)


def total_steps(B: float, S: float, m: float, gamma: float) -> int:
    """Walk length ceil(B^2 / (S^2 (ln m)^2 gamma^2))."""
    if m < 2:
        raise ValueError(f"m must be at least 2, got {m}")
    if B <= 0 or S <= 0 or gamma <= 0:
        raise ValueError("B, S and gamma must be positive")
    steps = _ceil(B * B / (S * S * math.log(m) ** 2 * gamma * gamma))
    if steps > STEP_LIMIT:
        raise PhaseOverflowError(f"total of {steps} steps is above 2^62")
    return steps


def error_budget(p: int, B: float, S: float, n: float, m: float) -> float:
    """Per-phase error allowance 2 sqrt(B ln m 2^p / (S n))."""
    if m < 2:
        raise ValueError(f"m must be at least 2, got {m}")
    if p < 0 or B <= 0 or S <= 0 or n <= 0:
        raise ValueError("p must be nonnegative and B, S, n positive")
    return 2.0 * math.sqrt(B * math.log(m) * 2.0 ** p / (S * n))


def absorption_probability(start: float, lo: float, hi: float) -> float:
    """Probability that a martingale started at `start` exits through `hi`."""
    if not lo < start < hi:
        raise ValueError(f"need lo < start < hi, got lo={lo}, start={start}, hi={hi}")
    return (start - lo) / (hi - lo)


def expected_absorption_steps(a: float, b: float) -> float:
    """Mean exit time a*b of a unit-variance walk at distances a and b from the barriers."""
    if a <= 0 or b <= 0:
        raise ValueError("barrier distances must be positive")
    return a * b


def default_delta(n: int) -> float:
    """1/(ln n)^2, capped at 1/4 so that small instances keep delta < 1/2."""
    return min(1.0 / math.log(max(n, 2)) ** 2, 0.25)


def default_gamma(n: int, delta: float) -> float:
    return delta / max(math.log(max(n, 2)), 1.0)


def default_walk_config(instance: PackingInstance, **overrides) -> WalkConfig:
    """Walk parameters for an instance: delta, gamma from n and stop_unfixed = ceil(ln m)."""
    n, m = instance.n_vars, max(instance.m, 2)
    values = {
        "delta": default_delta(n),
        "stop_unfixed": max(1, math.ceil(math.log(m))),
        "max_steps": settings.default_max_steps,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "gamma" not in values:
        values["gamma"] = default_gamma(n, values["delta"])
    return WalkConfig(**values)


class PhaseSchedule:
    """Cumulative phase boundaries C_p = T_0 + ... + T_p."""

    def __init__(self, n: int, gamma: float):
        self.n = n
        self.gamma = gamma
        self._ends: List[int] = []

    def end(self, p: int) -> int:
        while len(self._ends) <= p:
            q = len(self._ends)
            previous = self._ends[-1] if self._ends else 0
            self._ends.append(previous + phase_duration(q, self.n, self.gamma))
        return self._ends[p]


def _check_relation(config: WalkConfig, n: int) -> None:
    if config.strict_log_relation and config.gamma > config.delta / max(math.log(n), 1.0):
        raise ValueError(
            f"gamma={config.gamma} exceeds delta/ln(n)={config.delta / math.log(n):.6g}"
        )


def walk_round(
    instance: PackingInstance,
    point: FractionalPoint,
    config: WalkConfig,
    observer: Optional[Callable[[WalkState], None]] = None,
) -> Tuple[WalkState, FractionalPoint]:
    """
    Sparsify a fractional point with the Gaussian walk.

    Args:
        instance: Packing instance
        point: Feasible fractional point x'
        config: Walk parameters
        observer: Called with the live state after every step

    Returns:
        (final state, sparsified point y'); the state is flagged incomplete
        when max_steps ran out before the stopping condition held
    """
    n, m = instance.n_vars, instance.m
    if len(point.values) != n:
        raise ValueError(f"point has length {len(point.values)}, instance has {n} variables")
    _check_relation(config, n)

    A = incidence(instance)
    delta = config.delta
    start = np.asarray(point.values, dtype=float) / config.scale
    values = start.copy()
    fixed = np.zeros(n, dtype=np.int8)
    fixed[values <= delta] = FixStatus.FIXED_LOW
    fixed[values >= 1.0 - delta] = FixStatus.FIXED_HIGH
    unfixed = fixed == FixStatus.UNFIXED

    state = WalkState(
        values=values,
        start=start,
        fixed=fixed,
        unfixed_per_row=A @ unfixed.astype(np.int64),
        accumulated_error=np.zeros(m),
    )
    schedule = PhaseSchedule(n, config.gamma)
    phase_origin = state.accumulated_error.copy()
    step_vector = np.zeros(n)
    if config.trace:
        state.trace.append(state.trace_row())

    while unfixed.any() and state.max_unfixed > config.stop_unfixed:
        if state.step_count >= config.max_steps:
            state.incomplete = True
            logger.warning(
                f"[WALK] max_steps={config.max_steps} reached with max unfixed {state.max_unfixed}"
            )
            break
        gaussian = stream(config.seed, Purpose.WALK, state.step_count).standard_normal(n)
        idx = np.flatnonzero(unfixed)
        moved = np.clip(values[idx] + config.gamma * gaussian[idx], 0.0, 1.0)
        step_vector[:] = 0.0
        step_vector[idx] = moved - values[idx]
        values[idx] = moved
        state.accumulated_error += A @ step_vector

        low = idx[moved <= delta]
        high = idx[moved >= 1.0 - delta]
        if len(low) or len(high):
            fixed[low] = FixStatus.FIXED_LOW
            fixed[high] = FixStatus.FIXED_HIGH
            newly = np.zeros(n, dtype=np.int64)
            newly[low] = 1
            newly[high] = 1
            unfixed[low] = False
            unfixed[high] = False
            state.unfixed_per_row -= A @ newly

        state.step_count += 1
        while schedule.end(state.phase) < state.step_count:
            increment = state.accumulated_error - phase_origin
            state.phase_max_increment.append(float(np.abs(increment).max()) if m else 0.0)
            phase_origin = state.accumulated_error.copy()
            state.phase += 1
        if config.trace:
            state.trace.append(state.trace_row())
        if observer is not None:
            observer(state)

    if state.step_count:
        increment = state.accumulated_error - phase_origin
        state.phase_max_increment.append(float(np.abs(increment).max()) if m else 0.0)
    logger.debug(
        f"[WALK] steps={state.step_count} phase={state.phase} "
        f"fixed_low={state.num_fixed_low} fixed_high={state.num_fixed_high} "
        f"max_unfixed={state.max_unfixed}"
    )
    return state, FractionalPoint(values=tuple(values.tolist()))


def phase_budget_report(
    state: WalkState,
    instance: PackingInstance,
    config: WalkConfig,
    slack: float = BUDGET_SLACK,
) -> List[PhaseBudget]:
    """Compare each phase's largest row error increment with slack * error_budget."""
    m = max(instance.m, 2)
    B = max(instance.rhs, default=1.0) or 1.0
    report = []
    for p, increment in enumerate(state.phase_max_increment):
        budget = error_budget(p, B, config.scale, instance.n_vars, m)
        report.append(PhaseBudget(phase=p, max_increment=increment, budget=budget,
                                  within=increment <= slack * budget))
    return report


def simulate_absorption(
    start: float,
    gamma: float,
    delta: float,
    trials: int,
    seed: int,
    max_steps: int = 10_000_000,
) -> AbsorptionStats:
    """
    Many independent one-coordinate walks, vectorised across trials.

    Each trial starts at `start`, takes N(0, gamma^2) steps clamped to [0, 1]
    and stops on entering [0, delta] or [1 - delta, 1], as walk_round does.
    """
    if not 0 < delta < 0.5 or gamma <= 0 or trials < 1:
        raise ValueError("need 0 < delta < 1/2, gamma > 0 and trials >= 1")
    rng = stream(seed, Purpose.SIMULATION)
    x = np.full(trials, float(start))
    high = x >= 1.0 - delta
    steps = np.zeros(trials, dtype=np.int64)
    active = np.flatnonzero((x > delta) & ~high)
    t = 0
    while active.size and t < max_steps:
        x[active] = np.clip(x[active] + gamma * rng.standard_normal(active.size), 0.0, 1.0)
        t += 1
        current = x[active]
        up = current >= 1.0 - delta
        done = up | (current <= delta)
        high[active[up]] = True
        steps[active[done]] = t
        active = active[~done]
    return _absorption_stats(trials, high, steps, active.size)


def simulate_bernoulli_absorption(a: int, b: int, trials: int, seed: int) -> AbsorptionStats:
    """Unit +-1 walks started at distance a from the low barrier and b from the high one."""
    if a < 1 or b < 1 or trials < 1:
        raise ValueError("need a, b >= 1 and trials >= 1")
    rng = stream(seed, Purpose.SIMULATION)
    position = np.zeros(trials, dtype=np.int64)
    high = np.zeros(trials, dtype=bool)
    steps = np.zeros(trials, dtype=np.int64)
    active = np.arange(trials)
    t = 0
    while active.size:
        position[active] += 2 * rng.integers(0, 2, size=active.size) - 1
        t += 1
        current = position[active]
        up = current >= b
        done = up | (current <= -a)
        high[active[up]] = True
        steps[active[done]] = t
        active = active[~done]
    return _absorption_stats(trials, high, steps, 0)


def _absorption_stats(trials: int, high: np.ndarray, steps: np.ndarray, unfinished: int) -> AbsorptionStats:
    return AbsorptionStats(
        trials=trials,
        fraction_high=float(high.mean()),
        mean_steps=float(steps.mean()),
        std_error_steps=float(steps.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0,
        unfinished=int(unfinished),
    )


def log_rounding_sparsify(point: FractionalPoint, m: int, seed: int) -> FractionalPoint:
    """
    One-shot sparsification by independent rounding.

    Every coordinate below 1/ln m becomes 1/ln m with probability x_i ln m and
    0 otherwise, so E[y_i] = x_i while few small coordinates stay nonzero.
    """
    if m < 3:
        raise ValueError(f"m must be at least 3 so that 1/ln m < 1, got {m}")
    level = 1.0 / math.log(m)
    x = np.asarray(point.values, dtype=float)
    small = x < level
    draws = stream(seed, Purpose.SPARSIFY).random(len(x))
    y = x.copy()
    y[small] = np.where(draws[small] < x[small] / level, level, 0.0)
    return FractionalPoint(values=tuple(y.tolist()))
