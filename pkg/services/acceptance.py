"""Named acceptance suites with desk-scale constants."""
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from typing import Callable, Dict, Iterable, List, Optional

from config import settings
from schemas.experiments import AcceptanceResult
from schemas.instances import FractionalPoint, PackingInstance
from schemas.lll import FixedRounding, LllConfig
from schemas.walk import WalkConfig
from services.analysis import brute_force_min_load, hit_probability_sweep, lower_bound_condition
from services.errors import UnknownSuiteError
from services.generators import hypergraph_bmatch, random_k_sparse
from services.instance_model import evaluate, fractional_objective
from services.lll_engine import (
    build_dependency,
    chernoff_tail,
    damped_beta,
    damped_round,
    greedy_repair,
    independent_round,
    iterated_round,
    lll_error_target,
    moser_tardos,
)
from services.rng import Purpose, stream
from services.walk_engine import default_walk_config, phase_budget_report, simulate_absorption, walk_round

logger = logging.getLogger(__name__)


def _map(fn: Callable, items: Iterable, workers: Optional[int]) -> list:
    items = list(items)
    if workers and workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(item) for item in items]


WALK_POINT = (0.3, 0.5, 0.2)


def _walk_objective_trial(seed: int) -> float:
    instance = PackingInstance.create([[0, 1], [1, 2]], 3)
    config = WalkConfig(gamma=0.05, delta=0.1, scale=1.25, stop_unfixed=0, seed=seed)
    state, sparse = walk_round(instance, FractionalPoint(values=WALK_POINT), config)
    if state.max_unfixed:
        return math.nan
    return config.scale * fractional_objective(instance, sparse)


def martingale(workers: Optional[int] = None) -> AcceptanceResult:
    starts = (0.1, 0.3, 0.7)
    gamma, delta, trials = 0.005, 0.01, 20000
    measured, passed = {}, True
    for i, start in enumerate(starts):
        stats = simulate_absorption(start, gamma, delta, trials, seed=1000 + i)
        measured[f"fraction_high_{start}"] = stats.fraction_high
        passed &= abs(stats.fraction_high - start) <= 0.02 and stats.unfinished == 0

    # full walk_round runs, clamped and fixed, until every coordinate is absorbed
    totals = _map(_walk_objective_trial, range(10_000), workers)
    absorbed = [value for value in totals if not math.isnan(value)]
    target = sum(WALK_POINT)
    mean = statistics.fmean(absorbed)
    spread = statistics.stdev(absorbed) / math.sqrt(len(absorbed))
    measured.update({"walk_objective_mean": mean, "walk_objective_target": target,
                     "walk_runs_absorbed": len(absorbed)})
    passed &= len(absorbed) == len(totals) and abs(mean - target) <= 4 * spread + 0.005
    return AcceptanceResult(
        suite="martingale", passed=passed, measured=measured,
        expected="fraction absorbed high within x' +- 0.02; mean scale*<c,y'> within 4 s.e. of <c,x'>",
    )


def _objective_trial(seed: int, instance: PackingInstance, point: FractionalPoint) -> float:
    outcome = iterated_round(
        instance, point, seed=seed, objective_floor=0.0,
        fixed_rounding=FixedRounding.INDEPENDENT, lll_overrides={"error_target": None},
    )
    return outcome.objective


def objective(workers: Optional[int] = None) -> AcceptanceResult:
    n = m = 512
    k = 16
    instance = random_k_sparse(m, n, k, seed=7)
    point = FractionalPoint.uniform(n, 1.0 / (2 * k))
    opt = fractional_objective(instance, point)
    values = _map(partial(_objective_trial, instance=instance, point=point), range(200), workers)
    ratio = statistics.fmean(values) / opt
    return AcceptanceResult(suite="objective", passed=0.95 <= ratio <= 1.05,
                            measured={"mean_ratio": ratio, "opt": opt},
                            expected="mean(objective)/<c,x'> in [0.95, 1.05]")


def _sparsification_trial(seed: int) -> tuple:
    n = m = 4096
    instance = random_k_sparse(m, n, 64, seed=seed)
    point = FractionalPoint.uniform(n, 1.0 / 64)
    config = default_walk_config(instance, seed=seed)
    state, _ = walk_round(instance, point, config)
    within = all(p.within for p in phase_budget_report(state, instance, config))
    return state.max_unfixed, state.max_abs_error, state.incomplete, within


def sparsification(workers: Optional[int] = None) -> AcceptanceResult:
    limit = 4 * math.log(4096)
    runs = _map(_sparsification_trial, range(20), workers)
    good = sum(unfixed <= limit and error <= 4.0 and not incomplete for unfixed, error, incomplete, _ in runs)
    budgeted = sum(r[3] for r in runs)
    return AcceptanceResult(
        suite="sparsification", passed=good >= 18 and budgeted >= 18,
        measured={"good_runs": good, "phase_budget_runs": budgeted, "worst_unfixed": max(r[0] for r in runs),
                  "worst_error": max(r[1] for r in runs)},
        expected="max unfixed <= 4 ln m, max |error| <= 4 and phase increments <= 3 x budget in >= 18 of 20",
    )


def _trend_trial(seed: int, n: int) -> tuple:
    k = math.ceil(math.log(n))
    instance = random_k_sparse(n, n, k, seed=seed)
    point = FractionalPoint.uniform(n, 1.0 / k)
    walked = iterated_round(instance, point, seed=seed)
    rt = evaluate(instance, independent_round(point, seed))
    within = walked.linf_load <= lll_error_target(int(walked.stats["d_measured"]))
    return walked.linf_load, rt.linf_load, within


def error_trend(workers: Optional[int] = None) -> AcceptanceResult:
    measured, better, within, total = {}, 0, 0, 0
    for n in (512, 2048, 8192):
        runs = _map(partial(_trend_trial, n=n), range(50), workers)
        walk_median = statistics.median(r[0] for r in runs)
        rt_median = statistics.median(r[1] for r in runs)
        measured[f"walk_lll_median_{n}"] = walk_median
        measured[f"rt_median_{n}"] = rt_median
        better += walk_median <= rt_median
        within += sum(r[2] for r in runs)
        total += len(runs)
    measured["within_target"] = within / total
    return AcceptanceResult(
        suite="error-trend", passed=better >= 2 and within >= 0.9 * total, measured=measured,
        expected="walk-lll median <= rt median in >= 2 of 3 sizes; load <= lll target in >= 90%",
    )


def _termination_trial(seed: int) -> tuple:
    m = n = 256
    k = 8
    instance = random_k_sparse(m, n, k, seed=seed)
    point = FractionalPoint.uniform(n, 1.0 / k)
    d = build_dependency(instance).max_degree
    t = lll_error_target(d)
    cap = math.ceil(10 * m * math.log(m))
    config = LllConfig(error_target=t, objective_floor=fractional_objective(instance, point) / 2,
                       max_resamples=cap, seed=seed)
    outcome = moser_tardos(instance, point, config)
    return outcome.converged, int(outcome.stats["resamples"])


def mt_termination(workers: Optional[int] = None) -> AcceptanceResult:
    runs = _map(_termination_trial, range(100), workers)
    converged = sum(r[0] for r in runs)
    return AcceptanceResult(suite="mt-termination", passed=converged >= 99,
                            measured={"converged": converged, "max_resamples": max(r[1] for r in runs)},
                            expected="convergence within 10 m ln m resamples in >= 99 of 100")


def _dependency_trial(seed: int) -> int:
    return build_dependency(random_k_sparse(1024, 1024, 10, seed=seed)).max_degree


def dependency(workers: Optional[int] = None) -> AcceptanceResult:
    m = n = 1024
    k = 10
    bound = 3 * (m * k * math.log(m) / n + math.log(m) ** 2)
    degrees = _map(_dependency_trial, range(100), workers)
    good = sum(d <= bound for d in degrees)
    return AcceptanceResult(suite="dependency", passed=good >= 95,
                            measured={"good_seeds": good, "max_degree": max(degrees), "bound": bound},
                            expected="max_degree <= 3 (mk ln m / n + (ln m)^2) in >= 95 of 100")


def _oracle_trial(seed: int) -> int:
    return brute_force_min_load(random_k_sparse(400, 12, 2, seed=seed), 6).min_max_load


def lower_bound(workers: Optional[int] = None) -> AcceptanceResult:
    condition = lower_bound_condition(400, 12, 2, 2)
    loads = _map(_oracle_trial, range(20), workers)
    good = sum(load >= 2 for load in loads)
    violations = sum(not cell.bound_holds for cell in hit_probability_sweep(64, 8))
    return AcceptanceResult(
        suite="lower-bound", passed=condition and good >= 19 and violations == 0,
        measured={"condition": condition, "good_seeds": good, "sweep_violations": violations},
        expected="min_max_load >= 2 in >= 19 of 20; zero hit-probability violations",
    )


def _damped_trial(seed: int) -> tuple:
    instance, point = hypergraph_bmatch(128, 128, 8, 2, seed=seed, certify=True)
    outcome = damped_round(instance, point, seed=seed)
    opt = fractional_objective(instance, point)
    return outcome.linf_load, outcome.objective, opt / (2 * float(outcome.stats["S_used"]))


def damped(workers: Optional[int] = None) -> AcceptanceResult:
    runs = _map(_damped_trial, range(50), workers)
    worst = max(r[0] for r in runs)
    median_objective = statistics.median(r[1] for r in runs)
    median_floor = statistics.median(r[2] for r in runs)
    return AcceptanceResult(
        suite="damped", passed=worst <= 2 and median_objective >= median_floor,
        measured={"max_vertex_load": worst, "median_objective": median_objective, "median_floor": median_floor},
        expected="vertex load <= 2 always; median objective >= OPT/(2S)",
    )


def chernoff(workers: Optional[int] = None) -> AcceptanceResult:
    tail_error = abs(chernoff_tail(1.0, math.e - 1.0) - math.exp(-1.0))
    rng = stream(9, Purpose.SIMULATION)
    d = rng.integers(1, 1001, size=1000)
    alpha = rng.uniform(1.0, 10.0, size=1000)
    B = rng.integers(1, 21, size=1000)
    strict = sum(
        (damped_beta(int(di), float(ai), int(bi)) / math.e) ** int(bi) > int(di) * float(ai)
        for di, ai, bi in zip(d, alpha, B)
    )
    return AcceptanceResult(suite="chernoff", passed=tail_error <= 1e-12 and strict == 1000,
                            measured={"tail_error": tail_error, "strict_triples": strict},
                            expected="chernoff_tail(1, e-1) = 1/e; (beta/e)^B > d alpha for 1000 triples")


def _greedy_trial(seed: int) -> tuple:
    outcome = greedy_repair(random_k_sparse(4096, 4096, 12, seed=seed), 12, seed)
    return outcome.objective, outcome.linf_load


def greedy(workers: Optional[int] = None) -> AcceptanceResult:
    n = 4096
    k = 12
    q = math.ceil(math.log(k))
    runs = _map(_greedy_trial, range(100), workers)
    mean_objective = statistics.fmean(r[0] for r in runs)
    worst = max(r[1] for r in runs)
    return AcceptanceResult(suite="greedy", passed=mean_objective >= n / (4 * k) and worst <= q,
                            measured={"mean_objective": mean_objective, "max_load": worst, "q": q},
                            expected="mean objective >= n/(4k); max load <= ceil(ln(mk/n))")


SUITES: Dict[str, Callable[[Optional[int]], AcceptanceResult]] = {
    "martingale": martingale,
    "objective": objective,
    "sparsification": sparsification,
    "error-trend": error_trend,
    "mt-termination": mt_termination,
    "dependency": dependency,
    "lower-bound": lower_bound,
    "damped": damped,
    "chernoff": chernoff,
    "greedy": greedy,
}


def run_suite(name: str, workers: Optional[int] = None) -> List[AcceptanceResult]:
    """
    Run one suite, or every suite for "all".

    Raises:
        UnknownSuiteError: name is not registered
    """
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise UnknownSuiteError(f"unknown suite '{name}'; choose from: all, {', '.join(SUITES)}")
    count = settings.worker_count() if workers is None else workers
    results = []
    for suite in names:
        result = SUITES[suite](count)
        logger.info(f"[ACCEPT] {suite}: {'PASS' if result.passed else 'FAIL'} {result.measured}")
        results.append(result)
    return results
