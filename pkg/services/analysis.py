"""Bound calculators and brute-force oracles for tiny instances."""
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import gammaln

from config import settings
from schemas.analysis import BoundEntry, BoundReport, HitProbability, MinLoadResult
from schemas.instances import PackingInstance, RoundingOutcome
from services.errors import EnumerationBudgetError, MixedInstanceError
from services.instance_io import instance_digest
from services.instance_model import incidence
from services.lll_engine import build_dependency, lll_error_target, rt_reference, walk_lll_error_branches

logger = logging.getLogger(__name__)

EXACT_LIMIT = 60
CHUNK = 4096


def lower_bound_condition(m: int, n: int, k: int, t: int) -> bool:
    """Whether ln(m/n) > k + t ln t, i.e. some k-sparse m x n matrix defeats error target t."""
    if not (m >= n >= 1 and k >= 1 and t >= 1):
        raise ValueError(f"need m >= n >= 1, k >= 1, t >= 1; got m={m}, n={n}, k={k}, t={t}")
    return math.log(m / n) > k + t * math.log(t)


def sum_tail(T: float, beta: float) -> float:
    """Martingale tail 2 exp(-beta^2 / (2T)) for T unit-bounded increments."""
    if T <= 0 or beta <= 0:
        raise ValueError(f"T and beta must be positive, got T={T}, beta={beta}")
    return 2.0 * math.exp(-beta * beta / (2.0 * T))


def _log_comb(a: int, b: int) -> float:
    return gammaln(a + 1) - gammaln(b + 1) - gammaln(a - b + 1)


def hypergeometric_pmf(n: int, k: int, target_size: int, j: int) -> float:
    """Pr[a uniform k-subset of [n] meets a fixed target_size-subset in exactly j places]."""
    if j < 0 or j > k or j > target_size or k - j > n - target_size:
        return 0.0
    if n <= EXACT_LIMIT:
        return float(Fraction(
            math.comb(target_size, j) * math.comb(n - target_size, k - j),
            math.comb(n, k),
        ))
    return float(np.exp(
        _log_comb(target_size, j) + _log_comb(n - target_size, k - j) - _log_comb(n, k)
    ))


def row_hit_probability(n: int, k: int, t: int, target_size: Optional[int] = None) -> HitProbability:
    """
    Exact hit probability for a random k-subset row and the closed-form lower bound.

    Args:
        n: Columns
        k: Row cardinality
        t: Required intersection size
        target_size: Size of the fixed column set (defaults to n // k)

    Returns:
        HitProbability with exact = Pr[|row & target| >= t] and
        lower_bound = 1 / (e^(k - t/2) t^t)
    """
    if not 0 <= t <= k <= n:
        raise ValueError(f"need 0 <= t <= k <= n, got n={n}, k={k}, t={t}")
    size = n // k if target_size is None else target_size
    if not 0 <= size <= n:
        raise ValueError(f"target size {size} outside [0, {n}]")
    upper = min(k, size)
    if n <= EXACT_LIMIT:
        total = sum(
            (Fraction(math.comb(size, j) * math.comb(n - size, k - j), math.comb(n, k))
             for j in range(t, upper + 1)),
            Fraction(0),
        )
        exact = float(total)
    else:
        exact = math.fsum(hypergeometric_pmf(n, k, size, j) for j in range(t, upper + 1))
    lower = 1.0 / (math.exp(k - t / 2.0) * float(t) ** t)
    return HitProbability(n=n, k=k, t=t, target_size=size, exact=min(exact, 1.0), lower_bound=lower)


def hit_probability_sweep(max_n: int = 64, max_k: int = 8) -> List[HitProbability]:
    """
    Every (n, k, t) with n <= max_n, k <= max_k, t <= k/2 and k | n.

    Cells with n/k < t are skipped: the target set is too small to be hit
    t times, so the exact probability is 0.
    """
    cells = []
    for k in range(1, max_k + 1):
        for n in range(k, max_n + 1, k):
            for t in range(0, k // 2 + 1):
                if n // k < t:
                    continue
                cells.append(row_hit_probability(n, k, t))
    return cells


def _scan_prefix(dense: np.ndarray, support_size: int, first: int) -> Tuple[int, Tuple[int, ...], int]:
    """Best (load, support) among supports whose smallest column is `first`."""
    n = dense.shape[1]
    rest = itertools.combinations(range(first + 1, n), support_size - 1)
    best_load, best_support, count = None, (), 0
    while True:
        chunk = list(itertools.islice(rest, CHUNK))
        if not chunk:
            break
        columns = np.full((len(chunk), support_size), first, dtype=np.int64)
        if support_size > 1:
            columns[:, 1:] = np.asarray(chunk, dtype=np.int64)
        loads = dense[:, columns].sum(axis=2).max(axis=0)
        i = int(np.argmin(loads))
        if best_load is None or loads[i] < best_load:
            best_load, best_support = int(loads[i]), tuple(int(c) for c in columns[i])
        count += len(chunk)
    return best_load, best_support, count


def brute_force_min_load(
    instance: PackingInstance,
    support_size: int,
    budget: Optional[int] = None,
    workers: Optional[int] = None,
) -> MinLoadResult:
    """
    Enumerate every 0-1 vector with exactly support_size ones.

    Args:
        instance: Packing instance (tiny)
        support_size: Number of ones
        budget: Maximum number of supports (defaults to settings.enumeration_budget)
        workers: Split the enumeration by smallest column across processes

    Returns:
        MinLoadResult with the lexicographically first support of minimum max load

    Raises:
        EnumerationBudgetError: C(n, support_size) exceeds the budget
    """
    n = instance.n_vars
    if not 0 <= support_size <= n:
        raise ValueError(f"support_size must lie in [0, {n}], got {support_size}")
    limit = settings.enumeration_budget if budget is None else budget
    total = math.comb(n, support_size)
    if total > limit:
        raise EnumerationBudgetError(f"C({n}, {support_size}) = {total} supports exceeds budget {limit}")
    if support_size == 0 or instance.m == 0:
        return MinLoadResult(best_support=tuple(range(support_size)), min_max_load=0, enumerated=total)

    dense = incidence(instance).toarray().astype(np.int32)
    firsts = range(0, n - support_size + 1)
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_scan_prefix, itertools.repeat(dense), itertools.repeat(support_size), firsts))
    else:
        parts = [_scan_prefix(dense, support_size, first) for first in firsts]
    load, support, _ = min((p for p in parts if p[0] is not None), key=lambda p: (p[0], p[1]))
    return MinLoadResult(best_support=support, min_max_load=load, enumerated=sum(p[2] for p in parts))


def _entries(outcomes: Union[dict, Iterable[Tuple[str, RoundingOutcome]]]) -> List[Tuple[str, RoundingOutcome]]:
    return list(outcomes.items()) if isinstance(outcomes, dict) else list(outcomes)


def pipeline_report(
    instance: PackingInstance,
    outcomes: Union[dict, Sequence[Tuple[str, RoundingOutcome]]],
    slack: float = 1.0,
    opt: Optional[float] = None,
) -> BoundReport:
    """
    Tabulate outcomes of several methods on one instance against lll_error_target(d).

    The main error expression is evaluated only when the fractional optimum
    `opt` is given.

    Raises:
        MixedInstanceError: an outcome was computed on a different instance
    """
    digest = instance_digest(instance)
    pairs = _entries(outcomes)
    for method, outcome in pairs:
        if outcome.instance_digest and outcome.instance_digest != digest:
            raise MixedInstanceError(f"outcome '{method}' belongs to instance {outcome.instance_digest[:12]}")
    d = build_dependency(instance).max_degree
    target = lll_error_target(d)
    m, n = instance.m, instance.n_vars
    rt = rt_reference(m) if m > math.e else None
    walk_lll = None
    k = instance.max_row_size
    try:
        if opt is not None:
            walk_lll = walk_lll_error_branches(m, n, k, opt).value
    except ValueError:
        logger.debug(f"[REPORT] error expression undefined at m={m}, n={n}, k={k}")
    entries = [
        BoundEntry(
            method=method,
            linf_load=outcome.linf_load,
            objective=outcome.objective,
            theoretical=float(target),
            ratio=outcome.linf_load / target if target > 0 else 0.0,
            passed=outcome.linf_load <= slack * target,
            converged=outcome.converged,
        )
        for method, outcome in pairs
    ]
    return BoundReport(
        instance_digest=digest, m=m, n=n, d=d, lll_target=target,
        rt_reference=rt, walk_lll_error=walk_lll, slack=slack, entries=entries,
    )
