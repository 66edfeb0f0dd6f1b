"""Plan files, parallel execution and result persistence.

Plan file lines:
    cell <family> key=value... <method> key=value... <trials> <seedbase>
    out <directory>

Generator keys are m, n, k, b, prob, inputs, certify and seed. When the
generator seed is omitted every trial draws its own instance from the trial
seed; otherwise all trials of the cell share one instance. Trial i of a cell
uses seed seedbase + i.
"""
import csv
import json
import logging
import statistics
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from pydantic import ValidationError

from config import LOG_BASE, settings
from schemas.experiments import (
    RESULT_COLUMNS,
    SUMMARY_COLUMNS,
    ExperimentPlan,
    Method,
    PlanCell,
    RoundResult,
    RunMetadata,
)
from schemas.generators import Family, GeneratedInstance, GeneratorSpec
from schemas.instances import StatValue
from services.errors import PlanFormatError
from services.generators import default_point, generate
from services.rng import RNG_ID
from services.rounding_methods import run_method

logger = logging.getLogger(__name__)

FAMILIES = {family.value for family in Family}
METHODS = {method.value for method in Method}


def run_metadata() -> RunMetadata:
    return RunMetadata(tool_version=settings.tool_version, log_base=LOG_BASE, rng=RNG_ID)


def parse_value(text: str) -> StatValue:
    """Plan/CLI option value: bool, int, float or string, in that order."""
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for kind in (int, float):
        try:
            return kind(text)
        except ValueError:
            pass
    return text


def _options(tokens: List[str], start: int) -> Tuple[Dict[str, StatValue], int]:
    options, i = {}, start
    while i < len(tokens) and "=" in tokens[i]:
        key, _, value = tokens[i].partition("=")
        options[key] = parse_value(value)
        i += 1
    return options, i


def _parse_cell(tokens: List[str], line_no: int) -> PlanCell:
    if len(tokens) < 5:
        raise PlanFormatError(f"line {line_no}: expected 'cell <family> ... <method> ... <trials> <seedbase>'")
    family = tokens[1]
    if family not in FAMILIES:
        raise PlanFormatError(f"line {line_no}: unknown family '{family}'")
    generator_options, i = _options(tokens, 2)
    if i >= len(tokens) or tokens[i] not in METHODS:
        found = tokens[i] if i < len(tokens) else "end of line"
        raise PlanFormatError(f"line {line_no}: expected a method ({', '.join(sorted(METHODS))}), got {found}")
    method = tokens[i]
    params, i = _options(tokens, i + 1)
    if len(tokens) - i != 2:
        raise PlanFormatError(f"line {line_no}: expected '<trials> <seedbase>' after the method options")
    try:
        trials, seed_base = int(tokens[i]), int(tokens[i + 1])
        regenerate = "seed" not in generator_options
        generator = GeneratorSpec(family=family, **{"seed": seed_base, **generator_options})
        return PlanCell(
            generator=generator,
            method=method,
            params=params,
            trials=trials,
            seed_base=seed_base,
            regenerate=regenerate,
        )
    except (ValueError, ValidationError) as e:
        raise PlanFormatError(f"line {line_no}: {e}") from e


def parse_plan(text: str) -> ExperimentPlan:
    """
    Parse a plan file.

    Raises:
        PlanFormatError: unknown family or method, bad counts, bad parameters
    """
    cells, output_dir = [], None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "cell":
            cells.append(_parse_cell(tokens, line_no))
        elif tokens[0] == "out" and len(tokens) == 2:
            output_dir = tokens[1]
        else:
            raise PlanFormatError(f"line {line_no}: unrecognized directive '{tokens[0]}'")
    return ExperimentPlan(cells=cells, output_dir=output_dir, metadata=run_metadata())


def read_plan(path: Union[str, Path]) -> ExperimentPlan:
    return parse_plan(Path(path).read_text())


@lru_cache(maxsize=32)
def _generated(spec: GeneratorSpec) -> GeneratedInstance:
    return generate(spec)


def run_trial(cell_index: int, cell: PlanCell, trial: int) -> RoundResult:
    """Run one trial; every failure becomes a result row with status "error"."""
    seed = cell.trial_seed(trial)
    spec = cell.generator
    if cell.regenerate:
        spec = spec.model_copy(update={"seed": seed})
    family = Family(spec.family).value
    base = {"cell": cell_index, "trial": trial, "seed": seed, "family": family, "method": cell.method}
    try:
        generated = _generated(spec)
        instance = generated.instance
        point = generated.point
        if point is None:
            point = default_point(instance, float(cell.params.get("point_scale", 1.0)))
        params = {key: value for key, value in cell.params.items() if key != "point_scale"}
        outcome = run_method(cell.method, instance, point, seed, params)
    except Exception as e:
        logger.error(f"[SWEEP] cell {cell_index} trial {trial} failed: {e}")
        return RoundResult(**base, status="error", error=str(e))

    stats = outcome.stats
    config = {key: value for key, value in stats.items() if isinstance(value, (bool, int, float, str))}
    config.update({f"gen_{key}": value for key, value in spec.model_dump(exclude_none=True).items()
                   if isinstance(value, (bool, int, float, str))})
    return RoundResult(
        **base,
        linf_load=outcome.linf_load,
        objective=outcome.objective,
        opt_fractional=stats.get("opt_fractional"),
        resamples=int(stats.get("resamples", 0)),
        walk_steps=int(stats.get("walk_steps", 0)),
        d_measured=stats.get("d_measured"),
        t_used=stats.get("t_used"),
        S_used=float(stats.get("S_used", 1.0)),
        converged=outcome.converged,
        instance_digest=outcome.instance_digest,
        config=config,
    )


def _run_task(task: Tuple[int, PlanCell, int]) -> RoundResult:
    return run_trial(*task)


def summarize(results: Sequence[RoundResult]) -> List[Dict[str, StatValue]]:
    """Median, mean and max of linf_load and objective per cell over successful trials."""
    rows = []
    cells = sorted({r.cell for r in results})
    for cell in cells:
        group = [r for r in results if r.cell == cell]
        ok = [r for r in group if r.status == "ok"]
        row = {"cell": cell, "family": group[0].family, "method": group[0].method,
               "trials": len(group), "ok": len(ok)}
        for field in ("linf_load", "objective"):
            values = [getattr(r, field) for r in ok]
            row[f"{field}_median"] = statistics.median(values) if values else ""
            row[f"{field}_mean"] = statistics.fmean(values) if values else ""
            row[f"{field}_max"] = max(values) if values else ""
        rows.append(row)
    return rows


def write_results(plan: ExperimentPlan, results: Sequence[RoundResult], output_dir: Union[str, Path]) -> Path:
    """Per-cell JSON files plus results.csv and summary.csv; returns the directory."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for index, cell in enumerate(plan.cells):
        document = {
            "cell": index,
            "generator": cell.generator.model_dump(mode="json", exclude_none=True),
            "method": cell.method,
            "params": cell.params,
            "trials": cell.trials,
            "seed_base": cell.seed_base,
            "regenerate": cell.regenerate,
            "metadata": plan.metadata.model_dump(),
            "results": [r.model_dump(mode="json") for r in results if r.cell == index],
        }
        (out / f"cell_{index:04d}.json").write_text(json.dumps(document, indent=2, sort_keys=True) + "\n")

    with open(out / "results.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=RESULT_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for r in results:
            writer.writerow(r.model_dump())
    with open(out / "summary.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=SUMMARY_COLUMNS)
        writer.writeheader()
        writer.writerows(summarize(results))
    return out


def run_plan(
    plan: ExperimentPlan,
    workers: Optional[int] = None,
    output_dir: Optional[Union[str, Path]] = None,
) -> List[RoundResult]:
    """
    Execute every (cell, trial) of a plan.

    Args:
        plan: Parsed plan
        workers: Process count (defaults to settings.worker_count())
        output_dir: Where to write results (defaults to the plan's `out`, else settings.results_dir)

    Returns:
        Results ordered by (cell, trial); ordering and content do not depend on workers
    """
    tasks = [(index, cell, trial) for index, cell in enumerate(plan.cells) for trial in range(cell.trials)]
    count = settings.worker_count() if workers is None else workers
    logger.info(f"[SWEEP] {len(plan.cells)} cell(s), {len(tasks)} trial(s), {count} worker(s)")
    if count > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=count) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(task) for task in tasks]
    results.sort(key=lambda r: (r.cell, r.trial))

    failed = sum(r.status != "ok" for r in results)
    if failed:
        logger.warning(f"[SWEEP] {failed} of {len(results)} trial(s) failed")
    target = output_dir or plan.output_dir or settings.results_dir
    write_results(plan, results, target)
    return results
