#!/usr/bin/env python3
"""Command line for generating, sparsifying, rounding and analysing packing programs.

Usage: python -m scripts.ppack <gen|walk|round|analyze|sweep|accept> [options]
"""
import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence

from pydantic import ValidationError

from config import LOG_BASE, settings
from schemas.analysis import LOWER_BOUND_COLUMNS, ORACLE_COLUMNS, REPORT_COLUMNS
from schemas.experiments import Method
from schemas.generators import Family, GeneratorSpec
from schemas.lll import FixedRounding
from schemas.walk import TRACE_COLUMNS
from services.acceptance import SUITES, run_suite
from services.analysis import brute_force_min_load, hit_probability_sweep, pipeline_report, row_hit_probability
from services.errors import PackingError
from services.experiment_runner import read_plan, run_plan
from services.generators import default_point, generate
from services.instance_io import read_instance, read_point, write_instance, write_point, write_solution
from services.instance_model import fractional_objective, validate
from services.rng import RNG_ID
from services.rounding_methods import run_method
from services.walk_engine import default_walk_config, phase_budget_report, walk_round


def _write_csv(rows: Sequence[Dict], columns: Sequence[str], path: Optional[str]) -> None:
    handle = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.DictWriter(handle, fieldnames=list(columns), extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if path:
            handle.close()


def _load_point(args, instance):
    return read_point(args.frac) if args.frac else default_point(instance)


def cmd_gen(args) -> None:
    spec = GeneratorSpec(
        family=args.family, m=args.m, n=args.n, k=args.k, b=args.b, prob=args.prob,
        inputs=args.inputs, certify=args.certify, seed=args.seed,
    )
    generated = generate(spec)
    write_instance(generated.instance, args.out)
    point = generated.point or default_point(generated.instance)
    if args.frac:
        write_point(point, args.frac)
    print(json.dumps({
        "m": generated.instance.m,
        "n": generated.instance.n_vars,
        "dropped_rows": generated.dropped_rows,
        "rng": RNG_ID,
        "spec": spec.model_dump(mode="json", exclude_none=True),
    }, sort_keys=True))


def cmd_walk(args) -> None:
    instance = read_instance(args.input)
    point = validate(instance, _load_point(args, instance))
    config = default_walk_config(
        instance, seed=args.seed, gamma=args.gamma, delta=args.delta, scale=args.scale,
        stop_unfixed=args.stop_unfixed, max_steps=args.max_steps, trace=bool(args.trace),
    )
    state, sparse = walk_round(instance, point, config)
    if args.trace:
        _write_csv([row._asdict() for row in state.trace], TRACE_COLUMNS, args.trace)
    if args.out:
        write_point(sparse, args.out)
    summary = state.summary()
    summary.update({
        "gamma": config.gamma, "delta": config.delta, "scale": config.scale,
        "stop_unfixed": config.stop_unfixed, "relation": config.relation,
        "log_base": LOG_BASE, "rng": RNG_ID,
        "phases_within_budget": all(p.within for p in phase_budget_report(state, instance, config)),
    })
    print(json.dumps(summary, sort_keys=True))


def _method_params(args, opt: float) -> Dict:
    params = {"t": args.t, "alpha": args.alpha, "scale": args.scale,
              "allow_guard_failure": args.allow_guard_failure,
              "integer_substitution": args.integer_substitution}
    if args.B is not None:
        params["B"] = args.B
    if args.fixed_rounding is not None:
        params["fixed_rounding"] = args.fixed_rounding
    if args.epsilon is not None:
        params["floor"] = (1.0 - args.epsilon) * opt / args.scale
    return params


def cmd_round(args) -> None:
    instance = read_instance(args.input)
    point = _load_point(args, instance)
    opt = fractional_objective(instance, point)
    outcome = run_method(args.method, instance, point, args.seed, _method_params(args, opt))
    stats = outcome.stats
    result = {
        "method": args.method,
        "seed": args.seed,
        "linf_load": outcome.linf_load,
        "objective": outcome.objective,
        "opt_fractional": stats.get("opt_fractional", opt),
        "resamples": stats.get("resamples", 0),
        "walk_steps": stats.get("walk_steps", 0),
        "d_measured": stats.get("d_measured"),
        "t_used": stats.get("t_used"),
        "S_used": stats.get("S_used", 1.0),
        "converged": outcome.converged,
        "config": stats,
        "log_base": LOG_BASE,
        "rng": RNG_ID,
    }
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.json:
        Path(args.json).write_text(text + "\n")
    if args.sol:
        write_solution(outcome.solution, args.sol)
    print(text)


def cmd_analyze(args) -> None:
    if args.mode == "lowerbound":
        if args.n and args.k and args.t is not None:
            cells = [row_hit_probability(args.n, args.k, args.t)]
        else:
            cells = hit_probability_sweep(args.max_n, args.max_k)
        rows = [{**c.model_dump(), "bound_holds": c.bound_holds} for c in cells]
        _write_csv(rows, LOWER_BOUND_COLUMNS, args.csv)
    elif args.mode == "oracle":
        instance = read_instance(args.input)
        result = brute_force_min_load(instance, args.support_size, workers=args.workers)
        row = {**result.model_dump(), "support_size": args.support_size,
               "best_support": " ".join(str(i) for i in result.best_support)}
        _write_csv([row], ORACLE_COLUMNS, args.csv)
    else:
        instance = read_instance(args.input)
        point = _load_point(args, instance)
        opt = fractional_objective(instance, point)
        outcomes = [(m, run_method(m, instance, point, args.seed)) for m in args.methods.split(",")]
        report = pipeline_report(instance, outcomes, opt=opt)
        _write_csv([e.model_dump() for e in report.entries], REPORT_COLUMNS, args.csv)


def cmd_sweep(args) -> None:
    plan = read_plan(args.plan)
    results = run_plan(plan, workers=args.workers, output_dir=args.out)
    failed = sum(r.status != "ok" for r in results)
    print(f"cells={len(plan.cells)} trials={len(results)} failed={failed}")


def cmd_accept(args) -> int:
    results = run_suite(args.suite, workers=args.workers)
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        print(f"[{status}] {result.suite}: {json.dumps(result.measured, sort_keys=True)} (expected {result.expected})")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ppack", description="Randomized rounding for sparse packing programs")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate a seeded instance")
    gen.add_argument("--family", required=True, choices=[f.value for f in Family])
    for name in ("m", "n", "k", "b", "inputs"):
        gen.add_argument(f"--{name}", type=int)
    gen.add_argument("--prob", type=float)
    gen.add_argument("--certify", action="store_true", help="Scale the b-matching point to certified feasibility")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="Instance file to write")
    gen.add_argument("--frac", help="Fractional point file to write")
    gen.set_defaults(handler=cmd_gen)

    walk = sub.add_parser("walk", help="Sparsify a fractional point with the Gaussian walk")
    walk.add_argument("--in", dest="input", required=True)
    walk.add_argument("--frac")
    walk.add_argument("--gamma", type=float)
    walk.add_argument("--delta", type=float)
    walk.add_argument("--scale", type=float, default=1.0)
    walk.add_argument("--stop-unfixed", type=int)
    walk.add_argument("--max-steps", type=int)
    walk.add_argument("--seed", type=int, default=0)
    walk.add_argument("--trace", help="Per-step trace CSV")
    walk.add_argument("--out", help="Sparsified point file to write")
    walk.set_defaults(handler=cmd_walk)

    rnd = sub.add_parser("round", help="Round a fractional point")
    rnd.add_argument("--method", choices=[m.value for m in Method], default=Method.WALK_LLL.value)
    rnd.add_argument("--in", dest="input", required=True)
    rnd.add_argument("--frac")
    rnd.add_argument("--t", default="auto", help="Error target or 'auto'")
    rnd.add_argument("--alpha", type=float, default=1.0)
    rnd.add_argument("--epsilon", type=float, help="Objective floor (1 - epsilon) OPT / S")
    rnd.add_argument("--B", type=float, help="Uniform right-hand side for damped rounding")
    rnd.add_argument("--scale", type=float, default=1.0)
    rnd.add_argument("--fixed-rounding", choices=[f.value for f in FixedRounding],
                     help="Default: nearest for walk-lll, independent for damped")
    rnd.add_argument("--allow-guard-failure", action="store_true")
    rnd.add_argument("--integer-substitution", action="store_true", help="Use B+1 in the damped scaling exponent")
    rnd.add_argument("--seed", type=int, default=0)
    rnd.add_argument("--json", help="Result JSON file to write")
    rnd.add_argument("--sol", help="Solution file to write")
    rnd.set_defaults(handler=cmd_round)

    analyze = sub.add_parser("analyze", help="Bound calculators and oracles")
    analyze.add_argument("--mode", choices=["lowerbound", "oracle", "report"], required=True)
    analyze.add_argument("--in", dest="input")
    analyze.add_argument("--frac")
    analyze.add_argument("--n", type=int)
    analyze.add_argument("--k", type=int)
    analyze.add_argument("--t", type=int)
    analyze.add_argument("--max-n", type=int, default=64)
    analyze.add_argument("--max-k", type=int, default=8)
    analyze.add_argument("--support-size", type=int, default=1)
    analyze.add_argument("--methods", default="rt,walk-lll")
    analyze.add_argument("--seed", type=int, default=0)
    analyze.add_argument("--workers", type=int)
    analyze.add_argument("--csv", help="CSV file to write (stdout when omitted)")
    analyze.set_defaults(handler=cmd_analyze)

    sweep = sub.add_parser("sweep", help="Run an experiment plan")
    sweep.add_argument("--plan", required=True)
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--out", help="Result directory (overrides the plan's 'out')")
    sweep.set_defaults(handler=cmd_sweep)

    accept = sub.add_parser("accept", help="Run acceptance suites")
    accept.add_argument("--suite", required=True, help=f"One of: all, {', '.join(SUITES)}")
    accept.add_argument("--workers", type=int)
    accept.set_defaults(handler=cmd_accept)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=settings.log_level.upper(), format="%(levelname)s %(name)s %(message)s")
    try:
        if args.command == "round" and args.t != "auto":
            args.t = int(args.t)
        return args.handler(args) or 0
    except (PackingError, ValidationError, ValueError, OSError) as e:
        print(f"ppack: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
