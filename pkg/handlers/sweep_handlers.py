import argparse
import logging
import math
from typing import List

import config
from bench import ALGORITHMS, convergence_trace, resolve_alpha_hat, sweep_alpha, sweep_m, trial_seed_for
from exceptions import UsageError
from handlers.common import RunSession, algorithm_name, resolved_config, solver_config
from models.schemas import TrialSpec
from utils.artifacts import emit_csv, emit_gnuplot_script, emit_trace_csv

logger = logging.getLogger(__name__)


def axis_values(start: float, stop: float, step: float, axis: str) -> List[float]:
    """Inclusive grid start, start + step, ..., <= stop; rounded so 0.01 steps stay exact."""
    if step <= 0:
        raise UsageError(f"argument --step: must be > 0, got {step}")
    if start > stop:
        raise UsageError(config.MESSAGES["bad_range"].format(start=start, stop=stop))
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    values = [round(start + k * step, 12) for k in range(count)]
    if axis == "m":
        values = [int(round(v)) for v in values]
        if values[0] < 1:
            raise UsageError(f"argument --from: m must be >= 1, got {values[0]}")
    elif values[-1] >= 1:
        raise UsageError(f"argument --to: alpha must be < 1, got {values[-1]}")
    return values


def _algorithms(flag: str) -> List[str]:
    return list(ALGORITHMS) if flag == "both" else [algorithm_name(flag)]


async def cmd_sweep(args: argparse.Namespace, argv: List[str]) -> int:
    """Alpha or m sweep written as sweep.csv with a matching gnuplot script."""
    values = axis_values(args.start, args.stop, args.step, args.axis)
    if args.axis == "alpha" and args.m is None:
        raise UsageError("argument --m: required for --axis alpha")
    reps = config.FAST_REPS if args.fast and args.reps is None else (args.reps or config.DEFAULT_REPS)

    base = TrialSpec(
        n=args.n,
        m=args.m if args.m is not None else int(values[0]),
        alpha=args.alpha,
        magnitude_scale=args.magnitude_scale,
        noise_p=args.noise_p,
        cfg=solver_config(args, 0.0),
    )
    algorithms = _algorithms(args.algo)
    resolved = resolved_config(args, reps=reps, axis_values=values)

    async with RunSession("sweep", argv, args, args.seed, resolved, fast_mode=args.fast) as session:
        sweep = sweep_alpha if args.axis == "alpha" else sweep_m
        table = await sweep(
            values, reps, base,
            root_seed=args.seed,
            workers=args.threads,
            algorithms=algorithms,
            alpha_hat=args.alpha_hat,
        )
        for cell in table.cells:
            print(config.MESSAGES["sweep_cell"].format(
                axis=args.axis, value=cell.axis_value, rate=cell.success_rate, median=cell.median_rel_error,
            ))
            if cell.mean_rel_error == float("inf"):
                await session.log("trial_failed", f"{args.axis}={cell.axis_value} {cell.algorithm}")

        csv_path = await emit_csv(table, session.path("sweep.csv"))
        session.add_output(csv_path)
        session.add_output(await emit_gnuplot_script(csv_path, "sweep", session.path("sweep.gp")))
        await session.record_sweep(table)
        print(config.MESSAGES["sweep_done"].format(rows=len(table.cells), path=csv_path))
    return config.EXIT_OK


def parse_noise_levels(text: str) -> List[float]:
    try:
        levels = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise UsageError(f"argument --noise-levels: {e}") from e
    if not levels or any(level < 0 for level in levels):
        raise UsageError(f"argument --noise-levels: expected non-negative levels, got {text!r}")
    return levels


async def cmd_trace(args: argparse.Namespace, argv: List[str]) -> int:
    """Convergence traces of one paired instance over several noise levels."""
    levels = parse_noise_levels(args.noise_levels)
    algorithm = algorithm_name(args.algo)
    alpha_hat = 0.0
    if algorithm == "robust_wf":
        alpha_hat = resolve_alpha_hat(args.alpha, alpha_hat=args.alpha_hat)

    spec = TrialSpec(
        n=args.n,
        m=args.m,
        alpha=args.alpha,
        magnitude_scale=args.magnitude_scale,
        algorithm=algorithm,
        cfg=solver_config(args, alpha_hat),
        trial_seed=trial_seed_for(args.seed, 0),
    )
    resolved = resolved_config(args, alpha_hat=alpha_hat, noise_levels=levels)

    async with RunSession("trace", argv, args, args.seed, resolved) as session:
        traces = await convergence_trace(spec, levels, workers=args.threads)
        for level, trace in traces.traces.items():
            if not trace:
                await session.log("trial_failed", f"noise_p={level}")

        csv_path = await emit_trace_csv(traces, session.path("trace.csv"))
        session.add_output(csv_path)
        session.add_output(await emit_gnuplot_script(csv_path, "trace", session.path("trace.gp")))
        print(config.MESSAGES["trace_done"].format(levels=len(levels), path=csv_path))
    return config.EXIT_OK
