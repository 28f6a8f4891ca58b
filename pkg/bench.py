"""Monte-Carlo harness: single trials, alpha and m sweeps, convergence traces.

Trial k of a sweep always draws its ensemble, signal, corruption and noise
from substreams of the same trial seed, so comparisons across alpha, m,
noise level and algorithm are paired. Results are collected by trial index,
which keeps the output independent of the number of workers.
"""
import asyncio
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import config
from exceptions import InvalidParameterError, RobustPRError
from measure import (
    GaussianEnsemble,
    StreamPurpose,
    compose_observations,
    derive_seed,
    sample_corruption,
    sample_ensemble,
    sample_noise,
    sample_signal,
    substream,
)
from models.schemas import (
    CorruptionSpec,
    NoiseSpec,
    ObservationSet,
    SweepCell,
    SweepTable,
    TraceSet,
    TrialOutcome,
    TrialSpec,
)
from solver import rwf_solve, solve
from utils.artifacts import emit_csv, emit_trace_csv  # noqa: F401  (re-exported)

logger = logging.getLogger(__name__)

ALGORITHMS = ("robust_wf", "rwf")


def trial_seed_for(root_seed: int, trial_index: int) -> int:
    return derive_seed(substream(root_seed, trial_index))


def generate_instance(spec: TrialSpec) -> Tuple[GaussianEnsemble, ObservationSet]:
    """Ensemble and observations of the instance keyed by spec.trial_seed."""
    seed = spec.trial_seed
    A = sample_ensemble(spec.n, spec.m, substream(seed, StreamPurpose.ENSEMBLE))
    x_star = sample_signal(spec.n, substream(seed, StreamPurpose.SIGNAL))
    eta_star = sample_corruption(
        spec.m,
        CorruptionSpec(fraction=spec.alpha, magnitude_scale=spec.magnitude_scale),
        float(np.linalg.norm(x_star)),
        substream(seed, StreamPurpose.CORRUPTION),
    )
    eps = sample_noise(spec.m, NoiseSpec(level=spec.noise_p),
                       seed=substream(seed, StreamPurpose.NOISE))
    return A, compose_observations(A, x_star, eta_star, eps)


def run_trial(spec: TrialSpec) -> TrialOutcome:
    """Generate one synthetic instance from spec.trial_seed and solve it."""
    started = time.perf_counter()
    seed = spec.trial_seed
    try:
        A, obs = generate_instance(spec)
        x_star = obs.ground_truth.x_star
        x_norm = float(np.linalg.norm(x_star))

        cfg = spec.cfg.model_copy(update={"seed": derive_seed(substream(seed, StreamPurpose.SOLVER))})
        solver_fn = solve if spec.algorithm == "robust_wf" else rwf_solve
        with np.errstate(over="raise", invalid="raise"):
            result = solver_fn(obs.y, A, cfg, ground_truth=x_star)
    except (RobustPRError, FloatingPointError) as e:
        logger.warning(f"Trial seed={seed} ({spec.algorithm}, alpha={spec.alpha}) failed: {e}")
        return TrialOutcome(
            final_rel_error=float("inf"),
            final_dist=float("inf"),
            success=False,
            iterations=0,
            wall_time_ms=(time.perf_counter() - started) * 1000.0,
            failure_reason=f"{type(e).__name__}: {e}",
        )

    final_dist = result.history[-1].dist_to_truth
    trace = None
    if spec.record_trace:
        trace = [record.dist_to_truth / x_norm for record in result.history]
    return TrialOutcome(
        final_rel_error=final_dist / x_norm,
        final_dist=final_dist,
        success=final_dist <= spec.cfg.success_tol,
        iterations=result.iterations_run,
        trace=trace,
        wall_time_ms=(time.perf_counter() - started) * 1000.0,
    )


class TrialPool:
    """Runs trial specs on a process pool and returns outcomes in spec order."""

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))

    async def run(self, specs: Sequence[TrialSpec]) -> List[TrialOutcome]:
        if self.workers == 1 or len(specs) <= 1:
            outcomes = []
            for spec in specs:
                outcomes.append(run_trial(spec))
                await asyncio.sleep(0)
            return outcomes

        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=self.workers) as executor:
            futures = [loop.run_in_executor(executor, run_trial, spec) for spec in specs]
            return list(await asyncio.gather(*futures))


def _lower_median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    return float(ordered[(len(ordered) - 1) // 2])


def summarize(axis_value: float, spec: TrialSpec, outcomes: Sequence[TrialOutcome]) -> SweepCell:
    errors = [outcome.final_rel_error for outcome in outcomes]
    successes = sum(1 for outcome in outcomes if outcome.success)
    return SweepCell(
        axis_value=axis_value,
        algorithm=spec.algorithm,
        n=spec.n,
        m=spec.m,
        alpha=spec.alpha,
        alpha_hat=spec.cfg.alpha_hat if spec.algorithm == "robust_wf" else 0.0,
        noise_p=spec.noise_p,
        reps=len(outcomes),
        success_rate=successes / len(outcomes),
        mean_rel_error=float(np.mean(errors)),
        median_rel_error=_lower_median(errors),
    )


def resolve_alpha_hat(alpha: float, alpha_hat_factor: float = config.ALPHA_HAT_FACTOR,
                      alpha_hat: Optional[float] = None) -> float:
    """Explicit alpha_hat if given, else factor * alpha, kept strictly below 1."""
    value = alpha_hat if alpha_hat is not None else alpha_hat_factor * alpha
    return float(min(value, np.nextafter(1.0, 0.0)))


async def _run_cells(
    axis: str,
    cell_specs: List[tuple],
    reps: int,
    root_seed: int,
    pool: TrialPool,
) -> SweepTable:
    specs = []
    for _, spec in cell_specs:
        for k in range(reps):
            specs.append(spec.model_copy(update={"trial_seed": trial_seed_for(root_seed, k)}))

    outcomes = await pool.run(specs)

    table = SweepTable(axis=axis)
    for index, (value, spec) in enumerate(cell_specs):
        cell = summarize(value, spec, outcomes[index * reps:(index + 1) * reps])
        logger.info(f"{axis}={value} {spec.algorithm}: success_rate={cell.success_rate:.2f}, "
                    f"median_rel_error={cell.median_rel_error:.3e}")
        table.cells.append(cell)
    return table


def _check_reps(reps: int) -> None:
    if reps < 1:
        raise InvalidParameterError(f"reps must be >= 1, got {reps}")


async def sweep_alpha(
    alphas: Sequence[float],
    reps: int,
    base: TrialSpec,
    root_seed: int = 0,
    workers: int = 1,
    algorithms: Optional[Sequence[str]] = None,
    alpha_hat_factor: float = config.ALPHA_HAT_FACTOR,
    alpha_hat: Optional[float] = None,
) -> SweepTable:
    """Success rate and relative error per corruption fraction (alpha_hat = 2 alpha by default)."""
    _check_reps(reps)
    cell_specs = []
    for alpha in alphas:
        for algorithm in algorithms or (base.algorithm,):
            cfg = base.cfg.model_copy(update={"alpha_hat": resolve_alpha_hat(alpha, alpha_hat_factor, alpha_hat)})
            cell_specs.append((alpha, base.model_copy(update={
                "alpha": alpha, "algorithm": algorithm, "cfg": cfg,
            })))
    return await _run_cells("alpha", cell_specs, reps, root_seed, TrialPool(workers))


async def sweep_m(
    ms: Sequence[int],
    reps: int,
    base: TrialSpec,
    root_seed: int = 0,
    workers: int = 1,
    algorithms: Optional[Sequence[str]] = None,
    alpha_hat_factor: float = config.ALPHA_HAT_FACTOR,
    alpha_hat: Optional[float] = None,
) -> SweepTable:
    """Success rate per sample size m at fixed n and alpha."""
    _check_reps(reps)
    cfg = base.cfg.model_copy(update={"alpha_hat": resolve_alpha_hat(base.alpha, alpha_hat_factor, alpha_hat)})
    cell_specs = []
    for m in ms:
        for algorithm in algorithms or (base.algorithm,):
            cell_specs.append((m, base.model_copy(update={"m": int(m), "algorithm": algorithm, "cfg": cfg})))
    return await _run_cells("m", cell_specs, reps, root_seed, TrialPool(workers))


async def convergence_trace(
    spec: TrialSpec,
    noise_levels: Sequence[float],
    workers: int = 1,
) -> TraceSet:
    """Relative error per iteration for each noise level, on one paired instance."""
    specs = [
        spec.model_copy(update={"noise_p": float(p), "record_trace": True}) for p in noise_levels
    ]
    outcomes = await TrialPool(workers).run(specs)

    traces: Dict[float, List[float]] = {}
    for p, outcome in zip(noise_levels, outcomes):
        if outcome.trace is None:
            logger.warning(f"No trace for noise level {p}: {outcome.failure_reason}")
        traces[float(p)] = outcome.trace or []
    return TraceSet(algorithm=spec.algorithm, traces=traces)
