import argparse
import logging
from typing import List

import config
from bench import generate_instance, resolve_alpha_hat, run_trial, trial_seed_for
from handlers.common import RunSession, algorithm_name, resolved_config, solver_config
from measure import dump_observations
from models.schemas import ObservationMetadata, TraceSet, TrialSpec
from utils.artifacts import emit_trace_csv

logger = logging.getLogger(__name__)


async def cmd_trial(args: argparse.Namespace, argv: List[str]) -> int:
    """One seeded trial: trace.csv + manifest, optionally the observation container."""
    algorithm = algorithm_name(args.algo)
    alpha_hat = resolve_alpha_hat(args.alpha, alpha_hat=args.alpha_hat) if algorithm == "robust_wf" else 0.0
    spec = TrialSpec(
        n=args.n,
        m=args.m,
        alpha=args.alpha,
        magnitude_scale=args.magnitude_scale,
        noise_p=args.noise_p,
        algorithm=algorithm,
        cfg=solver_config(args, alpha_hat),
        trial_seed=trial_seed_for(args.seed, 0),
        record_trace=True,
    )

    resolved = resolved_config(args, alpha_hat=alpha_hat)
    async with RunSession("trial", argv, args, args.seed, resolved) as session:
        if args.save_observations:
            _, obs = generate_instance(spec)
            meta = ObservationMetadata(
                n=spec.n, m=spec.m, seed=args.seed, alpha=spec.alpha,
                magnitude_scale=spec.magnitude_scale, p=spec.noise_p,
            )
            path = session.path("observations.bin")
            dump_observations(path, obs, meta)
            session.add_output(path)

        outcome = run_trial(spec)
        if outcome.failure_reason:
            await session.log("trial_failed", outcome.failure_reason)
            print(config.MESSAGES["trial_failed"].format(reason=outcome.failure_reason))

        traces = TraceSet(algorithm=algorithm, traces={spec.noise_p: outcome.trace or []})
        session.add_output(await emit_trace_csv(traces, session.path("trace.csv")))

        print(config.MESSAGES["trial_done"].format(
            rel_error=outcome.final_rel_error, success=outcome.success, iterations=outcome.iterations,
        ))
    print(config.MESSAGES["manifest_written"].format(path=session.path("manifest.json")))
    return config.EXIT_OK
