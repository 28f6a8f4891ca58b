"""Command-line front end: trial, sweep, trace, cdp and history subcommands.

Exit status 0 means the run completed (whether or not recovery succeeded),
2 a usage error, 3 an I/O or environment failure.
"""
import argparse
import asyncio
import logging
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional

import config
from exceptions import ArtifactIOError, RobustPRError, UnsupportedFormatError, UsageError
from handlers.cdp_handlers import cmd_cdp
from handlers.history_handlers import cmd_history
from handlers.sweep_handlers import cmd_sweep, cmd_trace
from handlers.trial_handlers import cmd_trial

logger = logging.getLogger(__name__)

REQUIRED_FLAGS = {
    "trial": ["n", "m"],
    "sweep": ["axis", "start", "stop", "step", "n"],
    "cdp": ["image"],
}


def setup_logging(level: str = config.LOG_LEVEL, log_file: Optional[str] = config.LOG_FILE) -> None:
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers,
        force=True,
    )


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def non_negative_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def fraction(text: str) -> float:
    value = float(text)
    if not 0 <= value < 1:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1), got {text}")
    return value


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat key=value file supplying flag defaults")
    common.add_argument("--seed", type=non_negative_int, default=None,
                        help=f"root seed (default: ${config.SEED_ENV} or 0)")
    common.add_argument("--out", type=Path, default=None,
                        help=f"output directory (default: {config.OUTPUT_ROOT}/<timestamp>-<command>)")
    common.add_argument("--threads", type=positive_int, default=os.cpu_count() or 1,
                        help="worker processes for Monte-Carlo trials")
    common.add_argument("--ledger", default=config.LEDGER_PATH, help="run ledger database")
    common.add_argument("--no-ledger", action="store_true", help="do not record the run")
    return common


def _solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha-hat", type=fraction, default=None,
                        help="thresholding fraction (default: 2 * corruption fraction)")
    parser.add_argument("--mu", type=positive_float, default=config.STEP_SIZE, help="step size")
    parser.add_argument("--iters", type=non_negative_int, default=config.MAX_ITERS, help="gradient iterations T")
    parser.add_argument("--power-iters", type=positive_int, default=config.POWER_ITERS,
                        help="power iterations in the initialization")
    parser.add_argument("--init", choices=["null_vector", "thresholded"], default=config.INIT_METHOD,
                        help="initialization: bottom eigenvector of the smallest observations, "
                             "or leading eigenvector of the thresholded y^2 covariance")


def build_parser() -> argparse.ArgumentParser:
    formatter = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="robustpr", description="Robust phase retrieval experiments",
                                     formatter_class=formatter)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    common = _common_parser()

    trial = sub.add_parser("trial", parents=[common], formatter_class=formatter,
                           help="run one seeded Gaussian trial")
    trial.add_argument("--n", type=positive_int, help="signal dimension (required)")
    trial.add_argument("--m", type=positive_int, help="number of measurements (required)")
    trial.add_argument("--alpha", type=fraction, default=0.0, help="corruption fraction")
    trial.add_argument("--magnitude-scale", type=non_negative_float, default=config.MAGNITUDE_SCALE,
                       help="corruption magnitude in units of ||x*||")
    trial.add_argument("--noise-p", type=non_negative_float, default=0.0, help="bounded noise level p of U(0, p)")
    trial.add_argument("--algo", choices=["robust-wf", "rwf"], default="robust-wf")
    trial.add_argument("--save-observations", action="store_true",
                       help="also write the binary observation container")
    _solver_flags(trial)
    trial.set_defaults(func=cmd_trial)

    sweep = sub.add_parser("sweep", parents=[common], formatter_class=formatter,
                           help="Monte-Carlo success-rate sweep over alpha or m")
    sweep.add_argument("--axis", choices=["alpha", "m"], help="swept parameter (required)")
    sweep.add_argument("--from", dest="start", type=float, help="first axis value (required)")
    sweep.add_argument("--to", dest="stop", type=float, help="last axis value, inclusive (required)")
    sweep.add_argument("--step", type=positive_float, help="axis increment (required)")
    sweep.add_argument("--n", type=positive_int, help="signal dimension (required)")
    sweep.add_argument("--m", type=positive_int, default=None, help="measurements (required for --axis alpha)")
    sweep.add_argument("--alpha", type=fraction, default=0.0, help="corruption fraction for --axis m")
    sweep.add_argument("--magnitude-scale", type=non_negative_float, default=config.MAGNITUDE_SCALE,
                       help="corruption magnitude in units of ||x*||")
    sweep.add_argument("--noise-p", type=non_negative_float, default=0.0, help="bounded noise level p")
    sweep.add_argument("--reps", type=positive_int, default=None,
                       help=f"trials per cell (default: {config.DEFAULT_REPS}, {config.FAST_REPS} with --fast)")
    sweep.add_argument("--fast", action="store_true", help="use the reduced replication count")
    sweep.add_argument("--algo", choices=["robust-wf", "rwf", "both"], default="robust-wf")
    _solver_flags(sweep)
    sweep.set_defaults(func=cmd_sweep)

    trace = sub.add_parser("trace", parents=[common], formatter_class=formatter,
                           help="relative error per iteration across noise levels")
    trace.add_argument("--n", type=positive_int, default=200)
    trace.add_argument("--m", type=positive_int, default=2000)
    trace.add_argument("--alpha", type=fraction, default=0.05)
    trace.add_argument("--magnitude-scale", type=non_negative_float, default=config.TRACE_MAGNITUDE_SCALE)
    trace.add_argument("--noise-levels", default="0.5,1.0,2.0", help="comma-separated noise levels p")
    trace.add_argument("--algo", choices=["robust-wf", "rwf"], default="robust-wf")
    _solver_flags(trace)
    trace.set_defaults(func=cmd_trace)

    cdp = sub.add_parser("cdp", parents=[common], formatter_class=formatter,
                         help="recover an image from corrupted coded diffraction patterns")
    cdp.add_argument("--image", type=Path, help="PNG/PPM/PGM input image (required)")
    cdp.add_argument("--K", type=positive_int, default=config.CDP_K, help="number of masks")
    cdp.add_argument("--corrupt-frac", type=fraction, default=config.CORRUPT_FRAC,
                     help="fraction of corrupted measurements")
    cdp.add_argument("--corrupt-mag", type=non_negative_float, default=config.CORRUPT_MAG,
                     help="maximum corruption magnitude in units of ||x*||")
    _solver_flags(cdp)
    cdp.set_defaults(func=cmd_cdp)

    history = sub.add_parser("history", parents=[common], formatter_class=formatter,
                             help="list runs recorded in the ledger")
    history.add_argument("--since", default=None, help="only runs started at or after this date")
    history.add_argument("--command", default=None, choices=["trial", "sweep", "trace", "cdp"])
    history.add_argument("--limit", type=positive_int, default=100)
    history.add_argument("--cells", action="store_true", help="print the recorded cells of sweep runs")
    history.set_defaults(func=cmd_history)

    return parser


def read_config_file(path: Path) -> Dict[str, str]:
    """Flat key=value lines; blank lines and # comments are skipped."""
    try:
        text = path.read_text()
    except OSError as e:
        raise ArtifactIOError(path, f"cannot read config file: {e}") from e

    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(config.MESSAGES["bad_config_line"].format(path=path, lineno=lineno))
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _apply_config_file(sub: argparse.ArgumentParser, path: Path) -> None:
    actions = {action.dest: action for action in sub._actions}
    defaults = {}
    for key, value in read_config_file(path).items():
        # --from/--to are stored as start/stop
        key = {"from": "start", "to": "stop"}.get(key, key)
        action = actions.get(key)
        if action is None or key in ("help", "config"):
            raise UsageError(config.MESSAGES["unknown_config_key"].format(path=path, key=key))
        if action.nargs == 0:
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            # string defaults go through the action's type conversion
            defaults[key] = value
    sub.set_defaults(**defaults)


def resolve_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    raw = os.environ.get(config.SEED_ENV)
    if raw is None:
        return 0
    if not raw.strip().isdigit():
        raise UsageError(config.MESSAGES["bad_seed_env"].format(name=config.SEED_ENV, value=raw))
    return int(raw)


def parse_args(argv: List[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        sub = _subparser(parser, args.subcommand)
        _apply_config_file(sub, args.config)
        args = parser.parse_args(argv)

    sub = _subparser(parser, args.subcommand)
    for dest in REQUIRED_FLAGS.get(args.subcommand, []):
        if getattr(args, dest) is None:
            flag = {"start": "from", "stop": "to"}.get(dest, dest)
            sub.error(f"the following arguments are required: --{flag}")
    args.seed = resolve_seed(args)
    return args


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        logger.info(f"Running {args.subcommand} with seed {args.seed}")
        return asyncio.run(args.func(args, argv))
    except SystemExit as e:
        # argparse reports usage errors (and --help) this way
        return e.code if isinstance(e.code, int) else config.EXIT_USAGE
    except UnsupportedFormatError as e:
        logger.error(f"Unsupported input: {e}")
        print(f"error: {e}", file=sys.stderr)
        return config.EXIT_USAGE
    except (ArtifactIOError, OSError) as e:
        path = getattr(e, "path", None) or getattr(e, "filename", "")
        logger.error(f"I/O failure on {path}: {e}")
        print(config.MESSAGES["io_error"].format(path=path, error=e), file=sys.stderr)
        return config.EXIT_IO
    except (UsageError, RobustPRError, ValueError) as e:
        logger.error(f"Usage error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return config.EXIT_USAGE


def run() -> None:
    setup_logging()
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        sys.exit(130)


if __name__ == "__main__":
    run()
