import os

# Solver defaults
STEP_SIZE = float(os.getenv("ROBUSTPR_STEP_SIZE", "0.8"))
MAX_ITERS = int(os.getenv("ROBUSTPR_MAX_ITERS", "250"))
POWER_ITERS = int(os.getenv("ROBUSTPR_POWER_ITERS", "200"))
SUCCESS_TOL = float(os.getenv("ROBUSTPR_SUCCESS_TOL", "1e-8"))
INIT_METHOD = os.getenv("ROBUSTPR_INIT_METHOD", "null_vector")  # or "thresholded"
NULL_SET_FRACTION = 1.0 / 3.0  # share of smallest observations spanning the near-null space
NULL_SHIFT_MARGIN = 1.1
MEDIAN_ABS_GAUSSIAN = 0.6744897501960817  # median of |N(0, 1)|
MEDIAN_ABS_COMPLEX_GAUSSIAN = 0.8325546111576977  # median of |CN(0, 1)|, sqrt(ln 2)

# Experiment protocol
DEFAULT_REPS = int(os.getenv("ROBUSTPR_REPS", "20"))
FAST_REPS = int(os.getenv("ROBUSTPR_FAST_REPS", "5"))
MAGNITUDE_SCALE = float(os.getenv("ROBUSTPR_MAGNITUDE_SCALE", "0.5"))  # multiples of ||x*||_2
TRACE_MAGNITUDE_SCALE = 0.2  # ||eta*||_inf <= 0.2 ||x*||_2 regime of the convergence plots
ALPHA_HAT_FACTOR = 2.0

# Coded diffraction
CDP_K = int(os.getenv("ROBUSTPR_CDP_K", "12"))
CORRUPT_FRAC = float(os.getenv("ROBUSTPR_CORRUPT_FRAC", "0.05"))
CORRUPT_MAG = float(os.getenv("ROBUSTPR_CORRUPT_MAG", "1.0"))

# Artifacts
OUTPUT_ROOT = os.getenv("ROBUSTPR_OUTPUT_ROOT", "out")
LEDGER_PATH = os.getenv("ROBUSTPR_LEDGER", "robustpr_runs.db")
LOG_FILE = os.getenv("ROBUSTPR_LOG_FILE", "robustpr.log")
LOG_LEVEL = os.getenv("ROBUSTPR_LOG_LEVEL", "INFO")
SEED_ENV = "ROBUSTPR_SEED"

ARTIFACT_VERSION = "1.0.0"
OBSERVATION_FORMAT_VERSION = 1

# Exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3

MESSAGES = {
    "trial_done": "trial finished: rel_error={rel_error:.3e} success={success} iterations={iterations}",
    "trial_failed": "trial failed: {reason}",
    "sweep_cell": "{axis}={value}: success_rate={rate:.2f} median_rel_error={median:.3e}",
    "sweep_done": "sweep finished: {rows} rows written to {path}",
    "trace_done": "traces for {levels} noise levels written to {path}",
    "cdp_channel": "channel {channel}: rel_error={rel_error:.3e} iterations={iterations}",
    "cdp_done": "reconstruction written to {path}",
    "manifest_written": "manifest written to {path}",
    "bad_range": "argument --from/--to: empty range ({start} > {stop})",
    "bad_seed_env": "environment variable {name} must be a decimal integer, got {value!r}",
    "bad_config_line": "config file {path}: line {lineno} is not key=value",
    "unknown_config_key": "config file {path}: unknown key {key!r}",
    "io_error": "I/O error on {path}: {error}",
    "no_runs": "no runs recorded",
    "zero_image": "channel {channel} is identically zero; relative error reported as 0",
}
