"""Robust Wirtinger Flow over any measurement operator.

Stage I thresholds the largest observations away, estimates the signal norm
and finds a direction by power iteration: by default the bottom eigenvector of
the covariance of the rows behind the smallest observations, or the leading
eigenvector of the y^2-weighted covariance. Stage II alternates a
hard-thresholded corruption estimate with a gradient step on the amplitude
loss. RWF is the alpha_hat = 0 special case.

The same code runs real Gaussian ensembles and complex coded-diffraction
operators: ``phase`` reduces to the real sign and ``dist_complex`` replaces
``dist`` whenever the operator reports ``is_complex``.
"""
import logging
from typing import Callable, Optional, Protocol, runtime_checkable

import numpy as np

import config
from core import dist, dist_complex, hard_threshold, loss, phase, sparsity_budget
from exceptions import DimensionError, DivergenceError, InvalidBudgetError, InvalidParameterError
from measure import make_rng, SeedLike
from models.schemas import (
    InitializationResult,
    IterationRecord,
    PowerIterationResult,
    SolverConfig,
    SolverResult,
    SolverState,
)

logger = logging.getLogger(__name__)

LinearMap = Callable[[np.ndarray], np.ndarray]


@runtime_checkable
class MeasurementOperator(Protocol):
    """Matrix-free access to the rows a_i of the measurement model."""

    is_complex: bool

    @property
    def num_rows(self) -> int: ...

    @property
    def num_cols(self) -> int: ...

    def row_inner(self, i: int, x: np.ndarray): ...

    def forward_linear(self, x: np.ndarray) -> np.ndarray: ...

    def apply(self, x: np.ndarray) -> np.ndarray: ...

    def adjoint_weighted(self, w: np.ndarray) -> np.ndarray: ...

    def quadratic_form_apply(self, d: np.ndarray, v: np.ndarray) -> np.ndarray: ...


def _distance_for(A: MeasurementOperator) -> Callable[[np.ndarray, np.ndarray], float]:
    return dist_complex if A.is_complex else dist


def _check_observations(y: np.ndarray, A: MeasurementOperator) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (A.num_rows,):
        raise DimensionError(f"y has shape {y.shape}, expected ({A.num_rows},)")
    return y


def estimate_magnitude(y_hat: np.ndarray) -> float:
    """Root-mean-square of the thresholded observations (lambda_0)."""
    y_hat = np.asarray(y_hat, dtype=float)
    if y_hat.size == 0:
        raise DimensionError("cannot estimate magnitude from an empty observation vector")
    return float(np.sqrt(np.mean(y_hat ** 2)))


def build_spectral_operator(A: MeasurementOperator, y_hat: np.ndarray) -> LinearMap:
    """v -> (1/m) sum_i y_hat_i^2 a_i a_i^T v, never materialized."""
    y_hat = _check_observations(y_hat, A)
    weights = y_hat ** 2

    def spectral_map(v: np.ndarray) -> np.ndarray:
        return A.quadratic_form_apply(weights, v)

    return spectral_map


def power_iteration(
    op: LinearMap, n: int, iters: int, seed: SeedLike, complex_start: bool = False
) -> PowerIterationResult:
    """Leading eigenvector of a PSD map from a seeded random unit start."""
    if iters < 1:
        raise InvalidParameterError(f"power iteration needs iters >= 1, got {iters}")

    rng = make_rng(seed)
    start = rng.standard_normal(n)
    if complex_start:
        start = start + 1j * rng.standard_normal(n)
    start = start / np.linalg.norm(start)

    v = start
    rayleigh = []
    for _ in range(iters):
        w = op(v)
        w_norm = np.linalg.norm(w)
        if w_norm == 0 or not np.isfinite(w_norm):
            logger.warning("Power iteration hit the zero map; returning the random start")
            return PowerIterationResult(vector=start, eigenvalue=0.0, degenerate=True,
                                        rayleigh_history=rayleigh)
        rayleigh.append(float(np.vdot(v, w).real))
        v = w / w_norm

    eigenvalue = float(np.vdot(v, op(v)).real)
    rayleigh.append(eigenvalue)
    return PowerIterationResult(vector=v, eigenvalue=eigenvalue, rayleigh_history=rayleigh)


def smallest_eigenvector(
    op: LinearMap, n: int, iters: int, seed: SeedLike, complex_start: bool = False
) -> PowerIterationResult:
    """Bottom eigenvector of a PSD map: power iteration on shift*I - op.

    The shift is a margin above the top eigenvalue found by a first power
    iteration, so the flipped map stays PSD.
    """
    top = power_iteration(op, n, iters, seed, complex_start)
    if top.degenerate:
        return top
    shift = config.NULL_SHIFT_MARGIN * top.eigenvalue

    def flipped_map(v: np.ndarray) -> np.ndarray:
        return shift * v - op(v)

    flipped = power_iteration(flipped_map, n, iters, seed, complex_start)
    return PowerIterationResult(
        vector=flipped.vector,
        eigenvalue=shift - flipped.eigenvalue,
        degenerate=flipped.degenerate,
        rayleigh_history=[shift - r for r in flipped.rayleigh_history],
    )


def build_small_set_operator(A: MeasurementOperator, y: np.ndarray, fraction: float) -> LinearMap:
    """v -> (1/|S|) sum_{i in S} a_i a_i^T v over the |S| smallest observations.

    |S| is fraction * m, raised to 2n when m allows it.
    """
    y = _check_observations(y, A)
    m = A.num_rows
    size = min(m, max(int(fraction * m), 2 * A.num_cols))
    weights = np.zeros(m)
    weights[np.argsort(y, kind="stable")[:size]] = m / size

    def small_set_map(v: np.ndarray) -> np.ndarray:
        return A.quadratic_form_apply(weights, v)

    return small_set_map


def estimate_magnitude_median(y: np.ndarray, is_complex: bool = False) -> float:
    """||x|| from the median observation."""
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise DimensionError("cannot estimate magnitude from an empty observation vector")
    constant = config.MEDIAN_ABS_COMPLEX_GAUSSIAN if is_complex else config.MEDIAN_ABS_GAUSSIAN
    return max(float(np.median(y)), 0.0) / constant


def _thresholded_init(y: np.ndarray, A: MeasurementOperator, cfg: SolverConfig,
                      eta0: np.ndarray) -> InitializationResult:
    y_hat = y - eta0
    lambda0 = estimate_magnitude(y_hat)
    spectral = power_iteration(
        build_spectral_operator(A, y_hat),
        A.num_cols,
        cfg.power_iters,
        cfg.seed,
        complex_start=A.is_complex,
    )
    return InitializationResult(x0=lambda0 * spectral.vector, lambda0=lambda0, eta0=eta0,
                                degenerate=spectral.degenerate)


def _null_vector_init(y: np.ndarray, A: MeasurementOperator, cfg: SolverConfig,
                      eta0: np.ndarray) -> InitializationResult:
    zeros = np.zeros(A.num_cols, dtype=complex if A.is_complex else float)
    if np.count_nonzero(eta0) >= A.num_rows:
        return InitializationResult(x0=zeros, lambda0=0.0, eta0=eta0, degenerate=True)

    lambda0 = estimate_magnitude_median(y, A.is_complex)
    bottom = smallest_eigenvector(
        build_small_set_operator(A, y, config.NULL_SET_FRACTION),
        A.num_cols,
        cfg.power_iters,
        cfg.seed,
        complex_start=A.is_complex,
    )
    if bottom.degenerate or lambda0 == 0.0:
        return InitializationResult(x0=zeros, lambda0=0.0, eta0=eta0, degenerate=True)
    return InitializationResult(x0=lambda0 * bottom.vector, lambda0=lambda0, eta0=eta0)


def init_stage(y: np.ndarray, A: MeasurementOperator, cfg: SolverConfig) -> InitializationResult:
    """Stage I.

    Both methods start from eta0 = H(y). ``thresholded`` takes lambda0 =
    rms(y - eta0) and the leading eigenvector of the y_hat^2-weighted
    covariance. ``null_vector`` takes lambda0 from the median of y and the
    bottom eigenvector of the covariance of the rows behind the smallest
    observations.
    """
    y = _check_observations(y, A)
    budget = sparsity_budget(cfg.alpha_hat, A.num_rows)
    eta0 = hard_threshold(y, budget)
    if cfg.init_method == "thresholded":
        init = _thresholded_init(y, A, cfg, eta0)
    else:
        init = _null_vector_init(y, A, cfg, eta0)
    logger.debug(f"Initialization ({cfg.init_method}): lambda0={init.lambda0:.6g}, "
                 f"budget={budget}, degenerate={init.degenerate}")
    return init


def eta_update(y: np.ndarray, A: MeasurementOperator, x: np.ndarray, budget: int) -> np.ndarray:
    """eta = H_budget(y - |A x|)."""
    y = _check_observations(y, A)
    return hard_threshold(y - A.apply(x), budget)


def grad_x(y: np.ndarray, A: MeasurementOperator, x: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """(1/m) sum_i (|a_i^T x| + eta_i - y_i) sgn(a_i^T x) a_i."""
    y = _check_observations(y, A)
    eta = np.asarray(eta, dtype=float)
    if eta.shape != y.shape:
        raise DimensionError(f"eta has shape {eta.shape}, expected {y.shape}")
    z = A.forward_linear(x)
    weights = (np.abs(z) + eta - y) * phase(z)
    return A.adjoint_weighted(weights)


def _record(t: int, x: np.ndarray, eta: np.ndarray, y: np.ndarray, A: MeasurementOperator,
            x_star: Optional[np.ndarray]) -> IterationRecord:
    return IterationRecord(
        t=t,
        loss=loss(x, eta, y, A),
        dist_to_truth=_distance_for(A)(x, x_star) if x_star is not None else None,
    )


def check_eta_budget(eta: np.ndarray, budget: int) -> None:
    """Stage II keeps ||eta||_0 <= floor(alpha_hat m)."""
    support = int(np.count_nonzero(eta))
    if support > budget:
        raise InvalidBudgetError(f"eta has {support} nonzeros, budget is {budget}")


def gradient_step(
    state: SolverState,
    y: np.ndarray,
    A: MeasurementOperator,
    cfg: SolverConfig,
    ground_truth: Optional[np.ndarray] = None,
) -> SolverState:
    """One Stage II iteration: refresh eta first, then step x."""
    budget = sparsity_budget(cfg.alpha_hat, A.num_rows)
    eta = eta_update(y, A, state.x, budget)
    check_eta_budget(eta, budget)
    x = state.x - cfg.step_size * grad_x(y, A, state.x, eta)

    t = state.t + 1
    if not np.all(np.isfinite(x)):
        raise DivergenceError(t)
    return SolverState(
        x=x,
        eta=eta,
        t=t,
        history=[*state.history, _record(t, x, eta, y, A, ground_truth)],
    )


def solve(
    y: np.ndarray,
    A: MeasurementOperator,
    cfg: SolverConfig,
    ground_truth: Optional[np.ndarray] = None,
    initial_x: Optional[np.ndarray] = None,
) -> SolverResult:
    """Run Stage I (unless initial_x is given) and cfg.max_iters Stage II steps."""
    y = _check_observations(y, A)
    init = init_stage(y, A, cfg)
    x0 = init.x0
    lambda0 = init.lambda0
    if initial_x is not None:
        x0 = np.array(initial_x, dtype=complex if A.is_complex else float)
        if x0.shape != (A.num_cols,):
            raise DimensionError(f"initial_x has shape {x0.shape}, expected ({A.num_cols},)")
        lambda0 = float(np.linalg.norm(x0))
    if init.degenerate:
        logger.warning("Degenerate spectrum in initialization; starting from the zero vector")

    state = SolverState(
        x=x0, eta=init.eta0, t=0,
        history=[_record(0, x0, init.eta0, y, A, ground_truth)],
    )
    for _ in range(cfg.max_iters):
        state = gradient_step(state, y, A, cfg, ground_truth)

    final = state.history[-1]
    converged = final.dist_to_truth is not None and final.dist_to_truth <= cfg.success_tol
    logger.debug(f"Solve finished after {state.t} iterations: loss={final.loss:.3e}, "
                 f"dist={final.dist_to_truth}")
    return SolverResult(
        x_hat=state.x,
        eta_hat=state.eta,
        iterations_run=state.t,
        converged=converged,
        history=state.history,
        lambda0=lambda0,
        x0=x0,
        degenerate_spectrum=init.degenerate,
        final_loss=final.loss,
    )


def rwf_solve(
    y: np.ndarray,
    A: MeasurementOperator,
    cfg: SolverConfig,
    ground_truth: Optional[np.ndarray] = None,
    initial_x: Optional[np.ndarray] = None,
) -> SolverResult:
    """Reshaped Wirtinger Flow: solve without any corruption handling."""
    return solve(y, A, cfg.model_copy(update={"alpha_hat": 0.0}), ground_truth, initial_x)
