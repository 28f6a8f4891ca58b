"""Pure primitives shared by every solver: thresholding, sign, distances, loss.

Nothing here mutates its inputs or holds state, so every function is safe to
call from any number of workers.
"""
import logging
from typing import Callable, TYPE_CHECKING

import numpy as np

from exceptions import DimensionError, InvalidBudgetError

if TYPE_CHECKING:
    from solver import MeasurementOperator

logger = logging.getLogger(__name__)

# Guard for floor(fraction * m) against products such as 0.29 * 100 = 28.999999999999996.
FLOOR_GUARD = 1e-9


def sparsity_budget(fraction: float, m: int) -> int:
    """Number of entries kept by H for a fraction of m (rounded down)."""
    return int(np.floor(fraction * m + FLOOR_GUARD))


def hard_threshold(w: np.ndarray, s: int) -> np.ndarray:
    """Keep the s largest-magnitude entries of w, zero the rest.

    Ties at the threshold magnitude are broken towards lower indices so the
    result has exactly s retained positions.
    """
    w = np.asarray(w)
    if w.ndim != 1:
        raise DimensionError(f"hard_threshold expects a vector, got shape {w.shape}")
    if s < 0 or s > w.shape[0]:
        raise InvalidBudgetError(f"sparsity budget {s} outside [0, {w.shape[0]}]")

    out = np.zeros_like(w)
    if s == 0:
        return out
    keep = np.argsort(-np.abs(w), kind="stable")[:s]
    out[keep] = w[keep]
    return out


def sign(t: float) -> float:
    """t/|t|, with sign(0) = 0."""
    if t == 0:
        return 0.0
    return float(t / abs(t))


def phase(z: np.ndarray) -> np.ndarray:
    """Elementwise z/|z| for real or complex arrays; 0 where z == 0."""
    z = np.asarray(z)
    magnitude = np.abs(z)
    out = np.zeros_like(z)
    np.divide(z, magnitude, out=out, where=magnitude != 0)
    return out


def _check_same_length(x: np.ndarray, x_star: np.ndarray) -> None:
    if x.shape != x_star.shape:
        raise DimensionError(f"length mismatch: {x.shape} vs {x_star.shape}")


def dist(x: np.ndarray, x_star: np.ndarray) -> float:
    """min(||x - x*||, ||x + x*||): distance up to the unrecoverable global sign."""
    x = np.asarray(x)
    x_star = np.asarray(x_star)
    _check_same_length(x, x_star)
    return float(min(np.linalg.norm(x - x_star), np.linalg.norm(x + x_star)))


def dist_complex(x: np.ndarray, x_star: np.ndarray) -> float:
    """min over phi of ||exp(j phi) x - x*||, measured after rotating x onto x*."""
    x = np.asarray(x)
    x_star = np.asarray(x_star)
    _check_same_length(x, x_star)
    return float(np.linalg.norm(align_phase(x, x_star) - x_star))


def align_phase(x: np.ndarray, x_star: np.ndarray) -> np.ndarray:
    """Rotate x by the global phase that minimizes its distance to x*."""
    inner = np.vdot(x, x_star)
    if inner == 0:
        return np.asarray(x).copy()
    return x * (inner / np.abs(inner))


def loss(x: np.ndarray, eta: np.ndarray, y: np.ndarray, A: "MeasurementOperator") -> float:
    """(1/2m) sum_i (y_i - |a_i^T x| - eta_i)^2."""
    y = np.asarray(y)
    eta = np.asarray(eta)
    x = np.asarray(x)
    if y.shape != (A.num_rows,) or eta.shape != (A.num_rows,):
        raise DimensionError(
            f"y {y.shape} and eta {eta.shape} must have length m={A.num_rows}"
        )
    if x.shape != (A.num_cols,):
        raise DimensionError(f"x {x.shape} must have length n={A.num_cols}")
    residual = y - A.apply(x) - eta
    return float(residual @ residual / (2.0 * A.num_rows))


def finite_difference_gradient(
    func: Callable[[np.ndarray], float], x0: np.ndarray, h: float = 1e-6
) -> np.ndarray:
    """Central-difference gradient of a real function.

    For complex x0 the real and imaginary parts are perturbed separately and
    combined as d/dRe + j d/dIm.
    """
    x0 = np.asarray(x0)
    grad = np.zeros_like(x0)
    for j in range(x0.shape[0]):
        x = x0.copy()
        x[j] = x0[j] + h
        fplus = func(x)
        x[j] = x0[j] - h
        fminus = func(x)
        grad[j] = (fplus - fminus) / (2 * h)

        if np.iscomplexobj(x0):
            x[j] = x0[j] + 1j * h
            fplus = func(x)
            x[j] = x0[j] - 1j * h
            fminus = func(x)
            grad[j] += 1j * (fplus - fminus) / (2 * h)
    return grad
