"""Seeded synthetic measurement model: ensembles, signals, corruption, noise.

Every sampler is a pure function of (dimensions, spec, seed). Seeds may be
plain integers or ``numpy.random.SeedSequence`` substreams produced by
``substream``; either way they feed a counter-based Philox generator, so
parallel trials never share a stream.
"""
import json
import logging
import struct
from enum import IntEnum
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

import config
from core import sparsity_budget
from exceptions import ArtifactIOError, DimensionError, InvalidParameterError
from models.schemas import (
    CorruptionSpec,
    GroundTruth,
    NoiseSpec,
    ObservationMetadata,
    ObservationSet,
)

logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence]

OBSERVATION_MAGIC = b"RPRO"
_HEADER = struct.Struct("<4sHI")  # magic, format version, metadata length


class StreamPurpose(IntEnum):
    ENSEMBLE = 0
    SIGNAL = 1
    CORRUPTION = 2
    NOISE = 3
    SOLVER = 4
    MASKS = 5


def make_rng(seed: SeedLike) -> np.random.Generator:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


def substream(root_seed: int, *keys: int) -> np.random.SeedSequence:
    """Independent stream keyed by (root_seed, keys...), e.g. (trial, purpose)."""
    return np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(k) for k in keys))


def derive_seed(seed: SeedLike) -> int:
    """Collapse a seed or substream into a non-negative 63-bit integer."""
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return int(seed.generate_state(1, np.uint64)[0] >> np.uint64(1))


def _check_positive(name: str, value: int) -> None:
    if value < 1:
        raise DimensionError(f"{name} must be >= 1, got {value}")


class GaussianEnsemble:
    """m x n matrix of i.i.d. N(0, 1) rows, exposed as a measurement operator."""

    is_complex = False

    def __init__(self, matrix: np.ndarray, seed: int = 0):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2 or min(matrix.shape) < 1:
            raise DimensionError(f"ensemble matrix must be 2-D and non-empty, got {matrix.shape}")
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.seed = seed

    @property
    def num_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_cols(self) -> int:
        return self.matrix.shape[1]

    def _check_x(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.num_cols,):
            raise DimensionError(f"x has shape {x.shape}, expected ({self.num_cols},)")
        return x

    def _check_w(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w)
        if w.shape != (self.num_rows,):
            raise DimensionError(f"weights have shape {w.shape}, expected ({self.num_rows},)")
        return w

    def row_inner(self, i: int, x: np.ndarray) -> float:
        if not 0 <= i < self.num_rows:
            raise DimensionError(f"row index {i} outside [0, {self.num_rows})")
        return float(self.matrix[i] @ self._check_x(x))

    def forward_linear(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ self._check_x(x)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.abs(self.forward_linear(x))

    def adjoint_weighted(self, w: np.ndarray) -> np.ndarray:
        return self.matrix.T @ self._check_w(w) / self.num_rows

    def quadratic_form_apply(self, d: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.adjoint_weighted(self._check_w(d) * self.forward_linear(v))


def sample_signal(n: int, seed: SeedLike) -> np.ndarray:
    _check_positive("n", n)
    return make_rng(seed).standard_normal(n)


def sample_ensemble(n: int, m: int, seed: SeedLike) -> GaussianEnsemble:
    _check_positive("n", n)
    _check_positive("m", m)
    matrix = make_rng(seed).standard_normal((m, n))
    return GaussianEnsemble(matrix, seed=seed if isinstance(seed, int) else derive_seed(seed))


def sample_corruption(m: int, spec: CorruptionSpec, x_norm: float, seed: SeedLike) -> np.ndarray:
    """floor(alpha m) entries at uniformly random positions, each +-scale*||x*||."""
    _check_positive("m", m)
    if not 0 <= spec.fraction < 1:
        raise InvalidParameterError(f"corruption fraction must lie in [0, 1), got {spec.fraction}")

    eta = np.zeros(m)
    count = sparsity_budget(spec.fraction, m)
    if count == 0:
        return eta
    rng = make_rng(seed)
    support = rng.choice(m, size=count, replace=False)
    signs = rng.choice(np.array([-1.0, 1.0]), size=count)
    eta[support] = signs * spec.magnitude_scale * x_norm
    return eta


def sample_noise(m: int, spec: NoiseSpec, seed: Optional[SeedLike] = None) -> np.ndarray:
    """i.i.d. U(0, p) entries; the zero vector when p = 0."""
    _check_positive("m", m)
    if spec.level < 0:
        raise InvalidParameterError(f"noise level must be >= 0, got {spec.level}")
    if spec.level == 0:
        return np.zeros(m)
    rng = make_rng(spec.seed if seed is None else seed)
    return rng.uniform(0.0, spec.level, size=m)


def compose_observations(
    A: GaussianEnsemble, x_star: np.ndarray, eta_star: np.ndarray, eps: np.ndarray
) -> ObservationSet:
    """y = |A x*| + eta* + eps, keeping every component as ground truth."""
    x_star = np.asarray(x_star, dtype=float)
    eta_star = np.asarray(eta_star, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if eta_star.shape != (A.num_rows,) or eps.shape != (A.num_rows,):
        raise DimensionError(
            f"eta* {eta_star.shape} and eps {eps.shape} must have length m={A.num_rows}"
        )
    y_star = A.apply(x_star)
    y = (y_star + eta_star) + eps
    return ObservationSet(
        y=y,
        ground_truth=GroundTruth(x_star=x_star, y_star=y_star, eta_star=eta_star, eps=eps),
    )


def dump_observations(path: Union[str, Path], obs: ObservationSet, meta: ObservationMetadata) -> None:
    """Write the observation container: fixed header, JSON metadata, little-endian float64 arrays."""
    meta = meta.model_copy(update={"has_ground_truth": obs.ground_truth is not None})
    meta_bytes = meta.model_dump_json().encode("utf-8")
    arrays = [obs.y]
    if obs.ground_truth is not None:
        gt = obs.ground_truth
        arrays += [gt.x_star, gt.y_star, gt.eta_star, gt.eps]

    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(OBSERVATION_MAGIC, config.OBSERVATION_FORMAT_VERSION, len(meta_bytes)))
            fh.write(meta_bytes)
            for array in arrays:
                fh.write(np.ascontiguousarray(array, dtype="<f8").tobytes())
    except OSError as e:
        raise ArtifactIOError(path, f"cannot write observations: {e}") from e
    logger.info(f"Observations (n={meta.n}, m={meta.m}) written to {path}")


def load_observations(path: Union[str, Path]) -> Tuple[ObservationSet, ObservationMetadata]:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise ArtifactIOError(path, f"cannot read observations: {e}") from e

    if len(raw) < _HEADER.size:
        raise ArtifactIOError(path, "truncated header")
    magic, version, meta_len = _HEADER.unpack_from(raw, 0)
    if magic != OBSERVATION_MAGIC:
        raise ArtifactIOError(path, "not an observation container")
    if version != config.OBSERVATION_FORMAT_VERSION:
        raise ArtifactIOError(path, f"unsupported container version {version}")

    offset = _HEADER.size
    try:
        meta = ObservationMetadata.model_validate(json.loads(raw[offset:offset + meta_len]))
    except ValueError as e:
        raise ArtifactIOError(path, f"corrupt metadata: {e}") from e
    offset += meta_len

    def take(count: int) -> np.ndarray:
        nonlocal offset
        end = offset + 8 * count
        if end > len(raw):
            raise ArtifactIOError(path, "truncated payload")
        array = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).astype(float)
        offset = end
        return array

    y = take(meta.m)
    ground_truth = None
    if meta.has_ground_truth:
        ground_truth = GroundTruth(
            x_star=take(meta.n), y_star=take(meta.m), eta_star=take(meta.m), eps=take(meta.m)
        )
    return ObservationSet(y=y, ground_truth=ground_truth), meta
