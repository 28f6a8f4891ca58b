from datetime import datetime
from typing import Optional, List, Dict, Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

import config


class SolverConfig(BaseModel):
    step_size: float = Field(default=config.STEP_SIZE, gt=0)  # mu
    max_iters: int = Field(default=config.MAX_ITERS, ge=0)  # T
    power_iters: int = Field(default=config.POWER_ITERS, ge=1)
    alpha_hat: float = Field(default=0.0, ge=0, lt=1)  # thresholding fraction
    success_tol: float = Field(default=config.SUCCESS_TOL, ge=0)
    seed: int = Field(default=0, ge=0)  # power-iteration start
    init_method: Literal["null_vector", "thresholded"] = config.INIT_METHOD


class IterationRecord(BaseModel):
    t: int
    loss: float
    dist_to_truth: Optional[float] = None


class SolverState(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x: np.ndarray
    eta: np.ndarray
    t: int = 0
    history: List[IterationRecord] = Field(default_factory=list)


class PowerIterationResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    vector: np.ndarray
    eigenvalue: float = 0.0
    degenerate: bool = False
    rayleigh_history: List[float] = Field(default_factory=list)


class InitializationResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x0: np.ndarray
    lambda0: float
    eta0: np.ndarray
    degenerate: bool = False


class SolverResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x_hat: np.ndarray
    eta_hat: np.ndarray
    iterations_run: int
    converged: bool = False
    history: List[IterationRecord] = Field(default_factory=list)
    lambda0: float
    x0: np.ndarray
    degenerate_spectrum: bool = False
    final_loss: float = 0.0


class CorruptionSpec(BaseModel):
    fraction: float = Field(default=0.0, ge=0, lt=1)  # alpha
    magnitude_scale: float = Field(default=config.MAGNITUDE_SCALE, ge=0)


class NoiseSpec(BaseModel):
    level: float = Field(default=0.0, ge=0)  # p of U(0, p)
    seed: int = 0


class GroundTruth(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    x_star: np.ndarray
    y_star: np.ndarray
    eta_star: np.ndarray
    eps: np.ndarray


class ObservationSet(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    y: np.ndarray
    ground_truth: Optional[GroundTruth] = None


class ObservationMetadata(BaseModel):
    """Header of the binary observation container."""
    version: int = config.OBSERVATION_FORMAT_VERSION
    n: int
    m: int
    seed: int = 0
    alpha: float = 0.0
    magnitude_scale: float = 0.0
    p: float = 0.0
    has_ground_truth: bool = False


class CdpMaskSet(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int = Field(ge=1)
    K: int = Field(ge=1)
    masks: np.ndarray  # shape (K, n), entries in {1, -1, j, -j}
    seed: int = 0

    @property
    def m(self) -> int:
        return self.n * self.K


class ImagePlane(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    width: int = Field(ge=1)
    height: int = Field(ge=1)
    channel: Literal["R", "G", "B", "gray"]
    pixels: np.ndarray  # (height, width), intensities in [0, 1]


class ChannelRecovery(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    channel: str
    n: int
    K: int
    alpha: float
    alpha_hat: float
    relative_error: float
    iterations: int
    wall_time_ms: float
    degenerate: bool = False
    plane: ImagePlane


class ImageRecoveryResult(BaseModel):
    channels: List[ChannelRecovery] = Field(default_factory=list)
    relative_error: float = 0.0

    @property
    def planes(self) -> List[ImagePlane]:
        """Reconstructed channels in input order."""
        return [channel.plane for channel in self.channels]


class TrialSpec(BaseModel):
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    alpha: float = Field(default=0.0, ge=0, lt=1)
    magnitude_scale: float = Field(default=config.MAGNITUDE_SCALE, ge=0)
    noise_p: float = Field(default=0.0, ge=0)
    algorithm: Literal["robust_wf", "rwf"] = "robust_wf"
    cfg: SolverConfig = Field(default_factory=SolverConfig)
    trial_seed: int = Field(default=0, ge=0)
    record_trace: bool = False


class TrialOutcome(BaseModel):
    final_rel_error: float
    final_dist: float
    success: bool
    iterations: int
    trace: Optional[List[float]] = None
    wall_time_ms: float = 0.0
    failure_reason: Optional[str] = None


class SweepCell(BaseModel):
    axis_value: float
    algorithm: str
    n: int
    m: int
    alpha: float
    alpha_hat: float
    noise_p: float
    reps: int
    success_rate: float = Field(ge=0, le=1)
    mean_rel_error: float
    median_rel_error: float


class SweepTable(BaseModel):
    axis: Literal["alpha", "m"]
    cells: List[SweepCell] = Field(default_factory=list)

    @property
    def axis_values(self) -> List[float]:
        return [cell.axis_value for cell in self.cells]


class TraceSet(BaseModel):
    algorithm: str
    traces: Dict[float, List[float]] = Field(default_factory=dict)  # noise_p -> rel_error per iteration


class RunManifest(BaseModel):
    command: List[str]
    subcommand: str
    resolved_config: Dict[str, Any] = Field(default_factory=dict)
    root_seed: int
    artifact_version: str = config.ARTIFACT_VERSION
    started_at: datetime = Field(default_factory=datetime.now)
    finished_at: Optional[datetime] = None
    output_dir: str
    outputs: List[str] = Field(default_factory=list)
    fast_mode: bool = False


class RunRecord(BaseModel):
    id: Optional[int] = None
    command: str
    started_at: datetime
    finished_at: Optional[datetime] = None
    root_seed: int
    status: str = "running"
    output_dir: str
    manifest_json: Optional[str] = None
