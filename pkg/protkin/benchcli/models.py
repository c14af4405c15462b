from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from protkin import config


class Pass(str, Enum):
    forward = "forward"
    backward = "backward"

    def __str__(self) -> str:
        return self.value


class Model(str, Enum):
    backbone = "backbone"
    fullatom = "fullatom"
    lrmsd = "lrmsd"

    def __str__(self) -> str:
        return self.value


class BenchRow(BaseModel):
    """One timed pass over one batch. Field order is the CSV column order."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    op_name: str
    sequence_length: int = Field(gt=0)
    batch_size: int = Field(gt=0)
    pass_: Pass = Field(alias="pass")
    replicate: int = Field(gt=0)
    wall_time: float = Field(gt=0)
    threads: int = Field(default=config.DEFAULT_THREADS, gt=0)


class PrecisionRow(BaseModel):
    model_config = ConfigDict(frozen=True)

    atom_index: int = Field(ge=0)
    mean_error: float = Field(ge=0)
    ci95_low: float = Field(ge=0)
    ci95_high: float = Field(ge=0)

    @model_validator(mode="after")
    def ordered_interval(self) -> "PrecisionRow":
        if not self.ci95_low <= self.mean_error <= self.ci95_high:
            raise ValueError("confidence interval must contain the mean")
        return self


class ScalingConfig(BaseModel):
    op: str
    min_len: int = Field(default=100, gt=0)
    max_len: int = Field(default=700, gt=0)
    step: int = Field(default=100, gt=0)
    batch: int = Field(default=config.DEFAULT_BATCH_SIZE, gt=0)
    reps: int = Field(default=config.DEFAULT_REPS, gt=0)
    threads: int = Field(default=config.DEFAULT_THREADS, gt=0)
    seed: int = 0

    @model_validator(mode="after")
    def ordered_lengths(self) -> "ScalingConfig":
        if self.min_len > self.max_len:
            raise ValueError(f"min_len {self.min_len} exceeds max_len {self.max_len}")
        return self

    def lengths(self) -> list[int]:
        return list(range(self.min_len, self.max_len + 1, self.step))


class PrecisionConfig(BaseModel):
    max_len: int = Field(default=config.PRECISION_MAX_LEN, gt=0)
    reps: int = Field(default=config.DEFAULT_REPS, gt=0)
    threshold: float = Field(default=config.PRECISION_THRESHOLD, gt=0)
    bins: int = Field(default=10, gt=1)
    seed: int = 0


class GradcheckConfig(BaseModel):
    model: Model
    length: int = Field(gt=0)
    trials: int = Field(default=20, gt=0)
    seed: int = 0
    tol: float = Field(default=1e-4, ge=0)


class FitResult(BaseModel):
    op_name: str
    pass_: str = Field(alias="pass")
    slope: float
    intercept: float
    lengths: int

    model_config = ConfigDict(populate_by_name=True)


class WorstCase(BaseModel):
    seed: int
    loss: str
    index: int
    analytic: float
    numeric: float
    error: float


class GradcheckReport(BaseModel):
    model: Model
    trials: int
    max_error: float
    worst: Optional[WorstCase] = None
    # largest relative error of each loss over all trials
    loss_errors: dict[str, float] = Field(default_factory=dict)
    # per-trial invariants of the LRMSD gradient
    max_gradient_sum: Optional[float] = None
    max_rotation_derivative: Optional[float] = None
    passed: bool


class PrecisionReport(BaseModel):
    rows: list[PrecisionRow]
    max_mean_error: float
    probe_index: int
    probe_error: float
    trend_slope: float
    passed: bool
