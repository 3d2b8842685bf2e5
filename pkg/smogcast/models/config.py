import hashlib
import json
from datetime import date
from typing import Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ArchitectureConfig(StrictModel):
    in_channels: int = Field(6, gt=0)
    filters: List[int] = Field(default_factory=lambda: [16, 32], min_length=1)
    kernel_size: int = Field(3, gt=0)
    head_kernel: int = Field(3, gt=0)
    bn_momentum: float = Field(0.99, gt=0, lt=1)
    bn_epsilon: float = Field(1e-3, gt=0)
    forget_bias: float = 1.0

    @field_validator("kernel_size", "head_kernel")
    @classmethod
    def odd_kernel(cls, v):
        if v % 2 == 0:
            raise ValueError("kernel extents must be odd for same padding")
        return v

    @field_validator("filters")
    @classmethod
    def positive_filters(cls, v):
        if any(f <= 0 for f in v):
            raise ValueError("filter counts must be positive")
        return v


class EarlyStopConfig(StrictModel):
    monitor: Literal["val_loss"] = "val_loss"
    patience: int = Field(10, ge=0)
    min_delta: float = Field(0.0, ge=0)


class PlateauConfig(StrictModel):
    monitor: Literal["val_loss"] = "val_loss"
    factor: float = Field(0.5, gt=0, lt=1)
    patience: int = Field(5, ge=0)
    min_lr: float = Field(1e-7, ge=0)
    min_delta: float = Field(0.0, ge=0)


class TrainConfig(StrictModel):
    epochs: int = Field(50, ge=0)
    batch_size: int = Field(1, gt=0)
    learning_rate: float = Field(1e-5, gt=0)
    beta1: float = Field(0.9, gt=0, lt=1)
    beta2: float = Field(0.999, gt=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)
    clipnorm: float = Field(1.0, gt=0)
    early_stop: EarlyStopConfig = Field(default_factory=EarlyStopConfig)
    plateau: PlateauConfig = Field(default_factory=PlateauConfig)
    seed: int = 42


class SsimConfig(StrictModel):
    window: Literal["global", "gaussian"] = "global"
    window_size: int = Field(11, gt=0)
    sigma: float = Field(1.5, gt=0)
    dynamic_range: float = Field(1.0, gt=0)
    k1: float = Field(0.01, gt=0)
    k2: float = Field(0.03, gt=0)

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2


class GridConfig(StrictModel):
    """Optional bilinear downsampling target; None keeps the native grid"""

    height: Optional[int] = Field(None, gt=0)
    width: Optional[int] = Field(None, gt=0)


class WindowConfig(StrictModel):
    t_in: int = Field(1, ge=1)
    lag: int = Field(1, ge=0)


class SplitSpec(StrictModel):
    train_start: date = date(2019, 1, 1)
    train_end: date = date(2022, 12, 31)
    test_start: date = date(2023, 1, 1)
    test_end: date = date(2023, 12, 31)

    @model_validator(mode="after")
    def ordered_and_disjoint(self):
        if self.train_start > self.train_end or self.test_start > self.test_end:
            raise ValueError("split ranges must have start <= end")
        if self.train_end >= self.test_start:
            raise ValueError("train range must end before the test range starts")
        return self


class DataConfig(StrictModel):
    cadence_days: int = Field(5, gt=0)


# lon_min, lat_min, lon_max, lat_max of the study region
STUDY_BBOX = (68.137207, 24.886436, 84.836426, 34.379713)


class SynthConfig(StrictModel):
    grid_h: int = Field(16, gt=0)
    grid_w: int = Field(16, gt=0)
    frames: int = Field(200, gt=0)
    n_blobs: int = Field(3, gt=0)
    velocity: List[float] = Field(default_factory=lambda: [1.0, 1.0], min_length=2, max_length=2)
    noise_sigma: float = Field(0.02, ge=0)
    missing_fraction: float = Field(0.0, ge=0, lt=1)
    seed: int = 42
    cadence_days: int = Field(5, gt=0)
    # None anchors the axis so that its last frame falls on 2023-12-31
    start: Optional[date] = None


class RunConfig(StrictModel):
    seed: int = 42
    precision: Literal["float32", "float64"] = "float32"
    architecture: ArchitectureConfig = Field(default_factory=ArchitectureConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    ssim: SsimConfig = Field(default_factory=SsimConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    window: WindowConfig = Field(default_factory=WindowConfig)
    split: SplitSpec = Field(default_factory=SplitSpec)
    data: DataConfig = Field(default_factory=DataConfig)

    @model_validator(mode="after")
    def propagate_seed(self):
        if "seed" not in self.train.model_fields_set:
            self.train.seed = self.seed
        return self

    def fingerprint(self) -> str:
        return config_fingerprint(self.architecture, self.train)


def config_fingerprint(architecture: ArchitectureConfig, train: TrainConfig) -> str:
    """SHA-256 over the canonical JSON of the architecture and training config"""
    payload = {"architecture": architecture.model_dump(mode="json"), "train": train.model_dump(mode="json")}
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class ReportConfig(StrictModel):
    """Inputs of one report invocation, echoed beside its outputs"""

    history: Optional[str] = None
    ssim: Dict[str, str] = Field(default_factory=dict)
    predictions: Optional[str] = None
    target: Optional[str] = None
    point: Optional[Tuple[int, int]] = None
    frames: int = Field(0, ge=0)
