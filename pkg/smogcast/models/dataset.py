from typing import List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator


class CubeHeader(BaseModel):
    """Header block of an SMGD container"""

    model_config = ConfigDict(extra="forbid")

    dims: Tuple[int, int, int, int]  # T, H, W, C
    feature_names: List[str]
    units: List[str]
    time_axis: List[int]  # days since 1970-01-01 UTC
    bbox: Tuple[float, float, float, float]  # lon_min, lat_min, lon_max, lat_max
    missing: Literal["NaN"] = "NaN"

    @model_validator(mode="after")
    def axes_agree(self):
        t, h, w, c = self.dims
        if min(self.dims) <= 0:
            raise ValueError(f"dims must be positive, got {self.dims}")
        if len(self.time_axis) != t:
            raise ValueError(f"time_axis has {len(self.time_axis)} entries for T={t}")
        if len(self.feature_names) != c or len(self.units) != c:
            raise ValueError(f"feature_names/units must have C={c} entries")
        return self


class FeatureRange(BaseModel):
    """Per-feature min-max statistics; degenerate features have max == min"""

    feature_names: List[str]
    minimum: List[float]
    maximum: List[float]
    degenerate: List[str] = Field(default_factory=list)

    @model_validator(mode="after")
    def lengths_agree(self):
        if not (len(self.feature_names) == len(self.minimum) == len(self.maximum)):
            raise ValueError("feature_names, minimum and maximum must have equal length")
        return self


class NormStats(BaseModel):
    """Statistics fitted on the training range, applied to every split"""

    predictors: FeatureRange
    target: FeatureRange
