import logging
from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from smogcast.core.container import check_payload_length, read_container, write_container
from smogcast.core.exceptions import DataError, FormatError
from smogcast.models.config import STUDY_BBOX
from smogcast.models.dataset import CubeHeader

logger = logging.getLogger(__name__)

SMGD_MAGIC = b"SMGD"
SMGD_VERSION = 1

PREDICTOR_FEATURES: List[str] = ["SO2", "NO2", "CH4", "O3", "CO", "HCHO"]
PREDICTOR_UNITS: List[str] = ["mol/m2", "mol/m2", "ppb", "mol/m2", "mol/m2", "mol/m2"]
TARGET_FEATURE = "AER_AI"
TARGET_UNIT = "1"

EPOCH = date(1970, 1, 1)


def to_days(d: date) -> int:
    return (d - EPOCH).days


def to_date(days: int) -> date:
    return date.fromordinal(EPOCH.toordinal() + int(days))


def iso_dates(days: List[int]) -> List[str]:
    return pd.to_datetime(np.asarray(days, dtype=np.int64), unit="D").strftime("%Y-%m-%d").tolist()


@dataclass
class DatasetCube:
    """Time-ordered gridded cube (T, H, W, C); NaN marks a missing value"""

    values: np.ndarray
    time_axis: List[int]
    feature_names: List[str]
    units: List[str]
    bbox: Tuple[float, float, float, float] = STUDY_BBOX
    cadence_days: Optional[int] = field(default=None)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)
        self.time_axis = [int(t) for t in self.time_axis]
        if self.values.ndim != 4:
            raise DataError(f"Cube values must be (T, H, W, C), got shape {self.values.shape}")
        t, _, _, c = self.values.shape
        if len(self.time_axis) != t:
            raise DataError(f"time_axis has {len(self.time_axis)} entries for T={t}")
        if len(self.feature_names) != c or len(self.units) != c:
            raise DataError(f"Expected {c} feature names and units")
        self.cadence_days = validate_cadence(self.time_axis, self.cadence_days)

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self.values.shape  # type: ignore[return-value]

    def dates(self) -> List[str]:
        return iso_dates(self.time_axis)

    def with_values(self, values: np.ndarray, **changes) -> "DatasetCube":
        return replace(self, values=values, **changes)

    def header(self) -> CubeHeader:
        return CubeHeader(
            dims=self.values.shape,
            feature_names=list(self.feature_names),
            units=list(self.units),
            time_axis=list(self.time_axis),
            bbox=tuple(self.bbox),
        )


def validate_cadence(time_axis: List[int], expected: Optional[int] = None) -> Optional[int]:
    """Checks the axis is strictly increasing with one fixed step; returns that step"""
    if len(time_axis) < 2:
        return expected
    steps = np.diff(np.asarray(time_axis, dtype=np.int64))
    if np.any(steps <= 0):
        raise DataError("time_axis must be strictly increasing")
    if np.any(steps != steps[0]):
        raise DataError(f"time_axis has a non-uniform cadence: steps {sorted(set(steps.tolist()))}")
    step = int(steps[0])
    if expected is not None and step != expected:
        raise DataError(f"time_axis cadence is {step} days, expected {expected}")
    return step


def write_cube(path: Union[str, Path], cube: DatasetCube) -> Path:
    """Serialize a cube into an SMGD container"""
    header = cube.header().model_dump(mode="json")
    path = write_container(path, SMGD_MAGIC, SMGD_VERSION, header, cube.values.ravel())
    logger.debug("[DATA] wrote %s dims=%s", path, cube.values.shape)
    return path


def ingest(path: Union[str, Path], cadence_days: Optional[int] = None) -> DatasetCube:
    """Read and validate an SMGD container; NaNs are preserved"""
    _, raw_header, payload = read_container(path, SMGD_MAGIC, (SMGD_VERSION,))
    try:
        header = CubeHeader.model_validate(raw_header)
    except ValidationError as exc:
        raise FormatError(f"{path}: invalid cube header: {exc.errors()[0]['msg']}")
    t, h, w, c = header.dims
    check_payload_length(path, payload, t * h * w * c)
    cube = DatasetCube(
        values=payload.reshape(t, h, w, c),
        time_axis=header.time_axis,
        feature_names=header.feature_names,
        units=header.units,
        bbox=header.bbox,
        cadence_days=cadence_days,
    )
    logger.info("[DATA] ingested %s dims=%s features=%s", path, header.dims, ",".join(header.feature_names))
    return cube
