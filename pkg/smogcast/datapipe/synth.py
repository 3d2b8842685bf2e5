"""Seeded moving-blob sequences shaped like the six-gas predictor and AER_AI target cubes."""
import logging
from datetime import date, timedelta
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from smogcast.core.exceptions import DataError
from smogcast.datapipe.cube import (
    PREDICTOR_FEATURES,
    PREDICTOR_UNITS,
    TARGET_FEATURE,
    TARGET_UNIT,
    DatasetCube,
    to_days,
)
from smogcast.models.config import STUDY_BBOX

logger = logging.getLogger(__name__)

SERIES_END = date(2023, 12, 31)

# (frame lag, scale, offset) turning the latent field into each predictor
FEATURE_TRANSFORMS = {
    "SO2": (0, 2e-4, 1e-5),
    "NO2": (0, 1e-4, 2e-5),
    "CH4": (1, 40.0, 1850.0),
    "O3": (0, -1e-2, 0.12),
    "CO": (1, 1e-2, 0.03),
    "HCHO": (2, 1e-4, 5e-5),
}

# the target is a steep logistic of the latent field, near 0 off-plume and near 1 inside
TARGET_THRESHOLD = 0.3
TARGET_SHARPNESS = 40.0
TARGET_LOW, TARGET_HIGH = -1.0, 2.0


class BlobField:
    """Gaussian blobs translating at one velocity across a periodic grid"""

    def __init__(self, grid_h: int, grid_w: int, n_blobs: int, velocity: Sequence[float], rng: np.random.Generator):
        self.grid_h = grid_h
        self.grid_w = grid_w
        self.velocity = np.asarray(velocity, dtype=np.float64)
        self.centers = rng.uniform((0.0, 0.0), (grid_h, grid_w), size=(n_blobs, 2))
        self.amplitudes = rng.uniform(0.5, 1.0, size=n_blobs)
        scale = max(1.0, min(grid_h, grid_w) / 16.0)
        self.widths = rng.uniform(1.5, 2.5, size=n_blobs) * scale
        self._ys = np.arange(grid_h, dtype=np.float64)[:, None]
        self._xs = np.arange(grid_w, dtype=np.float64)[None, :]

    def at(self, t: float) -> np.ndarray:
        field = np.zeros((self.grid_h, self.grid_w))
        for (cy, cx), amp, width in zip(self.centers, self.amplitudes, self.widths):
            py = cy + self.velocity[0] * t
            px = cx + self.velocity[1] * t
            dy = np.mod(self._ys - py + self.grid_h / 2.0, self.grid_h) - self.grid_h / 2.0
            dx = np.mod(self._xs - px + self.grid_w / 2.0, self.grid_w) - self.grid_w / 2.0
            field += amp * np.exp(-(dy * dy + dx * dx) / (2.0 * width * width))
        return field


def synth_advection(
    grid_h: int,
    grid_w: int,
    frames: int,
    n_blobs: int = 3,
    velocity: Sequence[float] = (1.0, 1.0),
    noise_sigma: float = 0.02,
    seed: int = 42,
    missing_fraction: float = 0.0,
    cadence_days: int = 5,
    start: Optional[date] = None,
) -> Tuple[DatasetCube, DatasetCube]:
    """
    Returns (predictors, target).

    The six predictors are lagged, scaled copies of a latent blob field plus
    seeded Gaussian noise. The AER_AI target is a sharp plume mask of the
    same frame's latent field scaled to [TARGET_LOW, TARGET_HIGH]; the
    one-frame lead comes from the window lag, so the next frame is learnable
    from the current one.
    """
    if grid_h <= 0 or grid_w <= 0 or frames <= 0 or n_blobs <= 0 or cadence_days <= 0:
        raise DataError("Grid extents, frame count, blob count and cadence must be positive")
    if not 0.0 <= missing_fraction < 1.0:
        raise DataError(f"missing_fraction must be in [0, 1), got {missing_fraction}")

    rng = np.random.default_rng(seed)
    latent = BlobField(grid_h, grid_w, n_blobs, velocity, rng)

    max_lag = max(lag for lag, _, _ in FEATURE_TRANSFORMS.values())
    # frames -max_lag .. frames - 1 cover every lagged read
    fields = np.stack([latent.at(t) for t in range(-max_lag, frames)])

    def frame(t: int) -> np.ndarray:
        return fields[t + max_lag]

    predictors = np.empty((frames, grid_h, grid_w, len(PREDICTOR_FEATURES)))
    for f, name in enumerate(PREDICTOR_FEATURES):
        lag, factor, offset = FEATURE_TRANSFORMS[name]
        for t in range(frames):
            predictors[t, :, :, f] = offset + factor * frame(t - lag)
        if noise_sigma > 0:
            predictors[..., f] += rng.normal(0.0, noise_sigma * abs(factor), size=(frames, grid_h, grid_w))

    if missing_fraction > 0:
        mask = rng.random(predictors.shape) < missing_fraction
        predictors[mask] = np.nan

    plume = expit(TARGET_SHARPNESS * (fields[max_lag:] - TARGET_THRESHOLD))
    target = (TARGET_LOW + (TARGET_HIGH - TARGET_LOW) * plume)[..., None]

    if start is None:
        start = SERIES_END - timedelta(days=cadence_days * (frames - 1))
    first = to_days(start)
    time_axis = [first + cadence_days * i for i in range(frames)]

    logger.info("[SYNTH] %d frames on %dx%d, %d blobs, velocity=%s, seed=%d", frames, grid_h, grid_w, n_blobs, tuple(velocity), seed)
    return (
        DatasetCube(predictors, time_axis, list(PREDICTOR_FEATURES), list(PREDICTOR_UNITS), STUDY_BBOX, cadence_days),
        DatasetCube(target, time_axis, [TARGET_FEATURE], [TARGET_UNIT], STUDY_BBOX, cadence_days),
    )
