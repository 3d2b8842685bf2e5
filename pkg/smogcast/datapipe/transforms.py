import logging
from datetime import date
from typing import Optional, Tuple

import numpy as np
from scipy.ndimage import map_coordinates

from smogcast.core.exceptions import DataError, NonFiniteError
from smogcast.datapipe.cube import DatasetCube, to_days
from smogcast.models.dataset import FeatureRange

logger = logging.getLogger(__name__)


def impute(cube: DatasetCube) -> DatasetCube:
    """
    Fill missing values per pixel and feature.

    Interior gaps are interpolated linearly along time, leading and trailing
    gaps take the nearest observation, and pixels never observed take the
    feature's global mean. A feature with no observation anywhere is an error.
    """
    values = cube.values.astype(np.float64)
    t, h, w, c = values.shape
    missing_total = int(np.isnan(values).sum())
    if missing_total == 0:
        return cube.with_values(cube.values.copy())

    steps = np.arange(t, dtype=np.float64)
    for f in range(c):
        series = values[..., f].reshape(t, h * w)
        observed = ~np.isnan(series)
        if not observed.any():
            raise DataError(f"Feature {cube.feature_names[f]} has no observed values")
        fallback = float(series[observed].mean())
        for p in np.flatnonzero(~observed.all(axis=0)):
            mask = observed[:, p]
            if not mask.any():
                series[:, p] = fallback
                continue
            # np.interp holds the end values beyond the first/last observation
            series[:, p] = np.interp(steps, steps[mask], series[mask, p])
        values[..., f] = series.reshape(t, h, w)

    logger.info("[DATA] imputed %d missing values", missing_total)
    return cube.with_values(values.astype(np.float32))


def _require_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("Cube holds NaN or Inf; impute before normalizing or resampling")


def fit_range(values: np.ndarray, feature_names) -> FeatureRange:
    """Min and max over every axis but the last"""
    _require_finite(values)
    flat = values.reshape(-1, values.shape[-1]).astype(np.float64)
    if flat.shape[0] == 0:
        raise DataError("Cannot fit normalization statistics on an empty selection")
    lo = flat.min(axis=0)
    hi = flat.max(axis=0)
    degenerate = [name for name, a, b in zip(feature_names, lo, hi) if a == b]
    return FeatureRange(
        feature_names=list(feature_names),
        minimum=[float(v) for v in lo],
        maximum=[float(v) for v in hi],
        degenerate=degenerate,
    )


def apply_range(values: np.ndarray, frange: FeatureRange, clip: bool = False) -> np.ndarray:
    """Scale to [0, 1] with fitted statistics; degenerate features map to 0"""
    _require_finite(values)
    if values.shape[-1] != len(frange.minimum):
        raise DataError(f"Statistics cover {len(frange.minimum)} features, data has {values.shape[-1]}")
    lo = np.asarray(frange.minimum, dtype=np.float64)
    span = np.asarray(frange.maximum, dtype=np.float64) - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = np.where(span > 0, (values.astype(np.float64) - lo) / safe, 0.0)
    if clip:
        outside = int(np.count_nonzero((scaled < 0) | (scaled > 1)))
        if outside:
            logger.info("[DATA] clipped %d values outside the fitted range", outside)
        scaled = np.clip(scaled, 0.0, 1.0)
    return scaled.astype(np.float32)


def inverse_transform(values: np.ndarray, frange: FeatureRange) -> np.ndarray:
    if values.shape[-1] != len(frange.minimum):
        raise DataError(f"Statistics cover {len(frange.minimum)} features, data has {values.shape[-1]}")
    lo = np.asarray(frange.minimum, dtype=np.float64)
    span = np.asarray(frange.maximum, dtype=np.float64) - lo
    return (values.astype(np.float64) * span + lo).astype(np.float32)


def normalize(
    cube: DatasetCube,
    stats: Optional[FeatureRange] = None,
    fit_dates: Optional[Tuple[date, date]] = None,
) -> Tuple[DatasetCube, FeatureRange]:
    """
    Per-feature min-max scaling to [0, 1].

    Statistics are fitted on the frames inside ``fit_dates`` (inclusive) or on
    the whole cube, unless ``stats`` is given. Values outside a supplied fit
    are clipped into [0, 1].
    """
    _require_finite(cube.values)
    if stats is None:
        frames = cube.values
        if fit_dates is not None:
            lo, hi = to_days(fit_dates[0]), to_days(fit_dates[1])
            keep = [i for i, d in enumerate(cube.time_axis) if lo <= d <= hi]
            if not keep:
                raise DataError(f"No frames fall inside the fit range {fit_dates[0]}..{fit_dates[1]}")
            frames = cube.values[keep]
        stats = fit_range(frames, cube.feature_names)
        if stats.degenerate:
            logger.warning("[DATA] degenerate features map to 0: %s", ", ".join(stats.degenerate))
        clip = fit_dates is not None
    else:
        clip = True
    return cube.with_values(apply_range(cube.values, stats, clip=clip)), stats


def _corner_aligned(n_in: int, n_out: int) -> np.ndarray:
    if n_out == 1:
        return np.array([(n_in - 1) / 2.0])
    return np.arange(n_out, dtype=np.float64) * ((n_in - 1) / (n_out - 1))


def downsample_bilinear(cube: DatasetCube, target_h: int, target_w: int) -> DatasetCube:
    """Bilinear reduction with corner-aligned sampling; input must be imputed"""
    t, h, w, c = cube.values.shape
    if target_h <= 0 or target_w <= 0:
        raise DataError(f"Target grid must be positive, got {target_h}x{target_w}")
    if target_h > h or target_w > w:
        raise DataError(f"Target grid {target_h}x{target_w} exceeds source {h}x{w}; this op only reduces")
    _require_finite(cube.values)
    if (target_h, target_w) == (h, w):
        return cube.with_values(cube.values.copy())

    rows = _corner_aligned(h, target_h)
    cols = _corner_aligned(w, target_w)
    grid = np.stack(np.meshgrid(rows, cols, indexing="ij"))
    out = np.empty((t, target_h, target_w, c), dtype=np.float64)
    src = cube.values.astype(np.float64)
    for i in range(t):
        for f in range(c):
            # order=1 spline interpolation is plain bilinear
            out[i, :, :, f] = map_coordinates(src[i, :, :, f], grid, order=1, mode="nearest")
    logger.info("[DATA] downsampled %dx%d -> %dx%d", h, w, target_h, target_w)
    return cube.with_values(out.astype(np.float32))
