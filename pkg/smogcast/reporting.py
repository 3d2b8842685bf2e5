"""
Figure data as CSV: the loss curve, SSIM over time (single run and a
side-by-side comparison), the forecast-vs-actual series at one grid cell, and
full-grid dumps of the first forecast frames.
"""
import logging
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
import pandas as pd

from smogcast.core.csvio import read_csv, write_csv
from smogcast.core.exceptions import DataError
from smogcast.datapipe.cube import DatasetCube
from smogcast.datapipe.transforms import downsample_bilinear, impute
from smogcast.models.history import FRAME_COLUMNS, HISTORY_COLUMNS, POINT_COLUMNS, SSIM_COLUMNS

logger = logging.getLogger(__name__)

LOSS_CURVE_COLUMNS: List[str] = ["epoch", "train_loss", "val_loss", "train_mse", "val_mse"]


def loss_curve(history_path: Union[str, Path]) -> pd.DataFrame:
    return read_csv(history_path, HISTORY_COLUMNS)[LOSS_CURVE_COLUMNS]


def ssim_over_time(ssim_path: Union[str, Path]) -> pd.DataFrame:
    return read_csv(ssim_path, SSIM_COLUMNS)


def ssim_compare(series: Dict[str, Union[str, Path]]) -> pd.DataFrame:
    """One SSIM column per label; every series must cover the same timesteps"""
    if not series:
        raise DataError("No SSIM series to compare")
    wide = None
    for label, path in series.items():
        frame = ssim_over_time(path).rename(columns={"ssim": label})
        if wide is None:
            wide = frame
            continue
        if not frame[["timestep_index", "date"]].equals(wide[["timestep_index", "date"]]):
            raise DataError(f"SSIM series {label} does not cover the same timesteps as the others")
        wide[label] = frame[label].to_numpy()
    return wide


def _aligned(predictions: DatasetCube, target: DatasetCube) -> Tuple[List[int], List[int]]:
    """Indices into predictions and target for every forecast date the target also holds"""
    if predictions.shape[1:3] != target.shape[1:3]:
        raise DataError(f"Prediction grid {predictions.shape[1:3]} differs from target grid {target.shape[1:3]}")
    where = {day: i for i, day in enumerate(target.time_axis)}
    pairs = [(p, where[day]) for p, day in enumerate(predictions.time_axis) if day in where]
    if not pairs:
        raise DataError("No forecast date falls on the target cube's time axis")
    return [p for p, _ in pairs], [t for _, t in pairs]


def match_grid(target: DatasetCube, predictions: DatasetCube) -> DatasetCube:
    """
    Brings a native-resolution target onto the forecast grid with the same
    impute-then-downsample steps training applied; a target already on the
    forecast grid passes through.
    """
    h, w = predictions.shape[1:3]
    if target.shape[1:3] == (h, w):
        return target
    logger.info("[REPORT] regridding target %s to the forecast grid %dx%d", target.shape[1:3], h, w)
    return downsample_bilinear(impute(target), h, w)


def point_series(predictions: DatasetCube, target: DatasetCube, lat_idx: int, lon_idx: int) -> pd.DataFrame:
    _, h, w, _ = target.shape
    if not (0 <= lat_idx < h and 0 <= lon_idx < w):
        raise DataError(f"Point ({lat_idx}, {lon_idx}) lies outside the {h}x{w} grid")
    pred_idx, target_idx = _aligned(predictions, target)
    dates = predictions.dates()
    return pd.DataFrame(
        {
            "timestep_index": np.arange(len(pred_idx)),
            "date": [dates[i] for i in pred_idx],
            "actual": target.values[target_idx, lat_idx, lon_idx, 0].astype(np.float64),
            "predicted": predictions.values[pred_idx, lat_idx, lon_idx, 0].astype(np.float64),
        },
        columns=POINT_COLUMNS,
    )


def frame_dumps(predictions: DatasetCube, target: DatasetCube, count: int) -> List[pd.DataFrame]:
    """Long-format grids for the first ``count`` aligned forecast frames"""
    if count < 1:
        raise DataError("Frame count must be positive")
    pred_idx, target_idx = _aligned(predictions, target)
    _, h, w, _ = target.shape
    lat, lon = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    frames = []
    for p, t in list(zip(pred_idx, target_idx))[:count]:
        frames.append(
            pd.DataFrame(
                {
                    "lat_idx": lat.ravel(),
                    "lon_idx": lon.ravel(),
                    "actual": target.values[t, :, :, 0].ravel().astype(np.float64),
                    "predicted": predictions.values[p, :, :, 0].ravel().astype(np.float64),
                },
                columns=FRAME_COLUMNS,
            )
        )
    return frames


def write_report(
    out_dir: Union[str, Path],
    history: Union[str, Path, None] = None,
    ssim: Union[Dict[str, Union[str, Path]], None] = None,
    predictions: Union[DatasetCube, None] = None,
    target: Union[DatasetCube, None] = None,
    point: Union[Tuple[int, int], None] = None,
    frames: int = 0,
) -> List[Path]:
    """Writes every artifact whose inputs were given; returns the paths written"""
    out_dir = Path(out_dir)
    written: List[Path] = []
    if history is not None:
        written.append(write_csv(out_dir / "loss_curve.csv", loss_curve(history)))
    if ssim:
        first = next(iter(ssim.values()))
        written.append(write_csv(out_dir / "ssim_over_time.csv", ssim_over_time(first)))
        written.append(write_csv(out_dir / "ssim_compare.csv", ssim_compare(ssim)))
    if point is not None or frames:
        if predictions is None or target is None:
            raise DataError("Point series and frame dumps need both a prediction cube and a target cube")
        target = match_grid(target, predictions)
    if point is not None:
        written.append(write_csv(out_dir / "point_series.csv", point_series(predictions, target, *point)))
    if frames:
        for k, frame in enumerate(frame_dumps(predictions, target, frames)):
            written.append(write_csv(out_dir / "frames" / f"frame_{k}.csv", frame))
    for path in written:
        logger.info("[REPORT] wrote %s", path)
    return written
