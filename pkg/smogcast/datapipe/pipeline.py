"""Cube-to-window preparation shared by the train, evaluate and predict commands."""
import logging
from typing import List, Tuple

import numpy as np

from smogcast.core.exceptions import DataError
from smogcast.datapipe.cube import DatasetCube
from smogcast.datapipe.transforms import downsample_bilinear, impute, normalize
from smogcast.datapipe.windows import WindowedDataset, apply_stats, make_inputs, make_windows, select_range
from smogcast.models.config import GridConfig, RunConfig
from smogcast.models.dataset import NormStats

logger = logging.getLogger(__name__)


def regrid(cube: DatasetCube, grid: GridConfig) -> DatasetCube:
    if grid.height is None and grid.width is None:
        return cube
    _, h, w, _ = cube.shape
    return downsample_bilinear(cube, grid.height or h, grid.width or w)


def prepare_cube(cube: DatasetCube, run: RunConfig) -> DatasetCube:
    return regrid(impute(cube), run.grid)


def prepare_windows(predictors: DatasetCube, target: DatasetCube, run: RunConfig) -> WindowedDataset:
    """Impute, optionally downsample, then window; values stay in physical units"""
    windows = make_windows(
        prepare_cube(predictors, run),
        prepare_cube(target, run),
        run.window.t_in,
        run.window.lag,
    )
    logger.info("[DATA] %d windows of %d step(s) on a %dx%d grid", len(windows), run.window.t_in, *windows.grid)
    return windows


def holdout_windows(predictors: DatasetCube, target: DatasetCube, run: RunConfig, stats: NormStats) -> WindowedDataset:
    """Test-range windows normalized with stored training statistics"""
    windows = select_range(prepare_windows(predictors, target, run), run.split.test_start, run.split.test_end)
    if len(windows) == 0:
        raise DataError(f"No windows fall in the test range {run.split.test_start}..{run.split.test_end}")
    return apply_stats(windows, stats)


def forecast_inputs(predictors: DatasetCube, run: RunConfig, stats: NormStats) -> Tuple[np.ndarray, List[int]]:
    """Normalized predictor-only windows over the whole cube and their forecast dates"""
    cube, _ = normalize(prepare_cube(predictors, run), stats=stats.predictors)
    return make_inputs(cube, run.window.t_in, run.window.lag)
