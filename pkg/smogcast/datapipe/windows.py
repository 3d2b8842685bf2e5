import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from smogcast.core.exceptions import DataError
from smogcast.datapipe.cube import DatasetCube, iso_dates, to_days
from smogcast.datapipe.transforms import apply_range, fit_range
from smogcast.models.config import SplitSpec
from smogcast.models.dataset import NormStats

logger = logging.getLogger(__name__)


@dataclass
class WindowedDataset:
    """
    Model-ready samples.

    samples is (N, t_in, H, W, C); targets and last_observed are
    (N, t_in, H, W, 1). Step j of sample i forecasts the target ``lag`` frames
    after predictor frame i + j; last_observed holds the target at frame i + j
    itself (the persistence forecast). sample_dates is the target date of the
    last step, in days since the epoch.
    """

    samples: np.ndarray
    targets: np.ndarray
    last_observed: np.ndarray
    sample_dates: List[int]
    feature_names: List[str]
    stats: Optional[NormStats] = None

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def grid(self) -> Tuple[int, int]:
        return int(self.samples.shape[2]), int(self.samples.shape[3])

    def dates(self) -> List[str]:
        return iso_dates(self.sample_dates)

    def subset(self, indices: Sequence[int]) -> "WindowedDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return replace(
            self,
            samples=self.samples[idx],
            targets=self.targets[idx],
            last_observed=self.last_observed[idx],
            sample_dates=[self.sample_dates[i] for i in idx],
        )


def window_count(frames: int, t_in: int, lag: int) -> int:
    return frames - t_in + 1 - lag


def _check_window_args(t_in: int, lag: int) -> None:
    if t_in < 1:
        raise DataError(f"t_in must be >= 1, got {t_in}")
    if lag < 0:
        raise DataError(f"lag must be >= 0, got {lag}")


def _stack(values: np.ndarray, starts: np.ndarray, t_in: int, offset: int) -> np.ndarray:
    index = starts[:, None] + np.arange(t_in)[None, :] + offset
    return np.ascontiguousarray(values[index])


def make_windows(predictors: DatasetCube, target: DatasetCube, t_in: int = 1, lag: int = 1) -> WindowedDataset:
    _check_window_args(t_in, lag)
    if predictors.time_axis != target.time_axis:
        raise DataError("Predictor and target cubes must share one time axis")
    if predictors.values.shape[1:3] != target.values.shape[1:3]:
        raise DataError(f"Grid mismatch: predictors {predictors.values.shape[1:3]}, target {target.values.shape[1:3]}")
    if target.values.shape[3] != 1:
        raise DataError(f"Target cube must hold one feature, got {target.values.shape[3]}")

    frames = len(predictors.time_axis)
    n = window_count(frames, t_in, lag)
    if n < 1:
        raise DataError(f"{frames} frames cannot form a window with t_in={t_in}, lag={lag}")
    starts = np.arange(n)
    dates = [target.time_axis[i + t_in - 1 + lag] for i in range(n)]
    return WindowedDataset(
        samples=_stack(predictors.values, starts, t_in, 0),
        targets=_stack(target.values, starts, t_in, lag),
        last_observed=_stack(target.values, starts, t_in, 0),
        sample_dates=dates,
        feature_names=list(predictors.feature_names),
    )


def make_inputs(predictors: DatasetCube, t_in: int = 1, lag: int = 1) -> Tuple[np.ndarray, List[int]]:
    """Predictor-only windows (N = T - t_in + 1) and the date each one forecasts"""
    _check_window_args(t_in, lag)
    frames = len(predictors.time_axis)
    n = frames - t_in + 1
    if n < 1:
        raise DataError(f"{frames} frames cannot form a window with t_in={t_in}")
    cadence = predictors.cadence_days or 0
    if lag and not cadence:
        raise DataError("A single-frame cube has no cadence to date a lagged forecast")
    dates = [predictors.time_axis[i + t_in - 1] + lag * cadence for i in range(n)]
    return _stack(predictors.values, np.arange(n), t_in, 0), dates


def _in_range(days: int, start, end) -> bool:
    return to_days(start) <= days <= to_days(end)


def fit_stats(train: WindowedDataset) -> NormStats:
    return NormStats(
        predictors=fit_range(train.samples, train.feature_names),
        target=fit_range(train.targets, ["AER_AI"]),
    )


def apply_stats(windows: WindowedDataset, stats: NormStats) -> WindowedDataset:
    return replace(
        windows,
        samples=apply_range(windows.samples, stats.predictors, clip=True),
        targets=apply_range(windows.targets, stats.target, clip=True),
        last_observed=apply_range(windows.last_observed, stats.target, clip=True),
        stats=stats,
    )


def select_range(windows: WindowedDataset, start, end) -> WindowedDataset:
    keep = [i for i, d in enumerate(windows.sample_dates) if _in_range(d, start, end)]
    return windows.subset(keep)


def split(windows: WindowedDataset, spec: SplitSpec) -> Tuple[WindowedDataset, WindowedDataset]:
    """Assign windows by target date, then normalize both sides with train-only statistics"""
    train = select_range(windows, spec.train_start, spec.train_end)
    test = select_range(windows, spec.test_start, spec.test_end)
    if len(train) == 0:
        raise DataError(f"No windows fall in the train range {spec.train_start}..{spec.train_end}")
    if len(test) == 0:
        raise DataError(f"No windows fall in the test range {spec.test_start}..{spec.test_end}")
    stats = fit_stats(train)
    logger.info("[DATA] split: %d train / %d test windows", len(train), len(test))
    return apply_stats(train, stats), apply_stats(test, stats)
