"""
Test-split scoring: BCE, MSE and per-timestep SSIM for a trained network and
for the persistence forecast (the last observed target frame carried forward).
"""
import logging
from pathlib import Path
from typing import List, NamedTuple, Optional, Union

import numpy as np
import pandas as pd

from smogcast.core.csvio import write_csv
from smogcast.datapipe.windows import WindowedDataset
from smogcast.metrics import bce, mse, ssim_series
from smogcast.models.config import SsimConfig
from smogcast.models.history import METRICS_COLUMNS, SSIM_COLUMNS, EvaluationRow, SsimRow
from smogcast.nn.network import NetworkParams
from smogcast.training.trainer import predict_samples

logger = logging.getLogger(__name__)


class Evaluation(NamedTuple):
    metrics: EvaluationRow
    ssim_rows: List[SsimRow]
    predictions: np.ndarray  # (N, t_in, H, W, 1), normalized units


def score(predictions: np.ndarray, dataset: WindowedDataset, epochs: int, cfg: Optional[SsimConfig] = None) -> Evaluation:
    """
    Loss and MSE over every element; SSIM per window on its last step, so
    the series has one value per test window.
    """
    series = ssim_series(predictions[:, -1], dataset.targets[:, -1], cfg)
    dates = dataset.dates()
    rows = [SsimRow(timestep_index=t, date=dates[t], ssim=value) for t, value in series.values]
    metrics = EvaluationRow(
        epochs=epochs,
        loss=bce(dataset.targets, predictions),
        mse=mse(dataset.targets, predictions),
        avg_ssim=series.mean,
    )
    return Evaluation(metrics, rows, predictions)


def evaluate_model(
    params: NetworkParams,
    dataset: WindowedDataset,
    epochs: int,
    cfg: Optional[SsimConfig] = None,
    workers: Optional[int] = None,
) -> Evaluation:
    predictions = predict_samples(params, dataset.samples, workers)
    result = score(predictions, dataset, epochs, cfg)
    m = result.metrics
    logger.info("[EVAL] model: loss=%r mse=%r avg_ssim=%r over %d windows", m.loss, m.mse, m.avg_ssim, len(dataset))
    return result


def persistence_baseline(dataset: WindowedDataset, cfg: Optional[SsimConfig] = None) -> Evaluation:
    """Scores last_observed as the forecast; reported with epochs = 0"""
    result = score(dataset.last_observed, dataset, 0, cfg)
    m = result.metrics
    logger.info("[EVAL] persistence: loss=%r mse=%r avg_ssim=%r", m.loss, m.mse, m.avg_ssim)
    return result


def write_metrics_csv(path: Union[str, Path], row: EvaluationRow) -> Path:
    return write_csv(path, pd.DataFrame([row.model_dump()], columns=METRICS_COLUMNS))


def write_ssim_csv(path: Union[str, Path], rows: List[SsimRow]) -> Path:
    return write_csv(path, pd.DataFrame([r.model_dump() for r in rows], columns=SSIM_COLUMNS))
