import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from smogcast.config import settings
from smogcast.core.exceptions import DataError, NonFiniteError, TrainingDivergedError
from smogcast.datapipe.windows import WindowedDataset
from smogcast.metrics import bce, mse
from smogcast.models.config import TrainConfig
from smogcast.models.history import HistoryRow
from smogcast.nn.network import NetworkParams, network_backward, network_forward, network_forward_cached
from smogcast.training.callbacks import EarlyStopping, ReduceLROnPlateau
from smogcast.training.generator import DataGenerator
from smogcast.training.optim import AdamState, adam_step, clip_by_global_norm

logger = logging.getLogger(__name__)


class TrainResult(NamedTuple):
    params: NetworkParams
    history: List[HistoryRow]
    optimizer: AdamState


def predict_samples(params: NetworkParams, samples: np.ndarray, workers: Optional[int] = None) -> np.ndarray:
    """Infer-mode forward of every sample, one at a time, in sample order"""
    if len(samples) == 0:
        raise DataError("Nothing to predict")
    workers = workers or settings.worker_count()

    def one(i: int) -> np.ndarray:
        return network_forward(samples[i:i + 1], params, mode="infer")[0]

    # infer mode only reads params, so samples can run concurrently
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outputs = list(pool.map(one, range(len(samples))))
    return np.stack(outputs)


def evaluate_split(params: NetworkParams, dataset: WindowedDataset, workers: Optional[int] = None) -> Tuple[float, float]:
    """Full-split BCE and MSE in infer mode"""
    predictions = predict_samples(params, dataset.samples, workers)
    return bce(dataset.targets, predictions), mse(dataset.targets, predictions)


def train(
    params: NetworkParams,
    train_set: WindowedDataset,
    val_set: WindowedDataset,
    cfg: TrainConfig,
    optimizer: Optional[AdamState] = None,
    on_epoch: Optional[Callable[[HistoryRow], None]] = None,
) -> TrainResult:
    """
    Mini-batch training with Adam, global-norm clipping, learning-rate
    reduction on plateau and early stopping, validating once per epoch.
    Mutates and returns params.
    """
    if len(train_set) == 0 or len(val_set) == 0:
        raise DataError("Training needs non-empty train and validation splits")

    trainable = params.trainable()
    optimizer = optimizer or AdamState.create(trainable, cfg)
    generator = DataGenerator(train_set, cfg.batch_size, cfg.seed)
    early_stop = EarlyStopping(cfg.early_stop)
    plateau = ReduceLROnPlateau(cfg.plateau)
    history: List[HistoryRow] = []

    for epoch in range(1, cfg.epochs + 1):
        losses, errors = [], []
        for batch_index, (x, y) in enumerate(generator.epoch(epoch)):
            try:
                out, cache = network_forward_cached(x, params, mode="train")
                loss, grads = network_backward(x, y, params, cache=cache)
            except NonFiniteError:
                raise TrainingDivergedError(epoch, batch_index, math.nan)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, batch_index, loss)
            grads = clip_by_global_norm(grads, optimizer.clipnorm)
            adam_step(trainable, grads, optimizer)
            losses.append(loss)
            errors.append(mse(y, out))

        val_loss, val_mse = evaluate_split(params, val_set)
        lr_used = optimizer.lr
        next_lr, reduced = plateau.update(epoch, val_loss, lr_used)
        stop = early_stop.update(epoch, val_loss)
        row = HistoryRow(
            epoch=epoch,
            train_loss=float(np.mean(losses)),
            val_loss=val_loss,
            train_mse=float(np.mean(errors)),
            val_mse=val_mse,
            lr=lr_used,
            plateau=reduced,
            stopped_early=stop,
        )
        history.append(row)
        logger.info(
            "[EPOCH %d/%d] train_loss=%.6f val_loss=%.6f train_mse=%.6f val_mse=%.6f lr=%g",
            epoch, cfg.epochs, row.train_loss, row.val_loss, row.train_mse, row.val_mse, lr_used,
        )
        if on_epoch is not None:
            on_epoch(row)
        optimizer.lr = next_lr
        if stop:
            break

    return TrainResult(params, history, optimizer)
