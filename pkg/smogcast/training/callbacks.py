import logging
import math
from typing import Tuple

from smogcast.models.config import EarlyStopConfig, PlateauConfig

logger = logging.getLogger(__name__)


class EarlyStopping:
    """Stops once the monitored loss fails to improve for `patience` epochs"""

    def __init__(self, cfg: EarlyStopConfig):
        self.patience = cfg.patience
        self.min_delta = cfg.min_delta
        self.best = math.inf
        self.wait = 0

    def update(self, epoch: int, current: float) -> bool:
        if current < self.best - self.min_delta:
            self.best = current
            self.wait = 0
            return False
        self.wait += 1
        if self.wait >= self.patience:
            logger.info("[EARLY STOP] epoch %d: val_loss has not improved for %d epochs (best %r)", epoch, self.wait, self.best)
            return True
        return False


class ReduceLROnPlateau:
    """Multiplies the learning rate by `factor` after `patience` epochs without improvement"""

    def __init__(self, cfg: PlateauConfig):
        self.factor = cfg.factor
        self.patience = cfg.patience
        self.min_lr = cfg.min_lr
        self.min_delta = cfg.min_delta
        self.best = math.inf
        self.wait = 0

    def update(self, epoch: int, current: float, lr: float) -> Tuple[float, bool]:
        """Returns (learning rate for the next epoch, whether a reduction fired)"""
        if current < self.best - self.min_delta:
            self.best = current
            self.wait = 0
            return lr, False
        self.wait += 1
        if self.wait < self.patience:
            return lr, False
        self.wait = 0
        if lr <= self.min_lr:
            return lr, False
        new_lr = max(lr * self.factor, self.min_lr)
        logger.info("[PLATEAU] epoch %d: learning rate %r -> %r", epoch, lr, new_lr)
        return new_lr, True
