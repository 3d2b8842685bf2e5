from typing import List

from pydantic import BaseModel

HISTORY_COLUMNS: List[str] = ["epoch", "train_loss", "val_loss", "train_mse", "val_mse", "lr", "plateau", "stopped_early"]
METRICS_COLUMNS: List[str] = ["epochs", "loss", "mse", "avg_ssim"]
SSIM_COLUMNS: List[str] = ["timestep_index", "date", "ssim"]
POINT_COLUMNS: List[str] = ["timestep_index", "date", "actual", "predicted"]
FRAME_COLUMNS: List[str] = ["lat_idx", "lon_idx", "actual", "predicted"]


class HistoryRow(BaseModel):
    epoch: int
    train_loss: float
    val_loss: float
    train_mse: float
    val_mse: float
    lr: float
    plateau: bool = False
    stopped_early: bool = False


class EvaluationRow(BaseModel):
    epochs: int
    loss: float
    mse: float
    avg_ssim: float


class SsimRow(BaseModel):
    timestep_index: int
    date: str
    ssim: float
