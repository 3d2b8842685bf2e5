from typing import List, Optional

from pydantic import BaseModel

from smogcast.models.config import RunConfig
from smogcast.models.dataset import NormStats


class TensorEntry(BaseModel):
    name: str
    shape: List[int]
    offset: int  # in values, from the start of the payload
    count: int


class OptimizerHeader(BaseModel):
    step_count: int
    lr: float
    beta1: float
    beta2: float
    epsilon: float
    clipnorm: float


class CheckpointHeader(BaseModel):
    run: RunConfig
    config_fingerprint: str
    tensors: List[TensorEntry]
    optimizer: Optional[OptimizerHeader] = None
    norm_stats: Optional[NormStats] = None
    epochs_trained: int = 0
    payload_crc32: int = 0
