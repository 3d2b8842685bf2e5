from typing import List, Optional

from pydantic import BaseModel


class LayerRow(BaseModel):
    name: str
    layer_type: str
    output_shape: List[Optional[int]]
    params: int
    trainable: int


class ArchitectureSummary(BaseModel):
    layers: List[LayerRow]
    total_params: int
    trainable_params: int
    non_trainable_params: int


class RunInfo(BaseModel):
    run_id: str
    has_checkpoint: bool
    has_history: bool
    has_metrics: bool


class RunSummary(BaseModel):
    run_id: str
    epochs_trained: int
    config_fingerprint: str
    architecture: ArchitectureSummary
