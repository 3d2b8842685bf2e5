import logging
from typing import List

from fastapi import APIRouter, Depends

from smogcast.core.runstore import CHECKPOINT_FILE, RunStore
from smogcast.dependencies import get_run_dir, get_run_store
from smogcast.models.api import RunInfo, RunSummary
from smogcast.models.history import EvaluationRow, HistoryRow, SsimRow
from smogcast.nn.network import layer_summary
from smogcast.training.checkpoint import load_checkpoint

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/runs", tags=["Runs"])


@router.get("", response_model=List[RunInfo])
async def list_runs(store: RunStore = Depends(get_run_store)):
    """Every run directory under RUNS_DIR and which artifacts it holds"""
    return await store.get_all()


@router.get("/{run_id}", response_model=RunInfo)
async def get_run(run_id: str = Depends(get_run_dir), store: RunStore = Depends(get_run_store)):
    return await store.get_by_id(run_id)


@router.get("/{run_id}/summary", response_model=RunSummary)
async def get_run_summary(run_id: str = Depends(get_run_dir), store: RunStore = Depends(get_run_store)):
    """Checkpoint provenance plus the layer table of its architecture"""
    ckpt = load_checkpoint(store.require(run_id, CHECKPOINT_FILE))
    logger.info("[RUNS] summary of %s", run_id)
    return RunSummary(
        run_id=run_id,
        epochs_trained=ckpt.epochs_trained,
        config_fingerprint=ckpt.config_fingerprint,
        architecture=layer_summary(ckpt.run.architecture, ckpt.run.grid.height, ckpt.run.grid.width, ckpt.run.window.t_in),
    )


@router.get("/{run_id}/history", response_model=List[HistoryRow])
async def get_run_history(run_id: str = Depends(get_run_dir), store: RunStore = Depends(get_run_store)):
    return await store.history(run_id)


@router.get("/{run_id}/metrics", response_model=List[EvaluationRow])
async def get_run_metrics(run_id: str = Depends(get_run_dir), store: RunStore = Depends(get_run_store)):
    return await store.metrics(run_id)


@router.get("/{run_id}/ssim", response_model=List[SsimRow])
async def get_run_ssim(run_id: str = Depends(get_run_dir), store: RunStore = Depends(get_run_store)):
    return await store.ssim(run_id)
