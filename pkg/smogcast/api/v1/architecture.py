import logging
from typing import Optional

from fastapi import APIRouter, Query

from smogcast.models.api import ArchitectureSummary
from smogcast.models.config import ArchitectureConfig
from smogcast.nn.network import layer_summary

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/architecture", tags=["Architecture"])


@router.get("", response_model=ArchitectureSummary)
async def get_architecture(
    height: Optional[int] = Query(None, ge=1),
    width: Optional[int] = Query(None, ge=1),
    timesteps: int = Query(1, ge=1),
):
    """
    Layer table of the default network

    - **height**, **width**: grid extents shown in the output shapes
    - **timesteps**: input window length
    """
    logger.debug("[ARCHITECTURE] grid=%sx%s timesteps=%d", height, width, timesteps)
    return layer_summary(ArchitectureConfig(), height, width, timesteps)
