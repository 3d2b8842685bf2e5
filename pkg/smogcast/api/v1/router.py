from fastapi import APIRouter

from smogcast.api.v1 import architecture, runs

router = APIRouter()

router.include_router(architecture.router)
router.include_router(runs.router)
