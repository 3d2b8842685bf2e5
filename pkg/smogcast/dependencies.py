from fastapi import Depends

from smogcast.core.runstore import RunStore


async def get_run_store() -> RunStore:
    """Run store over settings.RUNS_DIR; tests override this dependency"""
    return RunStore()


async def get_run_dir(run_id: str, store: RunStore = Depends(get_run_store)) -> str:
    """Ensures the run exists before a handler reads from it"""
    store.run_dir(run_id)
    return run_id
