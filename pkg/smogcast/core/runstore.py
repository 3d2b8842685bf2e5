import asyncio
from pathlib import Path
from typing import Any, Dict, List, Optional

from smogcast.config import settings
from smogcast.core.csvio import read_csv
from smogcast.core.exceptions import NotFoundError
from smogcast.models.api import RunInfo
from smogcast.models.history import HISTORY_COLUMNS, METRICS_COLUMNS, SSIM_COLUMNS

CHECKPOINT_FILE = "checkpoint.smgc"
RUN_MARKERS = ("config.json", CHECKPOINT_FILE, "history.csv", "metrics.csv")


class RunStore:
    """Read-only view of the run directories under RUNS_DIR"""

    def __init__(self, root: Optional[str] = None):
        self.root = Path(root or settings.RUNS_DIR)

    def _run_ids(self) -> List[str]:
        if not self.root.is_dir():
            return []
        return sorted(
            p.name for p in self.root.iterdir()
            if p.is_dir() and any(p.joinpath(m).exists() for m in RUN_MARKERS)
        )

    def run_dir(self, run_id: str) -> Path:
        # only names listed under the root resolve, so ids cannot escape it
        if run_id not in self._run_ids():
            raise NotFoundError(f"Run {run_id} not found")
        return self.root / run_id

    def find(self, run_id: str, filename: str) -> Optional[Path]:
        """The artifact in the run directory itself, else the shallowest copy below it"""
        matches = sorted(self.run_dir(run_id).rglob(filename), key=lambda p: (len(p.parts), str(p)))
        return matches[0] if matches else None

    def require(self, run_id: str, filename: str) -> Path:
        path = self.find(run_id, filename)
        if path is None:
            raise NotFoundError(f"Run {run_id} has no {filename}")
        return path

    def _info(self, run_id: str) -> RunInfo:
        return RunInfo(
            run_id=run_id,
            has_checkpoint=self.find(run_id, CHECKPOINT_FILE) is not None,
            has_history=self.find(run_id, "history.csv") is not None,
            has_metrics=self.find(run_id, "metrics.csv") is not None,
        )

    async def get_all(self) -> List[RunInfo]:
        await asyncio.sleep(0)
        return [self._info(run_id) for run_id in self._run_ids()]

    async def get_by_id(self, run_id: str) -> RunInfo:
        await asyncio.sleep(0)
        return self._info(run_id)

    async def read_table(self, run_id: str, filename: str, columns: List[str]) -> List[Dict[str, Any]]:
        await asyncio.sleep(0)
        return read_csv(self.require(run_id, filename), columns).to_dict("records")

    async def history(self, run_id: str) -> List[Dict[str, Any]]:
        return await self.read_table(run_id, "history.csv", HISTORY_COLUMNS)

    async def metrics(self, run_id: str) -> List[Dict[str, Any]]:
        return await self.read_table(run_id, "metrics.csv", METRICS_COLUMNS)

    async def ssim(self, run_id: str) -> List[Dict[str, Any]]:
        return await self.read_table(run_id, "ssim.csv", SSIM_COLUMNS)
