from pathlib import Path
from typing import Iterable, List, Union

import pandas as pd

from smogcast.core.csvio import read_csv, write_csv
from smogcast.models.history import HISTORY_COLUMNS, HistoryRow

BOOL_COLUMNS = ("plateau", "stopped_early")


def history_frame(rows: Iterable[HistoryRow]) -> pd.DataFrame:
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=HISTORY_COLUMNS)
    for column in BOOL_COLUMNS:
        frame[column] = frame[column].astype(int)
    return frame


def write_history_csv(path: Union[str, Path], rows: Iterable[HistoryRow]) -> Path:
    """One row per completed epoch"""
    return write_csv(path, history_frame(rows))


def read_history_csv(path: Union[str, Path]) -> List[HistoryRow]:
    frame = read_csv(path, HISTORY_COLUMNS)
    return [HistoryRow(**{k: (bool(v) if k in BOOL_COLUMNS else v) for k, v in rec.items()}) for rec in frame.to_dict("records")]
