from pathlib import Path
from typing import List, Union

import pandas as pd

from smogcast.core.exceptions import FormatError


def write_csv(path: Union[str, Path], frame: pd.DataFrame) -> Path:
    """Every CSV artifact goes through here: no index, LF line ends, shortest round-trip floats"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")
    return path


def read_csv(path: Union[str, Path], columns: List[str]) -> pd.DataFrame:
    """Read a CSV artifact and insist on its exact column header"""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{path} does not exist")
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise FormatError(f"{path}: unreadable CSV ({exc})")
    if list(frame.columns) != columns:
        raise FormatError(f"{path}: expected columns {','.join(columns)}, found {','.join(map(str, frame.columns))}")
    return frame
