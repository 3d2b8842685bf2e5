"""
Shared codec for the binary containers (SMGD cubes, SMGC checkpoints).

Layout: 4-byte magic, u32 version, u32 header length, UTF-8 JSON header,
then a little-endian binary32 payload.
"""
import json
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np

from smogcast.core.exceptions import FormatError

PREAMBLE = struct.Struct("<4sII")
PAYLOAD_DTYPE = np.dtype("<f4")


def canonical_json(header: Dict[str, Any]) -> bytes:
    """Byte-stable JSON: sorted keys, no whitespace"""
    return json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def write_container(path: Union[str, Path], magic: bytes, version: int, header: Dict[str, Any], payload: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header_bytes = canonical_json(header)
    body = np.ascontiguousarray(payload, dtype=PAYLOAD_DTYPE).tobytes()
    with open(path, "wb") as f:
        f.write(PREAMBLE.pack(magic, version, len(header_bytes)))
        f.write(header_bytes)
        f.write(body)
    return path


def read_container(path: Union[str, Path], magic: bytes, versions: Tuple[int, ...]) -> Tuple[int, Dict[str, Any], np.ndarray]:
    """Returns (version, parsed header, flat payload); payload length is checked by the caller"""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise FormatError(f"{path} does not exist")
    if len(raw) < PREAMBLE.size:
        raise FormatError(f"{path} is truncated: no preamble")
    found, version, header_len = PREAMBLE.unpack_from(raw, 0)
    if found != magic:
        raise FormatError(f"{path}: bad magic {found!r}, expected {magic!r}")
    if version not in versions:
        raise FormatError(f"{path}: unknown version {version}")
    start = PREAMBLE.size
    end = start + header_len
    if end > len(raw):
        raise FormatError(f"{path} is truncated inside the header")
    try:
        header = json.loads(raw[start:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable header ({exc})")
    if not isinstance(header, dict):
        raise FormatError(f"{path}: header is not an object")
    body = raw[end:]
    if len(body) % PAYLOAD_DTYPE.itemsize:
        raise FormatError(f"{path}: payload is not a whole number of binary32 values")
    payload = np.frombuffer(body, dtype=PAYLOAD_DTYPE).astype(np.float32)
    return version, header, payload


def check_payload_length(path: Union[str, Path], payload: np.ndarray, expected: int) -> None:
    if payload.size < expected:
        raise FormatError(f"{path} is truncated: payload holds {payload.size} values, header declares {expected}")
    if payload.size > expected:
        raise FormatError(f"{path}: {payload.size - expected} trailing values after the declared payload")
