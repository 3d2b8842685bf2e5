"""
SMGC checkpoint files: the shared container preamble, a canonical JSON
header (run config, fingerprint, tensor directory, optimizer scalars,
normalization statistics) and contiguous binary32 tensor blocks in directory
order.
"""
import logging
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
from pydantic import ValidationError

from smogcast.core.container import check_payload_length, read_container, write_container
from smogcast.core.exceptions import FingerprintMismatchError, FormatError, ShapeMismatchError
from smogcast.models.checkpoint import CheckpointHeader, OptimizerHeader, TensorEntry
from smogcast.models.config import RunConfig
from smogcast.models.dataset import NormStats
from smogcast.nn.network import NetworkParams
from smogcast.training.optim import AdamState

logger = logging.getLogger(__name__)

SMGC_MAGIC = b"SMGC"
SMGC_VERSION = 1


@dataclass
class Checkpoint:
    params: NetworkParams
    run: RunConfig
    config_fingerprint: str
    optimizer: Optional[AdamState] = None
    norm_stats: Optional[NormStats] = None
    epochs_trained: int = 0


def _blocks(params: NetworkParams, optimizer: Optional[AdamState]) -> Dict[str, np.ndarray]:
    blocks = dict(params.named_tensors())
    if optimizer is not None:
        for name in params.trainable_names():
            blocks[f"adam.m.{name}"] = optimizer.m[name]
        for name in params.trainable_names():
            blocks[f"adam.v.{name}"] = optimizer.v[name]
    return blocks


def save_checkpoint(
    path: Union[str, Path],
    params: NetworkParams,
    run: RunConfig,
    optimizer: Optional[AdamState] = None,
    norm_stats: Optional[NormStats] = None,
    epochs_trained: int = 0,
) -> Path:
    if params.architecture != run.architecture:
        raise FingerprintMismatchError("Parameters were built for a different architecture than the run config declares")
    entries, chunks, offset = [], [], 0
    for name, tensor in _blocks(params, optimizer).items():
        flat = np.ascontiguousarray(tensor, dtype="<f4").ravel()
        entries.append(TensorEntry(name=name, shape=list(tensor.shape), offset=offset, count=flat.size))
        chunks.append(flat)
        offset += flat.size
    payload = np.concatenate(chunks) if chunks else np.zeros(0, dtype="<f4")

    opt_header = None
    if optimizer is not None:
        opt_header = OptimizerHeader(
            step_count=optimizer.step_count,
            lr=optimizer.lr,
            beta1=optimizer.beta1,
            beta2=optimizer.beta2,
            epsilon=optimizer.epsilon,
            clipnorm=optimizer.clipnorm,
        )
    header = CheckpointHeader(
        run=run,
        config_fingerprint=run.fingerprint(),
        tensors=entries,
        optimizer=opt_header,
        norm_stats=norm_stats,
        epochs_trained=epochs_trained,
        payload_crc32=zlib.crc32(payload.tobytes()),
    )
    path = write_container(path, SMGC_MAGIC, SMGC_VERSION, header.model_dump(mode="json"), payload)
    logger.info("[CHECKPOINT] saved %s (%d tensors, %d values)", path, len(entries), payload.size)
    return path


def load_checkpoint(path: Union[str, Path], expected_fingerprint: Optional[str] = None) -> Checkpoint:
    """Validates magic, version, fingerprint, payload size and checksum, and tensor shapes"""
    _, raw_header, payload = read_container(path, SMGC_MAGIC, (SMGC_VERSION,))
    try:
        header = CheckpointHeader.model_validate(raw_header)
    except ValidationError as exc:
        raise FormatError(f"{path}: invalid checkpoint header: {exc.errors()[0]['msg']}")

    fingerprint = header.run.fingerprint()
    if fingerprint != header.config_fingerprint:
        raise FingerprintMismatchError(f"{path}: stored fingerprint does not match the stored config")
    if expected_fingerprint is not None and fingerprint != expected_fingerprint:
        raise FingerprintMismatchError(f"{path}: checkpoint fingerprint {fingerprint[:12]} differs from the expected {expected_fingerprint[:12]}")

    offset = 0
    for entry in header.tensors:
        if entry.offset != offset or entry.count != int(np.prod(entry.shape, dtype=np.int64)):
            raise FormatError(f"{path}: tensor directory entry {entry.name} is inconsistent")
        offset += entry.count
    check_payload_length(path, payload, offset)
    if zlib.crc32(payload.astype("<f4").tobytes()) != header.payload_crc32:
        raise FormatError(f"{path}: payload checksum mismatch")

    blocks = {e.name: payload[e.offset:e.offset + e.count].reshape(e.shape).copy() for e in header.tensors}
    tensors = {name: t for name, t in blocks.items() if not name.startswith("adam.")}
    try:
        params = NetworkParams.from_tensors(header.run.architecture, tensors)
    except ShapeMismatchError as exc:
        raise FormatError(f"{path}: {exc.detail}")

    optimizer = None
    if header.optimizer is not None:
        names = params.trainable_names()
        try:
            m = {name: blocks[f"adam.m.{name}"] for name in names}
            v = {name: blocks[f"adam.v.{name}"] for name in names}
        except KeyError as exc:
            raise FormatError(f"{path}: optimizer state lacks {exc.args[0]}")
        optimizer = AdamState(m=m, v=v, **header.optimizer.model_dump())

    logger.info("[CHECKPOINT] loaded %s (epochs trained: %d)", path, header.epochs_trained)
    return Checkpoint(
        params=params,
        run=header.run,
        config_fingerprint=fingerprint,
        optimizer=optimizer,
        norm_stats=header.norm_stats,
        epochs_trained=header.epochs_trained,
    )
