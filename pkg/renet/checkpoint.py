# MIT License
# Copyright (c) 2026 The renet authors
# See LICENSE for the full license text.

"""Checkpoint container.

Little-endian layout::

    magic     4 bytes  b"RNCK"
    version   u32      1
    meta_len  u32
    meta      UTF-8 JSON: config, epoch, best_valid_error, best_epoch,
              epochs_since_best, adam {t, hyperparameters}, rng
    count     u32
    count x { name_len u32, name, dtype u8 (0 f32, 1 f64),
              ndim u32, shape ndim x u32, nbytes u64, data }

Tensors are named ``param/<name>``, ``adam.m/<name>`` and ``adam.v/<name>``.
Files are written to a temporary sibling and renamed into place.
"""

import json
import logging
import os
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from renet.config import ModelConfig
from renet.errors import CheckpointMismatchError, FormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MAGIC = b"RNCK"
VERSION = 1
_DTYPE_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}
_CODE_DTYPES = {code: dtype for dtype, code in _DTYPE_CODES.items()}


@dataclass
class Checkpoint:
    """Everything needed to resume or evaluate a run"""

    config: dict[str, Any]
    epoch: int = 0
    best_valid_error: Optional[float] = None
    best_epoch: Optional[int] = None
    epochs_since_best: int = 0
    adam: dict[str, Any] = field(default_factory=dict)
    rng: dict[str, Any] = field(default_factory=dict)
    params: dict[str, np.ndarray] = field(default_factory=dict)
    adam_m: dict[str, np.ndarray] = field(default_factory=dict)
    adam_v: dict[str, np.ndarray] = field(default_factory=dict)

    def meta(self) -> dict[str, Any]:
        values = asdict(self)
        for key in ("params", "adam_m", "adam_v"):
            values.pop(key)
        return values


class _Reader:
    def __init__(self, raw: bytes):
        self.raw = raw
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.raw):
            raise FormatError(f"Checkpoint truncated while reading {what}", self.offset)
        chunk = self.raw[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def _tensor_entries(ckpt: Checkpoint):
    for prefix, tensors in (("param", ckpt.params), ("adam.m", ckpt.adam_m), ("adam.v", ckpt.adam_v)):
        for name, value in tensors.items():
            yield f"{prefix}/{name}", value


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    meta = json.dumps(ckpt.meta(), sort_keys=True).encode("utf-8")
    entries = list(_tensor_entries(ckpt))
    chunks = [MAGIC, struct.pack("<II", VERSION, len(meta)), meta, struct.pack("<I", len(entries))]
    for name, value in entries:
        if np.dtype(value.dtype) not in _DTYPE_CODES:
            raise FormatError(f"Tensor '{name}' has unsupported dtype {value.dtype}", 0)
        encoded = name.encode("utf-8")
        data = np.ascontiguousarray(value).astype(value.dtype.newbyteorder("<"), copy=False)
        chunks += [
            struct.pack("<I", len(encoded)),
            encoded,
            struct.pack("<BI", _DTYPE_CODES[np.dtype(value.dtype)], value.ndim),
            struct.pack(f"<{value.ndim}I", *value.shape),
            struct.pack("<Q", data.nbytes),
            data.tobytes(),
        ]
    return b"".join(chunks)


def decode_checkpoint(raw: bytes) -> Checkpoint:
    reader = _Reader(raw)
    if reader.take(4, "magic") != MAGIC:
        raise FormatError("Not a renet checkpoint (bad magic)", 0)
    version, meta_len = reader.unpack("<II", "header")
    if version != VERSION:
        raise FormatError(f"Unsupported checkpoint version {version}", 4)
    meta_offset = reader.offset
    try:
        meta = json.loads(reader.take(meta_len, "metadata").decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"Checkpoint metadata is not valid JSON: {exc}", meta_offset) from exc
    (count,) = reader.unpack("<I", "tensor count")
    groups: dict[str, dict[str, np.ndarray]] = {"param": {}, "adam.m": {}, "adam.v": {}}
    for _ in range(count):
        start = reader.offset
        (name_len,) = reader.unpack("<I", "name length")
        name = reader.take(name_len, "tensor name").decode("utf-8")
        code, ndim = reader.unpack("<BI", f"header of '{name}'")
        if code not in _CODE_DTYPES:
            raise FormatError(f"Tensor '{name}' has unknown dtype code {code}", start)
        shape = reader.unpack(f"<{ndim}I", f"shape of '{name}'")
        (nbytes,) = reader.unpack("<Q", f"size of '{name}'")
        dtype = _CODE_DTYPES[code]
        if nbytes != int(np.prod(shape)) * dtype.itemsize:
            raise FormatError(f"Tensor '{name}' size {nbytes} does not match shape {shape}", start)
        data = np.frombuffer(reader.take(nbytes, f"data of '{name}'"), dtype=dtype.newbyteorder("<"))
        prefix, _, key = name.partition("/")
        if prefix not in groups or not key:
            raise FormatError(f"Unexpected tensor name '{name}'", start)
        groups[prefix][key] = data.astype(dtype).reshape(shape)
    if reader.offset != len(raw):
        raise FormatError("Trailing bytes after the last tensor", reader.offset)
    try:
        return Checkpoint(
            params=groups["param"], adam_m=groups["adam.m"], adam_v=groups["adam.v"], **meta
        )
    except TypeError as exc:
        raise FormatError(f"Checkpoint metadata has unexpected keys: {exc}", meta_offset) from exc


def save_checkpoint(path: PathLike, ckpt: Checkpoint) -> Path:
    """Atomically write ``ckpt`` to ``path``"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f"{path.name}.tmp")
    with tmp.open("wb") as handle:
        handle.write(encode_checkpoint(ckpt))
        handle.flush()
        os.fsync(handle.fileno())
    os.replace(tmp, path)
    logger.debug("Wrote checkpoint %s (epoch %d)", path, ckpt.epoch)
    return path


def load_checkpoint(path: PathLike) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Checkpoint '{path}' was not found.")
    return decode_checkpoint(path.read_bytes())


def capture(model, optimizer, epoch: int, rng_snapshot: dict, **progress: Any) -> Checkpoint:
    """Snapshot a model, its Adam optimizer and the training generator"""
    state = optimizer.state_dict()
    return Checkpoint(
        config=model.cfg.to_dict(),
        epoch=epoch,
        adam={"t": state["t"], **asdict(optimizer.cfg)},
        rng=rng_snapshot,
        params={name: value.copy() for name, value in model.params.items()},
        adam_m=state["m"],
        adam_v=state["v"],
        **progress,
    )


def check_architecture(ckpt: Checkpoint, cfg) -> None:
    """Raise CheckpointMismatchError unless the checkpoint matches cfg's architecture"""
    saved = ModelConfig.from_dict(ckpt.config).architecture()
    current = cfg.architecture()
    diffs = [key for key in current if saved.get(key) != current[key]]
    if diffs:
        detail = ", ".join(f"{key}: {saved.get(key)} != {current[key]}" for key in diffs)
        raise CheckpointMismatchError(f"Checkpoint architecture differs ({detail})")


def restore(ckpt: Checkpoint, model, optimizer=None) -> None:
    """Load parameters (and optimizer moments) into a live model"""
    check_architecture(ckpt, model.cfg)
    model.load_parameters(ckpt.params)
    if optimizer is not None:
        optimizer.load_state_dict({"t": ckpt.adam.get("t", 0), "m": ckpt.adam_m, "v": ckpt.adam_v})
