"""Binary checkpoint files.

Layout, all little-endian::

    b"PGAN" | u16 version | u32 header length | header JSON (UTF-8)
    u32 record count | records

    record: u16 name length | name (UTF-8) | u8 rank | rank x u32 extents
            | float32 values in C order
"""
import json
import struct
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from consts import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from exceptions import StorageError
from training.exceptions import CheckpointCorruptedError, CheckpointFormatError
from training.schemas import Checkpoint, CheckpointHeader

STORAGE_DTYPE = np.dtype("<f4")


class _Reader:
    def __init__(self, payload: bytes, path: Path):
        self._payload = payload
        self._offset = 0
        self._path = path

    def take(self, count: int) -> bytes:
        end = self._offset + count
        if end > len(self._payload):
            raise CheckpointCorruptedError(f"{self._path} is truncated at byte {len(self._payload)}")
        chunk = self._payload[self._offset:end]
        self._offset = end
        return chunk

    def unpack(self, fmt: str) -> tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    @property
    def exhausted(self) -> bool:
        return self._offset == len(self._payload)


def encode_checkpoint(checkpoint: Checkpoint) -> bytes:
    header = json.dumps(checkpoint.header.model_dump(mode="json"), sort_keys=True).encode("utf-8")
    chunks = [
        CHECKPOINT_MAGIC,
        struct.pack("<H", checkpoint.header.version),
        struct.pack("<I", len(header)),
        header,
        struct.pack("<I", len(checkpoint.tensors)),
    ]
    for name in sorted(checkpoint.tensors):
        value = np.ascontiguousarray(checkpoint.tensors[name], dtype=STORAGE_DTYPE)
        encoded_name = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(struct.pack("<B", value.ndim))
        chunks.append(struct.pack(f"<{value.ndim}I", *value.shape))
        chunks.append(value.tobytes())
    return b"".join(chunks)


def decode_checkpoint(payload: bytes, path: Path = Path("<memory>")) -> Checkpoint:
    reader = _Reader(payload, path)
    if len(payload) < len(CHECKPOINT_MAGIC) + 2 or payload[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError(f"{path} does not start with {CHECKPOINT_MAGIC!r}")
    reader.take(len(CHECKPOINT_MAGIC))
    (version,) = reader.unpack("<H")
    if version != CHECKPOINT_VERSION:
        raise CheckpointFormatError(f"{path} has version {version}, expected {CHECKPOINT_VERSION}")

    (header_length,) = reader.unpack("<I")
    try:
        header = CheckpointHeader(**json.loads(reader.take(header_length).decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError, ValidationError, TypeError) as error:
        raise CheckpointCorruptedError(f"{path} has an unreadable header: {error}") from error

    (count,) = reader.unpack("<I")
    tensors = {}
    for _ in range(count):
        (name_length,) = reader.unpack("<H")
        name = reader.take(name_length).decode("utf-8", errors="replace")
        (rank,) = reader.unpack("<B")
        shape = reader.unpack(f"<{rank}I")
        data = reader.take(int(np.prod(shape, dtype=np.int64)) * STORAGE_DTYPE.itemsize)
        tensors[name] = np.frombuffer(data, dtype=STORAGE_DTYPE).reshape(shape).astype(np.float32)
    if not reader.exhausted:
        raise CheckpointCorruptedError(f"{path} has trailing bytes after {count} records")
    return Checkpoint(header=header, tensors=tensors)


def checkpoint_save(path: Path, checkpoint: Checkpoint) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_checkpoint(checkpoint))
    except OSError as error:
        raise StorageError(f"cannot write {path}: {error}") from error
    return path


def checkpoint_load(path: Path) -> Checkpoint:
    """Read a checkpoint.

    Raises:
        CheckpointFormatError: On a wrong magic or version.
        CheckpointCorruptedError: On truncation or an unreadable header.
        StorageError: If the file cannot be read.
    """
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as error:
        raise StorageError(f"cannot read {path}: {error}") from error
    return decode_checkpoint(payload, path)
