"""Binary checkpoint container.

Layout (little-endian, no padding)::

    b"LKFW"  u32 version=1  u32 count
    count x { u16 name_len, name (utf-8), u8 dtype (0 = float32),
              u8 ndim, ndim x u64 dims, prod(dims) x f32 row-major }
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .model import ParamStore
from .tensor import ShapeError, Tensor

MAGIC = b"LKFW"
VERSION = 1
DTYPE_F32 = 0


class CheckpointError(ValueError):
    pass


class BadMagicError(CheckpointError):
    pass


class UnsupportedVersionError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass


class DuplicateNameError(CheckpointError):
    pass


class UnsupportedDtypeError(CheckpointError):
    pass


def encode(store: ParamStore) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(store))]
    for name, t in store.items():
        if t.dtype != np.float32:
            raise UnsupportedDtypeError(f"{name}: only float32 tensors can be saved, got {t.dtype}")
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise CheckpointError(f"parameter name too long: {name[:40]}...")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<BB", DTYPE_F32, t.data.ndim))
        parts.append(struct.pack(f"<{t.data.ndim}Q", *t.shape))
        parts.append(t.data.astype("<f4", copy=False).tobytes(order="C"))
    return b"".join(parts)


class _Reader:
    def __init__(self, buf: bytes) -> None:
        self.buf = buf
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedCheckpointError(
                f"truncated while reading {what}: need {n} bytes at offset {self.pos}, "
                f"file has {len(self.buf)}"
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def decode(buf: bytes) -> ParamStore:
    r = _Reader(buf)
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise BadMagicError(f"not a checkpoint: magic {bytes(buf[:4])!r} != {MAGIC!r}")
    r.pos = 4
    (version,) = r.unpack("<I", "version")
    if version != VERSION:
        raise UnsupportedVersionError(f"checkpoint version {version}, only {VERSION} is supported")
    (count,) = r.unpack("<I", "tensor count")
    store = ParamStore()
    for _ in range(count):
        (name_len,) = r.unpack("<H", "name length")
        name = r.take(name_len, "name").decode("utf-8")
        if name in store:
            raise DuplicateNameError(f"duplicate parameter name {name!r}")
        dtype, ndim = r.unpack("<BB", f"{name} header")
        if dtype != DTYPE_F32:
            raise UnsupportedDtypeError(f"{name}: unknown dtype code {dtype}")
        dims = r.unpack(f"<{ndim}Q", f"{name} dims")
        count_el = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        payload = r.take(4 * count_el, f"{name} payload")
        arr = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(dims)
        try:
            store[name] = Tensor(arr, dtype=np.float32)
        except ShapeError as exc:
            raise CheckpointError(f"{name}: {exc}") from None
    if r.pos != len(buf):
        raise CheckpointError(f"{len(buf) - r.pos} trailing bytes after last tensor")
    return store


def save_checkpoint(store: ParamStore, path: str | os.PathLike) -> None:
    with open(path, "wb") as f:
        f.write(encode(store))


def load_checkpoint(path: str | os.PathLike) -> ParamStore:
    with open(path, "rb") as f:
        return decode(f.read())
