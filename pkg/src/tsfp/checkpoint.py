"""Flat named-tensor checkpoint files.

Layout (all integers u32 little-endian)::

    b"TSFPW1\\n"
    header length, UTF-8 header (a config string, possibly empty)
    repeated until EOF:
        name length, UTF-8 name, rank, dims..., float32 LE values
"""

from __future__ import annotations

import io
import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"TSFPW1\n"


class CheckpointError(ValueError):
    pass


def _u32(n: int) -> bytes:
    return struct.pack("<I", n)


def dumps(tensors: Mapping[str, np.ndarray], header: str = "") -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    h = header.encode("utf-8")
    buf.write(_u32(len(h)))
    buf.write(h)
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        raw = name.encode("utf-8")
        buf.write(_u32(len(raw)))
        buf.write(raw)
        buf.write(_u32(arr.ndim))
        for d in arr.shape:
            buf.write(_u32(d))
        buf.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    return buf.getvalue()


def loads(blob: bytes) -> tuple[dict[str, np.ndarray], str]:
    if not blob.startswith(MAGIC):
        raise CheckpointError("not a TSFPW1 checkpoint (bad magic)")
    pos = len(MAGIC)

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(blob):
            raise CheckpointError("truncated checkpoint")
        chunk = blob[pos : pos + n]
        pos += n
        return chunk

    def u32() -> int:
        return struct.unpack("<I", take(4))[0]

    header = take(u32()).decode("utf-8")
    tensors: dict[str, np.ndarray] = {}
    while pos < len(blob):
        name = take(u32()).decode("utf-8")
        rank = u32()
        dims = tuple(u32() for _ in range(rank))
        count = int(np.prod(dims)) if dims else 1
        values = np.frombuffer(take(4 * count), dtype="<f4").reshape(dims)
        if name in tensors:
            raise CheckpointError(f"duplicate tensor name {name!r}")
        tensors[name] = values.astype(np.float32)
    return tensors, header


def save(path, tensors: Mapping[str, np.ndarray], header: str = "") -> None:
    Path(path).write_bytes(dumps(tensors, header))


def load(path) -> tuple[dict[str, np.ndarray], str]:
    return loads(Path(path).read_bytes())
