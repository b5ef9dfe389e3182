"""Binary tensor blob: magic "MODG", u32 version, then per tensor
(u32 name length, utf-8 name, u32 rank, u32 dims..., little-endian f32 data).

Tensors are written in sorted name order so identical contents always
produce identical bytes.
"""

from __future__ import annotations

import io
import struct

import numpy as np

MAGIC = b"MODG"
VERSION = 1


class BlobError(ValueError):
    """Malformed tensor blob."""


def write_tensor_blob(tensors: dict[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        encoded = name.encode("utf-8")
        buf.write(struct.pack("<I", len(encoded)))
        buf.write(encoded)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(arr.tobytes())
    return buf.getvalue()


def read_tensor_blob(blob: bytes) -> dict[str, np.ndarray]:
    buf = io.BytesIO(blob)
    if buf.read(4) != MAGIC:
        raise BlobError("bad magic; not a MODG tensor blob")
    (version,) = struct.unpack("<I", buf.read(4))
    if version != VERSION:
        raise BlobError(f"unsupported blob version {version}")
    out: dict[str, np.ndarray] = {}
    while True:
        head = buf.read(4)
        if not head:
            break
        (name_len,) = struct.unpack("<I", head)
        name = buf.read(name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", buf.read(4))
        dims = struct.unpack(f"<{rank}I", buf.read(4 * rank))
        count = int(np.prod(dims)) if rank else 1
        payload = buf.read(4 * count)
        if len(payload) != 4 * count:
            raise BlobError(f"truncated payload for tensor '{name}'")
        out[name] = np.frombuffer(payload, dtype="<f4").reshape(dims).copy()
    return out
