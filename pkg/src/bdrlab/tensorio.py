"""Minimal binary tensor container used by the CLI.

Layout (little-endian): magic "BDRT", version u16, rank u16, one u64 per
dimension, then float32 payload in row-major order.
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"BDRT"
VERSION = 1


class TensorFileError(ValueError):
    pass


def write_tensor(path, array) -> None:
    a = np.ascontiguousarray(np.asarray(array, dtype=np.float32))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HH", VERSION, a.ndim))
        for d in a.shape:
            fh.write(struct.pack("<Q", d))
        fh.write(a.tobytes())


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8 or data[:4] != MAGIC:
        raise TensorFileError(f"{path}: not a BDRT tensor file (bad magic)")
    version, rank = struct.unpack_from("<HH", data, 4)
    if version != VERSION:
        raise TensorFileError(f"{path}: unsupported version {version}")
    header_end = 8 + 8 * rank
    if len(data) < header_end:
        raise TensorFileError(f"{path}: truncated dimension header")
    dims = struct.unpack_from(f"<{rank}Q", data, 8) if rank else ()
    count = 1
    for d in dims:
        count *= d
    expected = header_end + 4 * count
    if len(data) != expected:
        raise TensorFileError(
            f"{path}: payload length {len(data) - header_end} does not match "
            f"dims {dims} ({4 * count} bytes expected)")
    payload = np.frombuffer(data, dtype="<f4", offset=header_end, count=count)
    return payload.reshape(dims).astype(np.float64)
