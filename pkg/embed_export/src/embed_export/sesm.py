"""Writer for the SESM embedding container.

Layout (little-endian): magic ``SESM``, u16 version (1), u16 flags (0),
u64 row count, u32 dim, 4 pad bytes, then float32 rows in row-major
order. 24-byte header total.
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"SESM"
VERSION = 1
_HEADER = struct.Struct("<4sHHQI4x")


def write_sesm(matrix: np.ndarray, path: str | Path) -> None:
    """Atomically write ``matrix`` (n, d) as float32 SESM."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise ValueError("embedding matrix contains non-finite values")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, 0,
                              matrix.shape[0], matrix.shape[1]))
        fh.write(matrix.tobytes())
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def read_sesm(path: str | Path) -> np.ndarray:
    """Read a SESM file back into an (n, d) float32 matrix."""
    raw = Path(path).read_bytes()
    magic, version, _flags, count, dim = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported version {version}")
    data = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    if data.size != count * dim:
        raise ValueError(f"payload holds {data.size} floats, "
                         f"header promises {count}x{dim}")
    return data.reshape(count, dim).copy()
