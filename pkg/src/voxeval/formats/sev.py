"""SEV interchange format: a minimal dense-volume container.

Layout, all little-endian:
    magic   4 bytes  "SEV1"
    dtype   u8       0 = uint8, 1 = float32
    ndim    u8       3 or 4
    dims    u32 * ndim
    payload row-major (last axis fastest)
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError, ValidationError

MAGIC = b"SEV1"
_CODE_TO_DTYPE = {0: np.dtype("u1"), 1: np.dtype("<f4")}
_KIND_TO_CODE = {"u1": 0, "f4": 1}


def write_sev(volume: np.ndarray) -> bytes:
    """Serialize a 3D/4D uint8 or float32 array."""
    a = np.asarray(volume)
    if a.ndim not in (3, 4):
        raise ValidationError(f"SEV stores 3D or 4D volumes, got {a.ndim}D")
    if min(a.shape) < 1:
        raise ValidationError("SEV dimensions must all be >= 1")
    if a.dtype == np.uint8:
        code, payload = 0, np.ascontiguousarray(a)
    elif a.dtype == np.float32:
        code, payload = 1, np.ascontiguousarray(a, dtype="<f4")
    else:
        raise ValidationError(f"SEV stores uint8 or float32, got {a.dtype}")
    header = MAGIC + struct.pack("<BB", code, a.ndim)
    header += struct.pack(f"<{a.ndim}I", *a.shape)
    return header + payload.tobytes()


def read_sev(data: bytes) -> np.ndarray:
    """Parse SEV bytes back into an array (uint8, or float32 in native order)."""
    if len(data) < 6:
        raise FormatError("truncated SEV header")
    if data[:4] != MAGIC:
        raise FormatError(f"bad SEV magic {data[:4]!r}")
    code, ndim = struct.unpack_from("<BB", data, 4)
    if code not in _CODE_TO_DTYPE:
        raise FormatError(f"unsupported SEV dtype code {code}")
    if ndim not in (3, 4):
        raise FormatError(f"unsupported SEV rank {ndim}")
    header_len = 6 + 4 * ndim
    if len(data) < header_len:
        raise FormatError("truncated SEV dimension list")
    dims = struct.unpack_from(f"<{ndim}I", data, 6)
    if min(dims) < 1:
        raise FormatError("SEV dimensions must all be >= 1")
    dtype = _CODE_TO_DTYPE[code]
    expected = int(np.prod(dims)) * dtype.itemsize
    payload = data[header_len:]
    if len(payload) != expected:
        raise FormatError(
            f"SEV payload length {len(payload)} does not match dims {dims}"
        )
    arr = np.frombuffer(payload, dtype=dtype).reshape(dims)
    # native byte order so downstream numpy code never sees '<f4' surprises
    return arr.astype(arr.dtype.newbyteorder("="), copy=True)


def save_sev(path: str | Path, volume: np.ndarray) -> None:
    Path(path).write_bytes(write_sev(volume))


def load_sev(path: str | Path) -> np.ndarray:
    return read_sev(Path(path).read_bytes())
