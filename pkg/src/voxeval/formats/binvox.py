"""Reader/writer for the binvox run-length-encoded occupancy format.

Header is ASCII ("#binvox 1", dim/translate/scale lines, then "data"); the
payload is (value, count) byte pairs. Voxels are stored x-major, then z, with
y fastest, so decoding reshapes to (W, D, H) and swaps the last two axes.
"""

from __future__ import annotations

import io

import numpy as np

from ..errors import FormatError, ValidationError
from ..grid import VoxelGrid


def read_binvox(data: bytes) -> VoxelGrid:
    """Decode a binvox file into a uint8 occupancy grid."""
    stream = io.BytesIO(data)
    magic = stream.readline().strip()
    if magic != b"#binvox 1":
        raise FormatError(f"bad binvox magic line {magic!r}")
    dims = None
    while True:
        line = stream.readline()
        if not line:
            raise FormatError("binvox header ended before a data line")
        fields = line.split()
        if not fields:
            continue
        key = fields[0]
        if key == b"data":
            break
        if key == b"dim":
            try:
                dims = tuple(int(v) for v in fields[1:])
            except ValueError:
                raise FormatError(f"non-integer binvox dims {line!r}") from None
            if len(dims) != 3 or min(dims) < 1:
                raise FormatError(f"bad binvox dims {dims}")
        elif key in (b"translate", b"scale"):
            try:
                [float(v) for v in fields[1:]]
            except ValueError:
                raise FormatError(f"non-numeric binvox header line {line!r}") from None
        else:
            raise FormatError(f"unknown binvox header line {line!r}")
    if dims is None:
        raise FormatError("binvox header has no dim line")
    raw = np.frombuffer(stream.read(), dtype=np.uint8)
    if raw.size % 2 != 0:
        raise FormatError("binvox payload has a dangling half pair")
    values, counts = raw[0::2], raw[1::2]
    total = int(counts.sum(dtype=np.int64))
    expected = dims[0] * dims[1] * dims[2]
    if total != expected:
        raise FormatError(
            f"binvox payload decodes to {total} voxels, dims want {expected}"
        )
    flat = np.repeat((values != 0).astype(np.uint8), counts)
    w, h, d = dims
    grid = flat.reshape((w, d, h)).transpose(0, 2, 1)
    return VoxelGrid(np.ascontiguousarray(grid))


def write_binvox(
    volume: np.ndarray | VoxelGrid,
    translate: tuple[float, float, float] = (0.0, 0.0, 0.0),
    scale: float = 1.0,
) -> bytes:
    """Encode a binary occupancy grid as binvox bytes."""
    a = volume.data if isinstance(volume, VoxelGrid) else np.asarray(volume)
    if a.ndim != 3:
        raise ValidationError("binvox stores single-channel 3D grids")
    if not np.isin(a, (0, 1)).all():
        raise ValidationError("binvox occupancy values must be 0 or 1")
    w, h, d = a.shape
    flat = np.ascontiguousarray(a.astype(np.uint8).transpose(0, 2, 1)).ravel()
    header = (
        b"#binvox 1\n"
        + f"dim {w} {h} {d}\n".encode()
        + f"translate {translate[0]} {translate[1]} {translate[2]}\n".encode()
        + f"scale {scale}\n".encode()
        + b"data\n"
    )
    # run-length encode, splitting runs longer than a byte can count
    edges = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], edges))
    ends = np.concatenate((edges, [flat.size]))
    out = bytearray()
    for s, e in zip(starts, ends):
        value = int(flat[s])
        run = int(e - s)
        while run > 0:
            chunk = min(run, 255)
            out.append(value)
            out.append(chunk)
            run -= chunk
    return header + bytes(out)
