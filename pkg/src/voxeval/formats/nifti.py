"""Minimal NIfTI-1 reader: single-file images, u8/i16/f32, either byte order."""

from __future__ import annotations

import gzip
import struct

import numpy as np

from ..errors import FormatError
from ..grid import VoxelGrid

HEADER_SIZE = 348
MIN_VOX_OFFSET = 352
_DATATYPES = {2: "u1", 4: "i2", 16: "f4"}
GZIP_MAGIC = b"\x1f\x8b"


def read_nifti(data: bytes, gzipped: bool | None = None) -> VoxelGrid:
    """Decode a NIfTI-1 volume to float32.

    Args:
        data: raw file bytes, optionally gzip-compressed.
        gzipped: force (de)compression; None sniffs the gzip magic.

    Returns:
        VoxelGrid with dims from dim[1..3] and dim[4] as channels when the
        image is 4D. Values are converted to float32 (exact for u8 and i16).
    """
    if gzipped is None:
        gzipped = data[:2] == GZIP_MAGIC
    if gzipped:
        try:
            data = gzip.decompress(data)
        except (OSError, EOFError) as exc:
            raise FormatError(f"bad gzip envelope: {exc}") from None
    if len(data) < HEADER_SIZE:
        raise FormatError(f"truncated NIfTI header ({len(data)} bytes)")
    if struct.unpack_from("<i", data, 0)[0] == HEADER_SIZE:
        end = "<"
    elif struct.unpack_from(">i", data, 0)[0] == HEADER_SIZE:
        end = ">"
    else:
        raise FormatError("not a NIfTI-1 file (sizeof_hdr != 348 in either order)")
    magic = data[344:348]
    if magic != b"n+1\x00":
        raise FormatError(f"unsupported NIfTI magic {magic!r}; need single-file n+1")
    dim = struct.unpack_from(end + "8h", data, 40)
    ndim = dim[0]
    if ndim not in (3, 4):
        raise FormatError(f"unsupported NIfTI dimensionality {ndim}; need 3 or 4")
    shape = tuple(int(v) for v in dim[1 : 1 + ndim])
    if min(shape) < 1:
        raise FormatError(f"bad NIfTI dims {shape}")
    datatype, bitpix = struct.unpack_from(end + "2h", data, 70)
    if datatype not in _DATATYPES:
        raise FormatError(f"unsupported NIfTI datatype code {datatype}")
    dtype = np.dtype(end + _DATATYPES[datatype])
    if bitpix != dtype.itemsize * 8:
        raise FormatError(f"bitpix {bitpix} inconsistent with datatype {datatype}")
    vox_offset = int(struct.unpack_from(end + "f", data, 108)[0])
    if vox_offset < MIN_VOX_OFFSET:
        raise FormatError(f"vox_offset {vox_offset} below minimum {MIN_VOX_OFFSET}")
    count = int(np.prod(shape))
    end_byte = vox_offset + count * dtype.itemsize
    if len(data) < end_byte:
        raise FormatError("truncated NIfTI voxel data")
    arr = np.frombuffer(data[vox_offset:end_byte], dtype=dtype)
    # NIfTI is Fortran-ordered: the first dimension varies fastest
    arr = arr.reshape(shape[::-1]).transpose(range(ndim - 1, -1, -1))
    return VoxelGrid(np.ascontiguousarray(arr, dtype=np.float32))
