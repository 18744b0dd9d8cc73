"""PLY vertex reader plus the segment/instance sidecars used by scan datasets."""

from __future__ import annotations

import json

import numpy as np

from ..errors import FormatError
from .pointcloud import PointCloud

_SCALAR_TYPES = {
    b"char": "i1",
    b"int8": "i1",
    b"uchar": "u1",
    b"uint8": "u1",
    b"short": "i2",
    b"int16": "i2",
    b"ushort": "u2",
    b"uint16": "u2",
    b"int": "i4",
    b"int32": "i4",
    b"uint": "u4",
    b"uint32": "u4",
    b"float": "f4",
    b"float32": "f4",
    b"double": "f8",
    b"float64": "f8",
}


def _parse_header(data: bytes):
    """Header -> (format, [(element_name, count, [(prop_name, type or 'list')])], body offset)."""
    end = data.find(b"end_header\n")
    if not data.startswith(b"ply"):
        raise FormatError("bad PLY magic")
    if end < 0:
        raise FormatError("PLY header has no end_header line")
    body_offset = end + len(b"end_header\n")
    fmt = None
    elements = []
    for line in data[:end].split(b"\n"):
        fields = line.split()
        if not fields or fields[0] in (b"ply", b"comment", b"obj_info"):
            continue
        if fields[0] == b"format":
            if len(fields) < 2:
                raise FormatError("bad PLY format line")
            fmt = fields[1].decode()
        elif fields[0] == b"element":
            if len(fields) != 3:
                raise FormatError(f"bad PLY element line {line!r}")
            elements.append((fields[1].decode(), int(fields[2]), []))
        elif fields[0] == b"property":
            if not elements:
                raise FormatError("PLY property before any element")
            if fields[1] == b"list":
                elements[-1][2].append((fields[-1].decode(), "list"))
            else:
                if fields[1] not in _SCALAR_TYPES:
                    raise FormatError(f"unknown PLY property type {fields[1]!r}")
                elements[-1][2].append((fields[-1].decode(), _SCALAR_TYPES[fields[1]]))
        else:
            raise FormatError(f"unknown PLY header line {line!r}")
    if fmt not in ("ascii", "binary_little_endian"):
        raise FormatError(f"unsupported PLY format {fmt!r}")
    return fmt, elements, body_offset


def read_ply(data: bytes) -> np.ndarray:
    """Vertex coordinates of an ascii or binary little-endian PLY, as (N, 3) f64."""
    fmt, elements, offset = _parse_header(data)
    vertex = next((e for e in elements if e[0] == "vertex"), None)
    if vertex is None:
        raise FormatError("PLY file has no vertex element")
    names = [p[0] for p in vertex[2]]
    if any(axis not in names for axis in ("x", "y", "z")):
        raise FormatError("PLY vertex element lacks x/y/z properties")

    if fmt == "ascii":
        lines = data[offset:].split(b"\n")
        cursor = 0
        for name, count, props in elements:
            if name != "vertex":
                cursor += count
                continue
            rows = lines[cursor : cursor + count]
            if len(rows) < count:
                raise FormatError("truncated PLY vertex data")
            cols = [names.index(a) for a in ("x", "y", "z")]
            out = np.empty((count, 3), dtype=np.float64)
            for i, row in enumerate(rows):
                parts = row.split()
                if len(parts) < len(names):
                    raise FormatError(f"short PLY vertex row {i}")
                for j, c in enumerate(cols):
                    out[i, j] = float(parts[c])
            return out
        raise AssertionError("unreachable")

    pos = offset
    for name, count, props in elements:
        if any(t == "list" for _, t in props) and name != "vertex":
            raise FormatError(f"cannot skip binary PLY list element {name!r}")
        if name != "vertex":
            row = sum(np.dtype("<" + t).itemsize for _, t in props)
            pos += row * count
            continue
        if any(t == "list" for _, t in props):
            raise FormatError("list-typed vertex properties are unsupported")
        dt = np.dtype([(p, "<" + t) for p, t in props])
        end = pos + dt.itemsize * count
        if len(data) < end:
            raise FormatError("truncated PLY vertex data")
        rec = np.frombuffer(data[pos:end], dtype=dt)
        return np.stack(
            [rec["x"], rec["y"], rec["z"]], axis=1
        ).astype(np.float64)
    raise AssertionError("unreachable")


def read_scannet_scene(
    ply_bytes: bytes,
    aggregation_json: bytes | str,
    segs_json: bytes | str,
) -> PointCloud:
    """Join a scan's mesh vertices with its segment and instance sidecars.

    The segment file assigns every vertex a segment id; the aggregation file
    groups segments into labeled object instances. Vertices outside any group
    get instance and semantic id -1. Semantic ids index the sorted label
    vocabulary returned in semantic_names.
    """
    points = read_ply(ply_bytes)
    try:
        segs = json.loads(segs_json)
        agg = json.loads(aggregation_json)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad sidecar JSON: {exc}") from None
    indices = segs.get("segIndices")
    if indices is None:
        raise FormatError("segment sidecar lacks segIndices")
    seg_ids = np.asarray(indices, dtype=np.int64)
    if seg_ids.shape[0] != points.shape[0]:
        raise FormatError(
            f"segIndices length {seg_ids.shape[0]} != vertex count {points.shape[0]}"
        )
    groups = agg.get("segGroups")
    if groups is None:
        raise FormatError("aggregation sidecar lacks segGroups")
    names = tuple(sorted({str(g.get("label", "")) for g in groups}))
    name_to_sid = {n: i for i, n in enumerate(names)}
    seg_to_instance: dict[int, int] = {}
    seg_to_semantic: dict[int, int] = {}
    for g in groups:
        gid = int(g.get("id", g.get("objectId", -1)))
        sid = name_to_sid[str(g.get("label", ""))]
        for seg in g.get("segments", ()):
            # first assignment wins so overlapping groups stay deterministic
            seg_to_instance.setdefault(int(seg), gid)
            seg_to_semantic.setdefault(int(seg), sid)
    instance = np.full(points.shape[0], -1, dtype=np.int32)
    semantic = np.full(points.shape[0], -1, dtype=np.int32)
    for i, seg in enumerate(seg_ids):
        gid = seg_to_instance.get(int(seg))
        if gid is not None:
            instance[i] = gid
            semantic[i] = seg_to_semantic[int(seg)]
    return PointCloud(points, instance, semantic, names)
