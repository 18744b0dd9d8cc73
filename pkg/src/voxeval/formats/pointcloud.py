"""Point clouds and their occupancy-grid voxelization."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class PointCloud:
    """Points with optional per-point instance and semantic assignments.

    instance_ids and semantic_ids use -1 for "none"; semantic_names maps a
    semantic id to its label string.
    """

    points: np.ndarray
    instance_ids: np.ndarray | None = None
    semantic_ids: np.ndarray | None = None
    semantic_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        p = self.points
        if not isinstance(p, np.ndarray) or p.ndim != 2 or p.shape[1] != 3:
            raise ValidationError("points must be an (N, 3) array")
        for name, ids in (("instance", self.instance_ids), ("semantic", self.semantic_ids)):
            if ids is not None and ids.shape != (p.shape[0],):
                raise ValidationError(f"{name} ids must have one entry per point")

    def __len__(self) -> int:
        return self.points.shape[0]


def voxelize(
    points: np.ndarray,
    dims: tuple[int, int, int] = (32, 32, 32),
    bounds: tuple[np.ndarray, np.ndarray] | None = None,
) -> np.ndarray:
    """Occupancy grid of a point cloud inside its tight bounding cube.

    The cloud's axis-aligned bounding cube (uniform scale, centered per axis)
    is mapped onto the unit cube; bins are half-open with the 1.0 boundary
    clamped into the last bin, so the result is invariant to uniform scaling
    and translation of the cloud. Pass `bounds` (mins, maxs) to voxelize
    different point subsets on one shared grid transform.

    Returns a uint8 grid with a voxel set to 1 when at least one point lands in it.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValidationError("points must be an (N, 3) array")
    if pts.shape[0] == 0:
        raise ValidationError("cannot voxelize an empty point cloud")
    if not np.isfinite(pts).all():
        raise ValidationError("point coordinates contain NaN or Inf")
    if len(dims) != 3 or min(dims) < 1:
        raise ValidationError(f"bad grid dims {dims}")
    if bounds is None:
        mins, maxs = pts.min(axis=0), pts.max(axis=0)
    else:
        mins = np.asarray(bounds[0], dtype=np.float64)
        maxs = np.asarray(bounds[1], dtype=np.float64)
        if mins.shape != (3,) or maxs.shape != (3,) or (mins > maxs).any():
            raise ValidationError("bounds must be (mins, maxs) with mins <= maxs")
    size = float((maxs - mins).max())
    center = (mins + maxs) / 2.0
    if size == 0.0:
        unit = np.full_like(pts, 0.5)
    else:
        unit = (pts - center) / size + 0.5
    grid = np.zeros(dims, dtype=np.uint8)
    g = np.asarray(dims, dtype=np.int64)
    idx = np.floor(unit * g).astype(np.int64)
    np.clip(idx, 0, g - 1, out=idx)
    grid[idx[:, 0], idx[:, 1], idx[:, 2]] = 1
    return grid
