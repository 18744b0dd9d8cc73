"""Core voxel-grid types: dense grids, boxes, thresholds, saliency normalization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError

MASK_DTYPE = np.uint8
SALIENCY_DTYPE = np.float32


@dataclass(frozen=True)
class VoxelGrid:
    """Dense voxel grid: (W, H, D) or (W, H, D, C) ndarray of uint8 or float32.

    Masks and binvox occupancies are uint8; saliency and image intensities are
    float32. Anything else is rejected so file writers never need to guess.
    """

    data: np.ndarray

    def __post_init__(self):
        a = self.data
        if not isinstance(a, np.ndarray):
            raise ValidationError("voxel grid data must be a numpy array")
        if a.ndim not in (3, 4):
            raise ValidationError(f"voxel grid must be 3D or 4D, got {a.ndim}D")
        if a.dtype not in (np.uint8, np.float32):
            raise ValidationError(
                f"unsupported voxel dtype {a.dtype}; expected uint8 or float32"
            )
        if min(a.shape) < 1:
            raise ValidationError("voxel grid axes must all be non-empty")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape[:3]

    @property
    def channels(self) -> int:
        return self.data.shape[3] if self.data.ndim == 4 else 1


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box with inclusive integer voxel bounds (2D or 3D)."""

    mins: tuple[int, ...]
    maxs: tuple[int, ...]

    def __post_init__(self):
        if len(self.mins) != len(self.maxs) or len(self.mins) not in (2, 3):
            raise ValidationError("box needs matching 2D or 3D min/max tuples")
        if any(lo < 0 for lo in self.mins):
            raise ValidationError("box bounds must be non-negative")
        if any(lo > hi for lo, hi in zip(self.mins, self.maxs)):
            raise ValidationError("box min must not exceed max on any axis")

    @property
    def ndim(self) -> int:
        return len(self.mins)

    @property
    def volume(self) -> int:
        """Voxel count: product of inclusive extents."""
        out = 1
        for lo, hi in zip(self.mins, self.maxs):
            out *= hi - lo + 1
        return out


def bbox_of(mask: np.ndarray) -> BoundingBox | None:
    """Tight bounding box of the nonzero voxels; None for an empty mask."""
    mask = np.asarray(mask)
    if mask.ndim not in (2, 3):
        raise ValidationError("bbox_of expects a 2D or 3D array")
    nz = np.nonzero(mask)
    if nz[0].size == 0:
        return None
    mins = tuple(int(ax.min()) for ax in nz)
    maxs = tuple(int(ax.max()) for ax in nz)
    return BoundingBox(mins, maxs)


def iou(a: BoundingBox | None, b: BoundingBox | None) -> float:
    """Intersection over union of two boxes; an absent (empty) box scores 0."""
    if a is None or b is None:
        return 0.0
    if a.ndim != b.ndim:
        raise ValidationError("cannot compare boxes of different dimensionality")
    inter = 1
    for lo_a, hi_a, lo_b, hi_b in zip(a.mins, a.maxs, b.mins, b.maxs):
        lo, hi = max(lo_a, lo_b), min(hi_a, hi_b)
        if lo > hi:
            return 0.0
        inter *= hi - lo + 1
    return inter / (a.volume + b.volume - inter)


def validate_mask(mask: np.ndarray, ndim: int | None = 3) -> np.ndarray:
    """Check a {0,1} mask and return it as uint8 without copying when possible."""
    mask = np.asarray(mask)
    if ndim is not None and mask.ndim != ndim:
        raise ValidationError(f"mask must be {ndim}D, got {mask.ndim}D")
    if mask.dtype == bool:
        return mask.astype(np.uint8)
    if not np.issubdtype(mask.dtype, np.integer):
        raise ValidationError(f"mask dtype must be integer or bool, got {mask.dtype}")
    bad = (mask != 0) & (mask != 1)
    if bad.any():
        raise ValidationError("mask values must be 0 or 1")
    return mask.astype(np.uint8, copy=False)


def validate_saliency(saliency: np.ndarray, ndim: int | None = 3) -> np.ndarray:
    """Check a [0,1] saliency map and return it as float64."""
    s = np.asarray(saliency)
    if ndim is not None and s.ndim != ndim:
        raise ValidationError(f"saliency map must be {ndim}D, got {s.ndim}D")
    if not np.issubdtype(s.dtype, np.floating):
        raise ValidationError(f"saliency dtype must be floating, got {s.dtype}")
    s = s.astype(np.float64, copy=False)
    if not np.isfinite(s).all():
        raise ValidationError("saliency map contains NaN or Inf")
    if s.size and (s.min() < 0.0 or s.max() > 1.0):
        raise ValidationError("saliency values outside [0, 1]; normalize first")
    return s


def normalize_saliency(saliency: np.ndarray) -> np.ndarray:
    """Min-max normalize a map to [0,1] in float64.

    A constant map normalizes to all zeros. Idempotent: a map already spanning
    [0,1] is returned value-for-value unchanged.
    """
    s = np.asarray(saliency)
    if s.ndim not in (2, 3):
        raise ValidationError("saliency map must be 2D or 3D")
    if not (np.issubdtype(s.dtype, np.floating) or np.issubdtype(s.dtype, np.integer)):
        raise ValidationError(f"cannot normalize dtype {s.dtype}")
    s = s.astype(np.float64, copy=False)
    if not np.isfinite(s).all():
        raise ValidationError("saliency map contains NaN or Inf")
    lo = float(s.min())
    hi = float(s.max())
    if hi == lo:
        return np.zeros_like(s)
    return (s - lo) / (hi - lo)


def threshold(saliency: np.ndarray, tau: float) -> np.ndarray:
    """Binarize a normalized map: voxels with s >= tau, as a uint8 mask.

    tau must lie in (0, 1]; the map must already be within [0, 1].
    """
    s = validate_saliency(saliency, ndim=None)
    tau = float(tau)
    if not (0.0 < tau <= 1.0):
        raise ValidationError(f"tau must be in (0, 1], got {tau}")
    return (s >= tau).astype(np.uint8)


def slice_plane(grid: np.ndarray, axis: int, index: int) -> np.ndarray:
    """Extract one plane of a 3D array along the given axis."""
    grid = np.asarray(grid)
    if grid.ndim != 3:
        raise ValidationError("slice_plane expects a 3D array")
    if axis not in (0, 1, 2):
        raise ValidationError(f"axis must be 0, 1, or 2, got {axis}")
    if not (0 <= index < grid.shape[axis]):
        raise ValidationError(
            f"slice index {index} out of range for axis {axis} of size {grid.shape[axis]}"
        )
    return np.take(grid, index, axis=axis)


@dataclass(frozen=True)
class ThresholdGrid:
    """Sweep thresholds: ascending values in (0, 1], or a marker for exact mode.

    In "uniform" mode the values are fixed up front (k/n for k=1..n). In
    "exact" mode the grid is resolved from the maps under evaluation: the
    union of their distinct positive values, so the sweep depends only on the
    ordering of saliency values.
    """

    mode: str
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in ("uniform", "exact"):
            raise ValidationError(f"unknown threshold grid mode {self.mode!r}")
        if self.mode == "uniform":
            v = self.values
            if v is None or v.size == 0:
                raise ValidationError("uniform grid needs at least one threshold")
            if v[0] <= 0.0 or v[-1] > 1.0 or np.any(np.diff(v) <= 0):
                raise ValidationError(
                    "grid values must be strictly increasing within (0, 1]"
                )
        elif self.values is not None:
            raise ValidationError("exact mode carries no fixed values")

    @classmethod
    def uniform(cls, n: int) -> "ThresholdGrid":
        if n < 1:
            raise ValidationError("uniform grid size must be >= 1")
        vals = np.arange(1, n + 1, dtype=np.float64) / n
        return cls("uniform", vals)

    @classmethod
    def exact(cls) -> "ThresholdGrid":
        return cls("exact", None)

    @classmethod
    def from_spec(cls, spec: str) -> "ThresholdGrid":
        """Parse a CLI-style grid spec: "uniform:N" or "exact"."""
        if spec == "exact":
            return cls.exact()
        if spec.startswith("uniform:"):
            try:
                n = int(spec.split(":", 1)[1])
            except ValueError:
                raise ValidationError(f"bad grid spec {spec!r}") from None
            return cls.uniform(n)
        raise ValidationError(f"bad grid spec {spec!r}; use 'uniform:N' or 'exact'")

    def resolve(self, maps: Iterable[np.ndarray]) -> np.ndarray:
        """Concrete ascending threshold values for a collection of maps."""
        if self.mode == "uniform":
            return self.values
        vals = [exact_values(m) for m in maps]
        if not vals:
            raise ValidationError("exact grid needs at least one map")
        out = np.unique(np.concatenate(vals))
        if out.size == 0:
            raise ValidationError("exact grid needs at least one positive value")
        return out


def exact_values(saliency: np.ndarray) -> np.ndarray:
    """Distinct positive values of one map (the per-sample exact grid)."""
    s = np.asarray(saliency, dtype=np.float64).ravel()
    vals = np.unique(s)
    return vals[vals > 0.0]


DEFAULT_GRID = ThresholdGrid.uniform(101)


def require_same_shape(saliency: np.ndarray, mask: np.ndarray) -> None:
    if np.asarray(saliency).shape != np.asarray(mask).shape:
        raise ValidationError(
            f"saliency shape {np.asarray(saliency).shape} does not match "
            f"mask shape {np.asarray(mask).shape}"
        )
