"""Synthetic saliency maps for validating the metrics without a trained model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ValidationError
from .grid import normalize_saliency, validate_mask


@dataclass(frozen=True)
class DegradationSpec:
    """Controlled corruption of an ideal (ground-truth-equal) saliency map.

    Applied in order: box dilation of the mask by `radius`, integer
    translation by `offset` with zero fill, then blending with uniform noise:
    (1 - alpha) * map + alpha * U[0,1], and a final min-max normalization.
    """

    alpha: float = 0.0
    offset: tuple[int, int, int] = (0, 0, 0)
    radius: int = 0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValidationError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.radius < 0:
            raise ValidationError(f"radius must be >= 0, got {self.radius}")
        if len(self.offset) != 3:
            raise ValidationError("offset must have three components")


def _translate(volume: np.ndarray, offset) -> np.ndarray:
    out = np.zeros_like(volume)
    src = []
    dst = []
    for size, off in zip(volume.shape, offset):
        off = int(off)
        if abs(off) >= size:
            return out
        if off >= 0:
            src.append(slice(0, size - off))
            dst.append(slice(off, size))
        else:
            src.append(slice(-off, size))
            dst.append(slice(0, size + off))
    out[tuple(dst)] = volume[tuple(src)]
    return out


def from_gt(mask: np.ndarray, spec: DegradationSpec = DegradationSpec()) -> np.ndarray:
    """Saliency map derived from a ground-truth mask with known degradations.

    With the default spec the result equals the mask exactly, so every metric
    is at its maximum; each knob moves one failure axis in isolation.
    """
    m = validate_mask(mask, ndim=3)
    if m.sum() == 0:
        raise ValidationError("cannot derive saliency from an empty mask")
    base = m.astype(bool)
    if spec.radius > 0:
        size = 2 * spec.radius + 1
        base = ndimage.binary_dilation(base, structure=np.ones((size,) * 3, bool))
    base = base.astype(np.float64)
    if any(spec.offset):
        base = _translate(base, spec.offset)
    if spec.alpha > 0.0:
        rng = np.random.default_rng(spec.seed)
        base = (1.0 - spec.alpha) * base + spec.alpha * rng.random(base.shape)
    if base.max() == base.min():
        raise ValidationError("degradation produced a constant (all-equal) map")
    return normalize_saliency(base)


def gaussian_blob(
    dims: tuple[int, int, int],
    center: tuple[float, float, float],
    sigma: float,
) -> np.ndarray:
    """Isotropic Gaussian bump, min-max normalized; argmax voxel at center."""
    if len(dims) != 3 or min(dims) < 1:
        raise ValidationError("dims must be three positive sizes")
    if sigma <= 0:
        raise ValidationError(f"sigma must be > 0, got {sigma}")
    if len(center) != 3 or not all(0 <= c < s for c, s in zip(center, dims)):
        raise ValidationError(f"center {center} outside grid {dims}")
    x, y, z = np.ogrid[: dims[0], : dims[1], : dims[2]]
    d2 = (
        (x - center[0]) ** 2.0
        + (y - center[1]) ** 2.0
        + (z - center[2]) ** 2.0
    )
    return normalize_saliency(np.exp(-d2 / (2.0 * sigma * sigma)))
