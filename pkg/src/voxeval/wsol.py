"""Box-level localization metrics over 3D volumes and their 2D slices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _sweep
from .components import (
    Connectivity,
    DEFAULT_CONNECTIVITY,
    component_bboxes,
    label_components,
    largest_component_id,
)
from .errors import ValidationError
from .grid import (
    BoundingBox,
    ThresholdGrid,
    bbox_of,
    iou,
    require_same_shape,
    threshold,
    validate_mask,
    validate_saliency,
)

SamplePair = tuple[np.ndarray, np.ndarray]

DEFAULT_DELTA = 0.5
DEFAULT_DELTAS = (0.3, 0.5, 0.7)


@dataclass(frozen=True)
class WsolResult:
    """Outcome of a box-accuracy threshold sweep.

    value is the curve maximum, taken at best_tau (ties prefer the smallest
    tau). per_sample holds each sample's contribution at best_tau: a 0/1
    indicator for single-delta metrics, the delta-averaged indicator for the
    multi-delta variants, and slice-averaged values for the 2D metrics; value
    is exactly the mean of per_sample.
    """

    metric: str
    value: float
    best_tau: float
    deltas: tuple[float, ...]
    taus: np.ndarray
    curve: np.ndarray
    per_sample: np.ndarray


def _gt_boxes(mask: np.ndarray, connectivity: Connectivity):
    """All GT component boxes plus the index of the largest component's box.

    Labeling runs on the mask's tight bounding box only: components cannot
    extend past the support, and raster order is translation-invariant, so
    the ids (and the largest-component tie-break) are unaffected.
    """
    outer = bbox_of(mask)
    if outer is None:
        raise ValidationError("ground-truth mask is empty; sample must be excluded")
    crop = mask[tuple(slice(lo, hi + 1) for lo, hi in zip(outer.mins, outer.maxs))]
    lab = label_components(crop, connectivity)
    boxes = [
        BoundingBox(
            tuple(m + o for m, o in zip(b.mins, outer.mins)),
            tuple(m + o for m, o in zip(b.maxs, outer.mins)),
        )
        for b in component_bboxes(lab)
    ]
    return boxes, largest_component_id(lab) - 1


def _check_sample(saliency, mask, ndim=3):
    s = validate_saliency(saliency, ndim=ndim)
    m = validate_mask(mask, ndim=ndim)
    require_same_shape(s, m)
    return s, m


def _pred_boxes(saliency, tau, connectivity):
    """Largest-component box and all component boxes of {s >= tau}."""
    pred = threshold(saliency, tau)
    lab = label_components(pred, connectivity)
    boxes = component_bboxes(lab)
    largest = None
    if lab.count:
        largest = boxes[largest_component_id(lab) - 1]
    return largest, boxes


def box_acc_3d(
    samples: Sequence[SamplePair],
    tau: float,
    delta: float = DEFAULT_DELTA,
    connectivity: Connectivity = DEFAULT_CONNECTIVITY,
) -> float:
    """Fraction of samples whose largest predicted box matches the largest GT box.

    A sample counts when IoU(box of largest component of {s >= tau}, box of
    largest GT component) >= delta; an empty prediction scores IoU 0.
    """
    if not samples:
        raise ValidationError("box_acc_3d needs at least one sample")
    hits = []
    for s, m in samples:
        s, m = _check_sample(s, m)
        boxes, big = _gt_boxes(m, connectivity)
        pred_box, _ = _pred_boxes(s, tau, connectivity)
        hits.append(1.0 if iou(pred_box, boxes[big]) >= delta else 0.0)
    return float(np.mean(hits))


def box_acc_3d_v2(
    samples: Sequence[SamplePair],
    tau: float,
    delta: float = DEFAULT_DELTA,
    connectivity: Connectivity = DEFAULT_CONNECTIVITY,
) -> float:
    """Multi-box variant: any (predicted box, GT box) pair with IoU >= delta."""
    if not samples:
        raise ValidationError("box_acc_3d_v2 needs at least one sample")
    hits = []
    for s, m in samples:
        s, m = _check_sample(s, m)
        gt, _ = _gt_boxes(m, connectivity)
        _, pred = _pred_boxes(s, tau, connectivity)
        hit = any(iou(pb, gb) >= delta for pb in pred for gb in gt)
        hits.append(1.0 if hit else 0.0)
    return float(np.mean(hits))


def _resolve(grid: ThresholdGrid, samples) -> np.ndarray:
    return grid.resolve([s for s, _ in samples])


def _iou_curves_3d(samples, taus, connectivity):
    """Stacked per-sample (v1, v2) IoU curves from the incremental sweep."""
    v1, v2 = [], []
    for s, m in samples:
        boxes, big = _gt_boxes(m, connectivity)
        a, b = _sweep.box_iou_sweep(s, taus, boxes, big, connectivity)
        v1.append(a)
        v2.append(b)
    return np.stack(v1), np.stack(v2)


def _best(metric, taus, curve, per_sample_by_tau, deltas) -> WsolResult:
    best = int(np.argmax(curve))
    return WsolResult(
        metric=metric,
        value=float(curve[best]),
        best_tau=float(taus[best]),
        deltas=deltas,
        taus=taus,
        curve=curve,
        per_sample=per_sample_by_tau[:, best].copy(),
    )


def max_3d_box_acc(
    samples: Sequence[SamplePair],
    grid: ThresholdGrid,
    delta: float = DEFAULT_DELTA,
    connectivity: Connectivity = DEFAULT_CONNECTIVITY,
) -> WsolResult:
    """box_acc_3d maximized over the threshold grid."""
    checked = [_check_sample(s, m) for s, m in samples or ()]
    if not checked:
        raise ValidationError("max_3d_box_acc needs at least one sample")
    taus = _resolve(grid, checked)
    v1, _ = _iou_curves_3d(checked, taus, connectivity)
    ind = (v1 >= delta).astype(np.float64)
    return _best("max_3d_box_acc", taus, ind.mean(axis=0), ind, (delta,))


def max_3d_box_acc_v2(
    samples: Sequence[SamplePair],
    grid: ThresholdGrid,
    deltas: Sequence[float] = DEFAULT_DELTAS,
    connectivity: Connectivity = DEFAULT_CONNECTIVITY,
) -> WsolResult:
    """box_acc_3d_v2 averaged over the delta set, then maximized over tau."""
    checked = [_check_sample(s, m) for s, m in samples or ()]
    if not checked:
        raise ValidationError("max_3d_box_acc_v2 needs at least one sample")
    deltas = tuple(float(d) for d in deltas)
    if not deltas:
        raise ValidationError("delta set must not be empty")
    taus = _resolve(grid, checked)
    _, v2 = _iou_curves_3d(checked, taus, connectivity)
    # indicator of the best pair IoU >= delta equals the max pair indicator
    per = np.mean([(v2 >= d).astype(np.float64) for d in deltas], axis=0)
    return _best("max_3d_box_acc_v2", taus, per.mean(axis=0), per, deltas)


def _slice_curves(s, m, taus, connectivity, axis):
    """Per-slice (v1, v2) IoU curves; slices with empty GT are skipped."""
    conn2d = connectivity.plane()
    v1, v2 = [], []
    for i in range(m.shape[axis]):
        m_sl = np.take(m, i, axis=axis)
        if not m_sl.any():
            continue
        s_sl = np.take(s, i, axis=axis)
        boxes, big = _gt_boxes(m_sl, conn2d)
        a, b = _sweep.box_iou_sweep(s_sl, taus, boxes, big, conn2d)
        v1.append(a)
        v2.append(b)
    return np.stack(v1), np.stack(v2)


def _max_box_acc_2d(metric, samples, grid, deltas, connectivity, slice_axis, v2_mode):
    checked = [_check_sample(s, m) for s, m in samples or ()]
    if not checked:
        raise ValidationError(f"{metric} needs at least one sample")
    if slice_axis not in (0, 1, 2):
        raise ValidationError(f"slice axis must be 0, 1, or 2, got {slice_axis}")
    for _, m in checked:
        if m.sum() == 0:
            raise ValidationError("ground-truth mask is empty; sample must be excluded")
    taus = _resolve(grid, checked)
    per_rows = []
    for s, m in checked:
        v1, v2 = _slice_curves(s, m, taus, connectivity, slice_axis)
        curves = v2 if v2_mode else v1
        # mean over evaluated slices of per-slice indicators, per delta
        per_rows.append(
            np.mean([(curves >= d).astype(np.float64).mean(axis=0) for d in deltas], axis=0)
        )
    per = np.stack(per_rows)
    return _best(metric, taus, per.mean(axis=0), per, tuple(deltas))


def max_box_acc_2d(
    samples: Sequence[SamplePair],
    grid: ThresholdGrid,
    delta: float = DEFAULT_DELTA,
    connectivity: Connectivity = DEFAULT_CONNECTIVITY,
    slice_axis: int = 2,
) -> WsolResult:
    """Slice-wise box accuracy: 2D boxes per slice, one tau shared everywhere.

    Each sample scores the mean indicator over its non-empty-GT slices; the
    sample means are averaged and maximized over the grid.
    """
    return _max_box_acc_2d(
        "max_box_acc", samples, grid, (float(delta),), connectivity, slice_axis, False
    )


def max_box_acc_2d_v2(
    samples: Sequence[SamplePair],
    grid: ThresholdGrid,
    deltas: Sequence[float] = DEFAULT_DELTAS,
    connectivity: Connectivity = DEFAULT_CONNECTIVITY,
    slice_axis: int = 2,
) -> WsolResult:
    """Multi-box slice-wise accuracy averaged over the delta set."""
    deltas = tuple(float(d) for d in deltas)
    if not deltas:
        raise ValidationError("delta set must not be empty")
    return _max_box_acc_2d(
        "max_box_acc_v2", samples, grid, deltas, connectivity, slice_axis, True
    )
