"""Independent reference implementations used to check the library.

Everything here is deliberately naive (raster-order flood fill, sorted-voxel
AP, exhaustive pairwise box checks, triple-loop binning) and imports nothing
from the package under test, so a bug cannot cancel out between the two sides.
"""

from collections import deque
import math

import numpy as np


def neighbor_offsets(ndim, full):
    """All nonzero offsets with |d|<=1; face/edge-only when full is False."""
    offs = []
    for d in np.ndindex(*([3] * ndim)):
        d = tuple(x - 1 for x in d)
        if all(x == 0 for x in d):
            continue
        if not full and sum(abs(x) for x in d) != 1:
            continue
        offs.append(d)
    return offs


def flood_label(mask, full=True):
    """Connected components by raster-order BFS flood fill.

    Returns (labels, count) with component ids 1..count assigned in raster
    order of each component's first-encountered voxel.
    """
    mask = np.asarray(mask) != 0
    labels = np.zeros(mask.shape, dtype=np.int32)
    offs = neighbor_offsets(mask.ndim, full)
    next_id = 1
    for idx in np.ndindex(*mask.shape):
        if not mask[idx] or labels[idx]:
            continue
        labels[idx] = next_id
        queue = deque([idx])
        while queue:
            cur = queue.popleft()
            for off in offs:
                nb = tuple(c + o for c, o in zip(cur, off))
                if any(c < 0 or c >= s for c, s in zip(nb, mask.shape)):
                    continue
                if mask[nb] and not labels[nb]:
                    labels[nb] = next_id
                    queue.append(nb)
        next_id += 1
    return labels, next_id - 1


def largest_component_id(labels, count):
    """Largest component id; ties go to the smallest id."""
    if count == 0:
        return None
    sizes = [(labels == cid).sum() for cid in range(1, count + 1)]
    best = max(range(count), key=lambda i: (sizes[i], -i))
    return best + 1


def box_of(mask):
    """Inclusive (mins, maxs) of the nonzero voxels, or None when empty."""
    pts = np.argwhere(np.asarray(mask) != 0)
    if pts.size == 0:
        return None
    return tuple(pts.min(axis=0).tolist()), tuple(pts.max(axis=0).tolist())


def box_iou(a, b):
    """IoU of two inclusive integer boxes given as (mins, maxs); empty -> 0."""
    if a is None or b is None:
        return 0.0
    inter = 1
    for lo_a, hi_a, lo_b, hi_b in zip(a[0], a[1], b[0], b[1]):
        lo, hi = max(lo_a, lo_b), min(hi_a, hi_b)
        if lo > hi:
            return 0.0
        inter *= hi - lo + 1
    vol_a = math.prod(hi - lo + 1 for lo, hi in zip(a[0], a[1]))
    vol_b = math.prod(hi - lo + 1 for lo, hi in zip(b[0], b[1]))
    return inter / (vol_a + vol_b - inter)


def component_boxes(labels, count):
    return [box_of(labels == cid) for cid in range(1, count + 1)]


def box_indicator_v1(saliency, mask, tau, delta, full=True):
    """[IoU(box of largest pred component, box of largest GT component) >= delta]."""
    pred = np.asarray(saliency, dtype=np.float64) >= tau
    lab_p, n_p = flood_label(pred, full)
    lab_g, n_g = flood_label(mask, full)
    big_p = largest_component_id(lab_p, n_p)
    big_g = largest_component_id(lab_g, n_g)
    pred_box = box_of(lab_p == big_p) if big_p else None
    gt_box = box_of(lab_g == big_g)
    return 1.0 if box_iou(pred_box, gt_box) >= delta else 0.0


def box_indicator_v2(saliency, mask, tau, delta, full=True):
    """[any (pred component box, GT component box) pair with IoU >= delta]."""
    pred = np.asarray(saliency, dtype=np.float64) >= tau
    lab_p, n_p = flood_label(pred, full)
    lab_g, n_g = flood_label(mask, full)
    for pb in component_boxes(lab_p, n_p):
        for gb in component_boxes(lab_g, n_g):
            if box_iou(pb, gb) >= delta:
                return 1.0
    return 0.0


def sorted_voxel_ap(saliency, mask):
    """AP by walking voxels in descending saliency order.

    Assumes distinct saliency values (random float inputs); accumulates
    precision at each ground-truth voxel.
    """
    s = np.asarray(saliency, dtype=np.float64).ravel()
    m = np.asarray(mask).ravel() != 0
    order = np.argsort(-s, kind="stable")
    hits = m[order]
    tp = np.cumsum(hits)
    prec = tp / np.arange(1, hits.size + 1)
    return float(prec[hits].sum() / m.sum())


def prec_rec_at(saliency, mask, tau):
    """Direct set-count precision/recall at one threshold; empty pred -> prec 1."""
    pred = np.asarray(saliency, dtype=np.float64) >= tau
    m = np.asarray(mask) != 0
    n_pred = int(pred.sum())
    n_tp = int((pred & m).sum())
    prec = 1.0 if n_pred == 0 else n_tp / n_pred
    rec = n_tp / int(m.sum())
    return prec, rec


def grid_ap(saliency, mask, taus):
    """Rectangle-rule AP over an ascending threshold grid.

    Walks thresholds from the top down; the boundary above the top threshold
    has recall 0, and the tau->0+ boundary uses the positive support of s.
    """
    s = np.asarray(saliency, dtype=np.float64)
    m = np.asarray(mask) != 0
    curve = [prec_rec_at(s, m, t) for t in taus]
    ap = 0.0
    rec_above = 0.0
    for prec, rec in reversed(curve):
        ap += prec * (rec - rec_above)
        rec_above = rec
    support = s > 0
    n_sup = int(support.sum())
    prec0 = 1.0 if n_sup == 0 else int((support & m).sum()) / n_sup
    rec0 = int((support & m).sum()) / int(m.sum())
    ap += prec0 * (rec0 - rec_above)
    return ap


def voxelize_points(points, dims, bounds=None):
    """Triple-checked reference binning: bounding cube centered in the unit cube."""
    pts = np.asarray(points, dtype=np.float64)
    grid = np.zeros(dims, dtype=np.uint8)
    if bounds is None:
        mins, maxs = pts.min(axis=0), pts.max(axis=0)
    else:
        mins, maxs = (np.asarray(b, dtype=np.float64) for b in bounds)
    size = float((maxs - mins).max())
    center = (mins + maxs) / 2.0
    for p in pts:
        if size == 0.0:
            unit = np.full(3, 0.5)
        else:
            unit = (p - center) / size + 0.5
        idx = tuple(
            min(max(int(math.floor(u * g)), 0), g - 1) for u, g in zip(unit, dims)
        )
        grid[idx] = 1
    return grid


def binom_tail(n, k):
    """Exact P(X >= k) for X ~ Binomial(n, 1/2)."""
    total = sum(math.comb(n, i) for i in range(k, n + 1))
    return total / 2.0**n
