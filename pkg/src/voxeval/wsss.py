"""Voxel-level saliency metrics: precision/recall curves, AP, F1, mass ratio."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .grid import (
    ThresholdGrid,
    exact_values,
    require_same_shape,
    validate_mask,
    validate_saliency,
)

SamplePair = tuple[np.ndarray, np.ndarray]


def _counts(saliency: np.ndarray, mask: np.ndarray, taus: np.ndarray):
    """Prediction / true-positive counts at each threshold, plus support counts.

    Counting s >= tau for every tau via one sort per array instead of one
    pass per threshold. Also returns the tau->0+ boundary counts over {s > 0}.
    """
    s = saliency.ravel()
    pos = s[mask.ravel() != 0]
    s_sorted = np.sort(s)
    pos_sorted = np.sort(pos)
    pred = s.size - np.searchsorted(s_sorted, taus, side="left")
    tp = pos.size - np.searchsorted(pos_sorted, taus, side="left")
    sup_pred = int((s > 0.0).sum())
    sup_tp = int((pos > 0.0).sum())
    return pred.astype(np.int64), tp.astype(np.int64), sup_pred, sup_tp, pos.size


@dataclass(frozen=True)
class PrCurve:
    """Per-threshold precision/recall for one sample, with sweep boundaries.

    taus ascend; precision at an empty prediction is 1 by convention. prec0
    and rec0 describe the tau->0+ boundary where the prediction is the whole
    positive support of the map.
    """

    taus: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    prec0: float
    rec0: float

    def ap(self) -> float:
        """Rectangle-rule AP, walking the grid from the top threshold down.

        Above the top threshold the prediction is empty (recall 0); each
        threshold earns precision(tau) times the recall gained at tau. Recall
        that only exists below the grid (or at s == 0) is never collected.
        """
        ap = 0.0
        rec_above = 0.0
        for l in range(self.taus.size - 1, -1, -1):
            ap += self.precision[l] * (self.recall[l] - rec_above)
            rec_above = self.recall[l]
        ap += self.prec0 * (self.rec0 - rec_above)
        return float(ap)


def _curve_from_counts(taus, pred, tp, sup_pred, sup_tp, n_gt) -> PrCurve:
    precision = np.where(pred > 0, tp / np.maximum(pred, 1), 1.0)
    recall = tp / n_gt
    prec0 = 1.0 if sup_pred == 0 else sup_tp / sup_pred
    rec0 = sup_tp / n_gt
    return PrCurve(taus, precision, recall, float(prec0), float(rec0))


def _check_pair(saliency: np.ndarray, mask: np.ndarray):
    s = validate_saliency(saliency, ndim=None)
    m = validate_mask(mask, ndim=None)
    require_same_shape(s, m)
    if m.sum() == 0:
        raise ValidationError("ground-truth mask is empty; sample must be excluded")
    return s, m


def vx_prec_rec(saliency: np.ndarray, mask: np.ndarray, tau: float) -> tuple[float, float]:
    """Voxel precision and recall of {s >= tau} against a non-empty mask."""
    s, m = _check_pair(saliency, mask)
    tau = float(tau)
    if not (0.0 < tau <= 1.0):
        raise ValidationError(f"tau must be in (0, 1], got {tau}")
    pred, tp, *_ , n_gt = _counts(s, m, np.asarray([tau]))
    prec = 1.0 if pred[0] == 0 else float(tp[0] / pred[0])
    return prec, float(tp[0] / n_gt)


def pr_curve(saliency: np.ndarray, mask: np.ndarray, taus: np.ndarray) -> PrCurve:
    """Precision/recall across an ascending threshold array."""
    s, m = _check_pair(saliency, mask)
    taus = np.asarray(taus, dtype=np.float64)
    pred, tp, sup_pred, sup_tp, n_gt = _counts(s, m, taus)
    return _curve_from_counts(taus, pred, tp, sup_pred, sup_tp, n_gt)


def sample_ap(saliency: np.ndarray, mask: np.ndarray, grid: ThresholdGrid) -> float:
    """AP of one sample; exact mode uses the map's own distinct values."""
    s, m = _check_pair(saliency, mask)
    taus = exact_values(s) if grid.mode == "exact" else grid.values
    if taus.size == 0:
        raise ValidationError("exact grid needs at least one positive value")
    return pr_curve(s, m, taus).ap()


def vxap(
    samples: Sequence[SamplePair],
    grid: ThresholdGrid,
    pooled: bool = False,
) -> float:
    """Average precision over voxels.

    Default: AP per sample, then the mean over samples. With pooled=True the
    per-threshold counts are summed across samples first and a single AP is
    computed from the pooled curve (the slice-level convention inherited from
    2D evaluation).
    """
    if not samples:
        raise ValidationError("vxap needs at least one sample")
    if not pooled:
        return float(np.mean([sample_ap(s, m, grid) for s, m in samples]))
    checked = [_check_pair(s, m) for s, m in samples]
    taus = grid.resolve([s for s, _ in checked])
    pred = np.zeros(taus.size, dtype=np.int64)
    tp = np.zeros(taus.size, dtype=np.int64)
    sup_pred = sup_tp = n_gt = 0
    for s, m in checked:
        p, t, sp, st, ng = _counts(s, m, taus)
        pred += p
        tp += t
        sup_pred += sp
        sup_tp += st
        n_gt += ng
    return _curve_from_counts(taus, pred, tp, sup_pred, sup_tp, n_gt).ap()


def pxap_slicewise(
    saliency: np.ndarray,
    mask: np.ndarray,
    grid: ThresholdGrid,
    slice_axis: int = 2,
) -> float:
    """Slice-wise AP of one volume along the given axis.

    Slices whose ground truth is empty are skipped; the remaining slices are
    pooled into one pixel population, so with ground truth present in every
    slice this equals the volume AP exactly.
    """
    s = validate_saliency(saliency, ndim=3)
    m = validate_mask(mask, ndim=3)
    require_same_shape(s, m)
    if slice_axis not in (0, 1, 2):
        raise ValidationError(f"slice axis must be 0, 1, or 2, got {slice_axis}")
    if m.sum() == 0:
        raise ValidationError("ground-truth mask is empty; sample must be excluded")
    keep = [
        i
        for i in range(m.shape[slice_axis])
        if np.take(m, i, axis=slice_axis).sum() > 0
    ]
    s_kept = np.stack([np.take(s, i, axis=slice_axis) for i in keep])
    m_kept = np.stack([np.take(m, i, axis=slice_axis) for i in keep])
    if grid.mode == "exact":
        taus = exact_values(s_kept)
        if taus.size == 0:
            raise ValidationError("exact grid needs at least one positive value")
    else:
        taus = grid.values
    pred, tp, sup_pred, sup_tp, n_gt = _counts(s_kept, m_kept, taus)
    return _curve_from_counts(taus, pred, tp, sup_pred, sup_tp, n_gt).ap()


@dataclass(frozen=True)
class F1Result:
    """Best mean F1 over the grid plus the operating point that achieves it."""

    max_f1: float
    tau_f1: float
    prec_at_tau: float
    rec_at_tau: float
    taus: np.ndarray
    curve: np.ndarray
    per_sample_f1: np.ndarray
    per_sample_prec: np.ndarray
    per_sample_rec: np.ndarray


def f1_sweep(samples: Sequence[SamplePair], grid: ThresholdGrid) -> F1Result:
    """Maximize the sample-mean F1 over a single shared threshold.

    Ties prefer the smallest tau. Precision and recall reported at tau_F1 are
    sample means at that same threshold.
    """
    if not samples:
        raise ValidationError("f1_sweep needs at least one sample")
    checked = [_check_pair(s, m) for s, m in samples]
    taus = grid.resolve([s for s, _ in checked])
    precs, recs = [], []
    for s, m in checked:
        pred, tp, sup_pred, sup_tp, n_gt = _counts(s, m, taus)
        c = _curve_from_counts(taus, pred, tp, sup_pred, sup_tp, n_gt)
        precs.append(c.precision)
        recs.append(c.recall)
    prec = np.stack(precs)
    rec = np.stack(recs)
    denom = prec + rec
    f1 = np.where(denom > 0, 2.0 * prec * rec / np.maximum(denom, 1e-300), 0.0)
    curve = f1.mean(axis=0)
    best = int(np.argmax(curve))
    return F1Result(
        max_f1=float(curve[best]),
        tau_f1=float(taus[best]),
        prec_at_tau=float(prec[:, best].mean()),
        rec_at_tau=float(rec[:, best].mean()),
        taus=taus,
        curve=curve,
        per_sample_f1=f1[:, best],
        per_sample_prec=prec[:, best],
        per_sample_rec=rec[:, best],
    )


@dataclass(frozen=True)
class McResult:
    """Mass-concentration aggregate with per-sample ratios and exclusions."""

    value: float
    per_sample: np.ndarray
    n_excluded: int


def mass_concentration(samples: Sequence[tuple[np.ndarray, int]]) -> McResult:
    """Fraction of saliency mass inside the target slab of paired volumes.

    Each sample is (map, order) where order 0 means the target occupies the
    first half of axis 0 and order 1 the second half. Maps whose total mass is
    zero are excluded and counted.
    """
    if not samples:
        raise ValidationError("mass_concentration needs at least one sample")
    ratios = []
    excluded = 0
    for s, order in samples:
        s = validate_saliency(s, ndim=3)
        if order not in (0, 1):
            raise ValidationError(f"order must be 0 or 1, got {order!r}")
        if s.shape[0] % 2 != 0:
            raise ValidationError("paired volume axis 0 must have even length")
        half = s.shape[0] // 2
        total = float(s.sum())
        if total == 0.0:
            excluded += 1
            continue
        slab = float(s[order * half : (order + 1) * half].sum())
        ratios.append(slab / total)
    if not ratios:
        raise ValidationError("all samples had zero saliency mass")
    per = np.asarray(ratios, dtype=np.float64)
    return McResult(float(per.mean()), per, excluded)
