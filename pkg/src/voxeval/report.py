"""Evaluation runs: input pairing, per-sample sweeps, aggregation, reports."""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from . import _sweep, __version__
from .components import Connectivity
from .datasets import load_manifest
from .errors import FormatError, ValidationError
from .formats.sev import load_sev
from .grid import (
    ThresholdGrid,
    exact_values,
    normalize_saliency,
    require_same_shape,
    validate_mask,
)
from .wsol import DEFAULT_DELTA, DEFAULT_DELTAS, _gt_boxes, _slice_curves
from .wsss import _counts, _curve_from_counts

METRIC_IDS = (
    "max3dboxacc",
    "max3dboxaccv2",
    "vxap",
    "maxf1",
    "maxboxacc",
    "maxboxaccv2",
    "mc",
)
DEFAULT_METRICS = METRIC_IDS[:6]

# CSV column layout mirrors the headline results table
_CSV_ORDER = (
    ("max3dboxacc", ("Max3DBoxAcc",)),
    ("max3dboxaccv2", ("Max3DBoxAccV2",)),
    ("vxap", ("VxAP",)),
    ("maxf1", ("MaxF1", "PrecAtF1Tau", "RecAtF1Tau")),
    ("maxboxacc", ("MaxBoxAcc",)),
    ("maxboxaccv2", ("MaxBoxAccV2",)),
    ("mc", ("MassConcentration",)),
)


@dataclass(frozen=True)
class EvalConfig:
    """Settings for one evaluation run; fields mirror the CLI flags."""

    manifest: str = ""
    saliency_dir: str = ""
    metrics: tuple[str, ...] = DEFAULT_METRICS
    tau_grid: str = "uniform:101"
    delta: tuple[float, ...] = DEFAULT_DELTAS
    connectivity: int = 26
    slice_axis: int = 2
    seed: int = 0
    workers: int = 1
    pooled_ap: bool = False
    strict: bool = False

    def __post_init__(self):
        unknown = [m for m in self.metrics if m not in METRIC_IDS]
        if unknown:
            raise ValidationError(f"unknown metrics {unknown}; choose from {METRIC_IDS}")
        if not self.delta:
            raise ValidationError("delta list must not be empty")
        if any(not (0.0 < d <= 1.0) for d in self.delta):
            raise ValidationError(f"deltas must lie in (0, 1], got {self.delta}")
        if self.slice_axis not in (0, 1, 2):
            raise ValidationError(f"slice axis must be 0, 1, or 2, got {self.slice_axis}")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        Connectivity.from_cli(self.connectivity)
        ThresholdGrid.from_spec(self.tau_grid)

    @property
    def v1_delta(self) -> float:
        """Single-box delta: the lone list entry, or 0.5 for multi-entry lists."""
        return self.delta[0] if len(self.delta) == 1 else DEFAULT_DELTA

    @property
    def grid(self) -> ThresholdGrid:
        return ThresholdGrid.from_spec(self.tau_grid)

    @property
    def conn(self) -> Connectivity:
        return Connectivity.from_cli(self.connectivity)

    @classmethod
    def from_mapping(cls, mapping: Mapping) -> "EvalConfig":
        """Build a config from a plain dict with CLI-flag vocabulary."""
        kwargs = dict(mapping)
        if "metrics" in kwargs and isinstance(kwargs["metrics"], str):
            kwargs["metrics"] = tuple(m for m in kwargs["metrics"].split(",") if m)
        if "metrics" in kwargs:
            kwargs["metrics"] = tuple(kwargs["metrics"])
        if "delta" in kwargs:
            d = kwargs["delta"]
            if isinstance(d, str):
                d = d.split(",")
            kwargs["delta"] = tuple(float(x) for x in d)
        allowed = set(cls.__dataclass_fields__)
        unknown = set(kwargs) - allowed
        if unknown:
            raise ValidationError(f"unknown config keys {sorted(unknown)}")
        return cls(**kwargs)

    def echo(self) -> dict:
        """Resolved configuration as stored in reports and printed by the CLI."""
        return {
            "manifest": str(self.manifest),
            "saliency_dir": str(self.saliency_dir),
            "metrics": list(self.metrics),
            "tau_grid": self.tau_grid,
            "delta": list(self.delta),
            "v1_delta": self.v1_delta,
            "connectivity": self.connectivity,
            "connectivity_kind": self.conn.value,
            "slice_axis": self.slice_axis,
            "seed": self.seed,
            "workers": self.workers,
            "pooled_ap": self.pooled_ap,
            "strict": self.strict,
            "version": __version__,
        }


@dataclass
class WorkItem:
    """One sample to evaluate; loaders defer I/O into the worker pool."""

    sample_id: str
    load_saliency: Callable[[], np.ndarray]
    load_mask: Callable[[], np.ndarray]
    order: int | None = None
    label: int | None = None


def pair_inputs(
    manifest: Mapping, saliency_dir: str | Path
) -> tuple[list[WorkItem], list[dict], list[dict]]:
    """Match manifest positives with saliency files named <id>.sev.

    Saliency is evaluated against the ground-truth class, so negative samples
    (nothing to localize) go straight to the exclusion log and need no file.
    Positives without a saliency file become hard errors. Returns
    (pairs, errors, exclusions); mask emptiness the manifest does not declare
    is still caught at load time.
    """
    root = Path(manifest.get("_dir", "."))
    sdir = Path(saliency_dir)
    items: list[WorkItem] = []
    errors: list[dict] = []
    exclusions: list[dict] = []
    for entry in manifest["samples"]:
        sid = entry["id"]
        if not entry.get("positive", True):
            exclusions.append({"id": sid, "reason": "negative sample (empty ground truth)"})
            continue
        spath = sdir / f"{sid}.sev"
        mpath = root / entry["mask"]
        if not spath.exists():
            errors.append({"id": sid, "kind": "missing_saliency", "detail": str(spath)})
            continue
        items.append(
            WorkItem(
                sample_id=sid,
                load_saliency=lambda p=spath: load_sev(p),
                load_mask=lambda p=mpath: load_sev(p),
                order=entry.get("order"),
                label=entry.get("label"),
            )
        )
    return items, errors, exclusions


def _sample_payload(item: WorkItem, taus: np.ndarray | None, config: EvalConfig) -> dict:
    """Everything one sample contributes to the selected metrics."""
    t0 = time.perf_counter()
    sid = item.sample_id
    try:
        mask = validate_mask(np.asarray(item.load_mask()), ndim=3)
    except (FormatError, ValidationError, OSError) as exc:
        return {"id": sid, "status": "error", "kind": "unreadable_mask", "detail": str(exc)}
    if mask.sum() == 0:
        return {"id": sid, "status": "excluded", "reason": "empty ground-truth mask"}
    try:
        raw = np.asarray(item.load_saliency())
        saliency = normalize_saliency(raw.astype(np.float64, copy=False))
        require_same_shape(saliency, mask)
    except (FormatError, ValidationError, OSError) as exc:
        return {"id": sid, "status": "error", "kind": "bad_saliency", "detail": str(exc)}

    out: dict = {"id": sid, "status": "ok"}
    metrics = config.metrics
    conn = config.conn
    if "max3dboxacc" in metrics or "max3dboxaccv2" in metrics:
        boxes, big = _gt_boxes(mask, conn)
        v1, v2 = _sweep.box_iou_sweep(saliency, taus, boxes, big, conn)
        out["v1"] = v1
        out["v2"] = v2
    if "maxboxacc" in metrics or "maxboxaccv2" in metrics:
        s1, s2 = _slice_curves(saliency, mask, taus, conn, config.slice_axis)
        out["row2d_v1"] = (s1 >= config.v1_delta).astype(np.float64).mean(axis=0)
        out["row2d_v2"] = np.mean(
            [(s2 >= d).astype(np.float64).mean(axis=0) for d in config.delta], axis=0
        )
    if "maxf1" in metrics or "vxap" in metrics:
        counts = _counts(saliency, mask, taus)
        curve = _curve_from_counts(taus, *counts)
        if "maxf1" in metrics:
            out["prec"] = curve.precision
            out["rec"] = curve.recall
        if "vxap" in metrics:
            if config.pooled_ap:
                out["counts"] = counts
            elif config.grid.mode == "exact":
                own = exact_values(saliency)
                own_counts = _counts(saliency, mask, own)
                out["ap"] = _curve_from_counts(own, *own_counts).ap()
            else:
                out["ap"] = curve.ap()
    if "mc" in metrics:
        total = float(saliency.sum())
        if saliency.shape[0] % 2 != 0:
            return {
                "id": sid,
                "status": "error",
                "kind": "bad_saliency",
                "detail": "paired volume axis 0 must have even length",
            }
        if total == 0.0:
            out["mc_zero_mass"] = True
        else:
            half = saliency.shape[0] // 2
            slab = float(saliency[item.order * half : (item.order + 1) * half].sum())
            out["mc_ratio"] = slab / total
    out["seconds"] = time.perf_counter() - t0
    return out


def _argbest(curve: np.ndarray) -> int:
    # first maximum = smallest tau on ties
    return int(np.argmax(curve))


def _aggregate(payloads: list[dict], taus: np.ndarray, config: EvalConfig) -> dict:
    """Combine per-sample payloads into the metric results."""
    results: dict[str, dict] = {}
    metrics = config.metrics

    def sweep_result(deltas: tuple[float, ...], rows: np.ndarray) -> dict:
        curve = rows.mean(axis=0)
        best = _argbest(curve)
        return {
            "value": float(curve[best]),
            "best_tau": float(taus[best]),
            "delta": list(deltas),
            "taus": [float(t) for t in taus],
            "curve": [float(v) for v in curve],
            "per_sample": [float(v) for v in rows[:, best]],
        }

    if "max3dboxacc" in metrics:
        rows = np.stack([(p["v1"] >= config.v1_delta).astype(np.float64) for p in payloads])
        results["max3dboxacc"] = sweep_result((config.v1_delta,), rows)
    if "max3dboxaccv2" in metrics:
        rows = np.stack(
            [
                np.mean([(p["v2"] >= d).astype(np.float64) for d in config.delta], axis=0)
                for p in payloads
            ]
        )
        results["max3dboxaccv2"] = sweep_result(config.delta, rows)
    if "maxboxacc" in metrics:
        rows = np.stack([p["row2d_v1"] for p in payloads])
        results["maxboxacc"] = sweep_result((config.v1_delta,), rows)
    if "maxboxaccv2" in metrics:
        rows = np.stack([p["row2d_v2"] for p in payloads])
        results["maxboxaccv2"] = sweep_result(config.delta, rows)
    if "vxap" in metrics:
        if config.pooled_ap:
            pred = np.zeros(taus.size, dtype=np.int64)
            tp = np.zeros(taus.size, dtype=np.int64)
            sup_pred = sup_tp = n_gt = 0
            for p in payloads:
                cpred, ctp, csp, cst, cng = p["counts"]
                pred += cpred
                tp += ctp
                sup_pred += csp
                sup_tp += cst
                n_gt += cng
            value = _curve_from_counts(taus, pred, tp, sup_pred, sup_tp, n_gt).ap()
            results["vxap"] = {"value": float(value), "pooled": True}
        else:
            aps = [p["ap"] for p in payloads]
            results["vxap"] = {
                "value": float(np.mean(aps)),
                "pooled": False,
                "per_sample": [float(a) for a in aps],
            }
    if "maxf1" in metrics:
        prec = np.stack([p["prec"] for p in payloads])
        rec = np.stack([p["rec"] for p in payloads])
        denom = prec + rec
        f1 = np.where(denom > 0, 2.0 * prec * rec / np.maximum(denom, 1e-300), 0.0)
        curve = f1.mean(axis=0)
        best = _argbest(curve)
        results["maxf1"] = {
            "value": float(curve[best]),
            "tau_f1": float(taus[best]),
            "prec_at_tau": float(prec[:, best].mean()),
            "rec_at_tau": float(rec[:, best].mean()),
            "taus": [float(t) for t in taus],
            "curve": [float(v) for v in curve],
            "per_sample": [float(v) for v in f1[:, best]],
            "per_sample_prec": [float(v) for v in prec[:, best]],
            "per_sample_rec": [float(v) for v in rec[:, best]],
        }
    if "mc" in metrics:
        ratios = [p["mc_ratio"] for p in payloads if "mc_ratio" in p]
        zero = sum(1 for p in payloads if p.get("mc_zero_mass"))
        if not ratios:
            raise ValidationError("all samples had zero saliency mass")
        results["mc"] = {
            "value": float(np.mean(ratios)),
            "per_sample": [float(r) for r in ratios],
            "n_excluded_zero_mass": zero,
        }
    return results


@dataclass
class MetricReport:
    """Evaluation outcome: aggregates, per-sample traces, exclusions, timing."""

    config: dict
    dataset: str
    n_samples: int
    n_evaluated: int
    sample_ids: list[str]
    metrics: dict
    exclusions: list[dict] = field(default_factory=list)
    errors: list[dict] = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "dataset": self.dataset,
            "n_samples": self.n_samples,
            "n_evaluated": self.n_evaluated,
            "sample_ids": self.sample_ids,
            "metrics": self.metrics,
            "exclusions": self.exclusions,
            "errors": self.errors,
            "timing": self.timing,
        }

    def to_json(self) -> bytes:
        return (json.dumps(self.to_json_dict(), indent=2) + "\n").encode()

    @classmethod
    def from_json(cls, data: bytes | str) -> "MetricReport":
        d = json.loads(data)
        return cls(
            config=d["config"],
            dataset=d["dataset"],
            n_samples=d["n_samples"],
            n_evaluated=d["n_evaluated"],
            sample_ids=d["sample_ids"],
            metrics=d["metrics"],
            exclusions=d["exclusions"],
            errors=d["errors"],
            timing=d["timing"],
        )

    def aggregates(self) -> dict[str, float]:
        """Flat column -> value mapping in the canonical table order."""
        out: dict[str, float] = {}
        for metric, columns in _CSV_ORDER:
            if metric not in self.metrics:
                continue
            entry = self.metrics[metric]
            if metric == "maxf1":
                out["MaxF1"] = entry["value"]
                out["PrecAtF1Tau"] = entry["prec_at_tau"]
                out["RecAtF1Tau"] = entry["rec_at_tau"]
            else:
                out[columns[0]] = entry["value"]
        return out

    def to_csv(self) -> bytes:
        cols = self.aggregates()
        header = ",".join(cols)
        if not cols:
            return (header + "\n").encode()
        row = ",".join(repr(float(v)) for v in cols.values())
        return (header + "\n" + row + "\n").encode()


def emit_report(report: MetricReport, fmt: str = "json") -> bytes:
    if fmt == "json":
        return report.to_json()
    if fmt == "csv":
        return report.to_csv()
    raise ValidationError(f"unknown report format {fmt!r}; use json or csv")


def _evaluate(
    items: list[WorkItem],
    config: EvalConfig,
    dataset: str,
    n_samples: int,
    pre_errors: list[dict],
    pre_exclusions: list[dict] | None = None,
) -> MetricReport:
    if "mc" in config.metrics and any(i.order is None for i in items):
        raise ValidationError(
            "mass concentration needs an order field on every sample; "
            "this manifest has none (not a pairs dataset?)"
        )
    t_start = time.perf_counter()
    grid = config.grid
    if grid.mode == "exact":
        # union of every map's distinct positive values, resolved up front
        vals = []
        for it in items:
            try:
                s = normalize_saliency(np.asarray(it.load_saliency(), dtype=np.float64))
            except (FormatError, ValidationError, OSError):
                continue  # the worker pass reports this properly
            vals.append(exact_values(s))
        if not vals or not any(v.size for v in vals):
            raise ValidationError("exact grid needs at least one positive value")
        taus = np.unique(np.concatenate(vals))
    else:
        taus = grid.values

    if config.workers == 1:
        raw = [_sample_payload(it, taus, config) for it in items]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            raw = list(pool.map(lambda it: _sample_payload(it, taus, config), items))

    payloads = [p for p in raw if p["status"] == "ok"]
    exclusions = list(pre_exclusions or []) + [
        {"id": p["id"], "reason": p["reason"]} for p in raw if p["status"] == "excluded"
    ]
    errors = pre_errors + [
        {"id": p["id"], "kind": p["kind"], "detail": p["detail"]}
        for p in raw
        if p["status"] == "error"
    ]
    if config.strict and errors:
        first = errors[0]
        raise ValidationError(f"sample {first['id']}: {first['kind']}: {first.get('detail')}")
    if not payloads:
        raise ValidationError("no evaluable samples (all excluded or failed)")
    results = _aggregate(payloads, taus, config)
    timing = {
        "total_seconds": time.perf_counter() - t_start,
        "per_sample_seconds": {p["id"]: p["seconds"] for p in payloads},
    }
    return MetricReport(
        config=config.echo(),
        dataset=dataset,
        n_samples=n_samples,
        n_evaluated=len(payloads),
        sample_ids=[p["id"] for p in payloads],
        metrics=results,
        exclusions=exclusions,
        errors=errors,
        timing=timing,
    )


def run_eval(config: EvalConfig) -> MetricReport:
    """Evaluate saliency files against a written dataset per the config."""
    manifest = load_manifest(config.manifest)
    items, pre_errors, pre_exclusions = pair_inputs(manifest, config.saliency_dir)
    if config.strict and pre_errors:
        first = pre_errors[0]
        raise ValidationError(f"sample {first['id']}: {first['kind']}: {first.get('detail')}")
    return _evaluate(
        items, config, manifest["name"], len(manifest["samples"]), pre_errors, pre_exclusions
    )


def eval_metrics(
    saliencies: Sequence[np.ndarray],
    masks: Sequence[np.ndarray],
    config: Mapping | EvalConfig | None = None,
    orders: Sequence[int] | None = None,
    ids: Sequence[str] | None = None,
) -> dict:
    """In-process evaluation over arrays; returns the JSON report as a dict.

    The config mapping uses the CLI vocabulary (metrics, tau_grid, delta,
    connectivity, slice_axis, workers, pooled_ap); values agree with a CLI
    run over the same data to the last bit.
    """
    if len(saliencies) != len(masks):
        raise ValidationError("saliencies and masks must have equal length")
    if orders is not None and len(orders) != len(saliencies):
        raise ValidationError("orders must match saliencies in length")
    if ids is not None and len(ids) != len(saliencies):
        raise ValidationError("ids must match saliencies in length")
    if config is None:
        cfg = EvalConfig()
    elif isinstance(config, EvalConfig):
        cfg = config
    else:
        cfg = EvalConfig.from_mapping(config)
    items = [
        WorkItem(
            sample_id=ids[i] if ids is not None else f"{i:05d}",
            load_saliency=lambda a=np.asarray(saliencies[i]): a,
            load_mask=lambda a=np.asarray(masks[i]): a,
            order=None if orders is None else int(orders[i]),
        )
        for i in range(len(saliencies))
    ]
    report = _evaluate(items, cfg, "in-memory", len(items), [])
    return json.loads(report.to_json())
