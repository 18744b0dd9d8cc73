"""Command-line entry point: prepare, eval, synth, inspect, convert."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import __version__
from .datasets import (
    build_brats_halves,
    build_scannet,
    build_shapenet_binary,
    build_shapenet_pairs,
    load_manifest,
    write_dataset,
)
from .errors import VoxevalError
from .formats.binvox import read_binvox
from .formats.nifti import read_nifti
from .formats.sev import load_sev, save_sev, write_sev
from .report import DEFAULT_METRICS, METRIC_IDS, EvalConfig, emit_report, run_eval
from .synth import DegradationSpec, from_gt

log = logging.getLogger("voxeval")

_DATASETS = (
    "shapenet-binary",
    "shapenet-pairs",
    "scannet-isolated",
    "scannet-crop",
    "brats-halves",
)


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    p.add_argument("--workers", type=int, default=1, help="parallel worker count")
    p.add_argument(
        "--log-level",
        default=None,
        help="logging level name (default: SE3D_LOG env var, else WARNING)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voxeval",
        description="Benchmark tools for 3D saliency-map evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"voxeval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser(
        "prepare",
        help="build a dataset directory (volumes, masks, manifest)",
        description="Build a dataset directory with volumes/, masks/, and manifest.json.",
    )
    p.add_argument("--dataset", required=True, choices=_DATASETS, help="dataset pipeline")
    p.add_argument(
        "--input",
        action="extend",
        nargs="+",
        default=[],
        metavar="DIR",
        help="input directories: two class dirs (shapenet-*), scene dirs "
        "(scannet-*), or case dirs (brats-halves); repeatable",
    )
    p.add_argument(
        "--noise",
        action="extend",
        nargs="+",
        default=[],
        metavar="DIR",
        help="distractor model directories (shapenet-pairs only); repeatable",
    )
    p.add_argument(
        "--classes",
        default="chair,table",
        help="comma-separated semantic class names (scannet-* only)",
    )
    p.add_argument(
        "--dims",
        default="32,32,32",
        help="comma-separated voxel grid size (scannet-* only)",
    )
    p.add_argument("--output", required=True, metavar="DIR", help="dataset output directory")
    _common_flags(p)

    p = sub.add_parser(
        "eval",
        help="score saliency maps against a dataset",
        description="Run the selected metrics over <id>.sev saliency files and "
        "write a report.",
    )
    p.add_argument("--manifest", required=True, help="manifest.json path or dataset dir")
    p.add_argument("--saliency-dir", required=True, help="directory of <id>.sev maps")
    p.add_argument(
        "--metrics",
        default=",".join(DEFAULT_METRICS),
        help=f"comma-separated subset of {','.join(METRIC_IDS)}",
    )
    p.add_argument(
        "--tau-grid",
        default="uniform:101",
        help="threshold grid: uniform:N, or exact for all distinct map values",
    )
    p.add_argument(
        "--delta",
        default="0.3,0.5,0.7",
        help="comma-separated IoU thresholds; a single value also replaces the "
        "0.5 default of the single-box metrics",
    )
    p.add_argument(
        "--connectivity",
        type=int,
        default=26,
        choices=(6, 26),
        help="3D voxel adjacency",
    )
    p.add_argument("--slice-axis", type=int, default=2, choices=(0, 1, 2),
                   help="axis sliced for the 2D metrics")
    p.add_argument("--format", default="json", choices=("json", "csv"),
                   help="report file format")
    p.add_argument("--output", default=None, metavar="FILE",
                   help="report path (default: stdout)")
    p.add_argument("--pooled-ap", action="store_true",
                   help="pool voxels across samples for vxap instead of "
                   "averaging per-sample AP")
    p.add_argument("--strict", action="store_true",
                   help="abort on the first per-sample error instead of recording it")
    _common_flags(p)

    p = sub.add_parser(
        "synth",
        help="generate synthetic saliency maps from ground truth",
        description="Write one <id>.sev saliency map per positive sample, "
        "derived from its mask with controlled degradations.",
    )
    p.add_argument("--manifest", required=True, help="manifest.json path or dataset dir")
    p.add_argument("--output", required=True, metavar="DIR", help="saliency output directory")
    p.add_argument("--alpha", type=float, default=0.0,
                   help="uniform-noise blend weight in [0,1]")
    p.add_argument("--offset", default="0,0,0",
                   help="comma-separated integer translation of the map")
    p.add_argument("--radius", type=int, default=0, help="box dilation radius")
    _common_flags(p)

    p = sub.add_parser(
        "inspect",
        help="print header and occupancy stats for a volume file",
        description="Print format, dimensions, dtype, and occupancy stats for a "
        "binvox, SEV, or NIfTI file.",
    )
    p.add_argument("path", help="file to inspect")
    _common_flags(p)

    p = sub.add_parser(
        "convert",
        help="transcode binvox / NIfTI / SEV into SEV",
        description="Read a binvox, NIfTI, or SEV file and write it as SEV.",
    )
    p.add_argument("src", help="input file (.binvox, .nii, .nii.gz, .sev)")
    p.add_argument("dst", help="output file (.sev)")
    _common_flags(p)

    return parser


def _setup_logging(args: argparse.Namespace) -> None:
    name = args.log_level or os.environ.get("SE3D_LOG") or "WARNING"
    level = logging.getLevelName(str(name).upper())
    if not isinstance(level, int):
        raise VoxevalError(f"unknown log level {name!r}")
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def _print_config(command: str, cfg: dict) -> None:
    print(f"voxeval {command} config: {json.dumps(cfg, sort_keys=True)}", file=sys.stderr)


def _int_tuple(text: str, n: int, what: str) -> tuple[int, ...]:
    parts = text.split(",")
    if len(parts) != n:
        raise VoxevalError(f"{what} needs {n} comma-separated integers, got {text!r}")
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise VoxevalError(f"{what} needs integers, got {text!r}") from None


def cmd_prepare(args: argparse.Namespace) -> int:
    _print_config(
        "prepare",
        {
            "dataset": args.dataset,
            "input": args.input,
            "noise": args.noise,
            "classes": args.classes,
            "dims": args.dims,
            "output": args.output,
            "seed": args.seed,
        },
    )
    if not args.input:
        raise VoxevalError("prepare needs at least one --input directory")
    if args.dataset == "shapenet-binary":
        ds = build_shapenet_binary(args.input, seed=args.seed)
    elif args.dataset == "shapenet-pairs":
        ds = build_shapenet_pairs(args.input, args.noise, seed=args.seed)
    elif args.dataset in ("scannet-isolated", "scannet-crop"):
        ds = build_scannet(
            args.input,
            mode=args.dataset.split("-", 1)[1],
            classes=tuple(c for c in args.classes.split(",") if c),
            dims=_int_tuple(args.dims, 3, "--dims"),
            seed=args.seed,
        )
    else:
        ds = build_brats_halves(args.input, seed=args.seed)
    manifest_path = write_dataset(ds, args.output)
    by_class = Counter(s.label for s in ds.samples)
    by_split = Counter(s.split for s in ds.samples)
    print(f"dataset {ds.name}: {len(ds.samples)} samples -> {manifest_path}")
    for label in sorted(by_class):
        name = ds.classes[label] if 0 <= label < len(ds.classes) else str(label)
        print(f"  class {name}: {by_class[label]}")
    print(f"  split train: {by_split.get('train', 0)}, test: {by_split.get('test', 0)}")
    if ds.name == "brats-halves":
        band = sum(1 for s in ds.skipped if "exclusion band" in s.get("reason", ""))
        print(f"  halves discarded by tumor-fraction band: {band}")
    print(f"  skipped inputs: {len(ds.skipped)}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = EvalConfig.from_mapping(
        {
            "manifest": args.manifest,
            "saliency_dir": args.saliency_dir,
            "metrics": args.metrics,
            "tau_grid": args.tau_grid,
            "delta": args.delta,
            "connectivity": args.connectivity,
            "slice_axis": args.slice_axis,
            "seed": args.seed,
            "workers": args.workers,
            "pooled_ap": args.pooled_ap,
            "strict": args.strict,
        }
    )
    _print_config("eval", config.echo())
    report = run_eval(config)
    payload = emit_report(report, args.format)
    if args.output:
        Path(args.output).write_bytes(payload)
        print(f"report written to {args.output}", file=sys.stderr)
    else:
        sys.stdout.buffer.write(payload)
        sys.stdout.flush()
    # human summary: the headline row, plus anything skipped or failed
    table = report.aggregates()
    if table:
        print("  ".join(table), file=sys.stderr)
        print("  ".join(f"{v:.4f}" for v in table.values()), file=sys.stderr)
    print(
        f"evaluated {report.n_evaluated}/{report.n_samples} samples, "
        f"{len(report.exclusions)} excluded, {len(report.errors)} errors",
        file=sys.stderr,
    )
    for err in report.errors:
        log.error("sample %s: %s: %s", err["id"], err["kind"], err.get("detail", ""))
    return 1 if report.errors else 0


def cmd_synth(args: argparse.Namespace) -> int:
    spec_dict = {
        "alpha": args.alpha,
        "offset": args.offset,
        "radius": args.radius,
        "seed": args.seed,
        "manifest": args.manifest,
        "output": args.output,
    }
    _print_config("synth", spec_dict)
    manifest = load_manifest(args.manifest)
    root = Path(manifest["_dir"])
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    offset = _int_tuple(args.offset, 3, "--offset")
    written = 0
    skipped = 0
    for i, entry in enumerate(manifest["samples"]):
        if not entry.get("positive", True):
            skipped += 1
            continue
        mask = load_sev(root / entry["mask"])
        spec = DegradationSpec(
            alpha=args.alpha, offset=offset, radius=args.radius, seed=args.seed + i
        )
        saliency = from_gt(mask, spec).astype(np.float32)
        save_sev(out / f"{entry['id']}.sev", saliency)
        written += 1
    print(f"wrote {written} saliency maps to {out} ({skipped} negatives skipped)")
    return 0


def _load_any(path: Path):
    """Read a volume file by extension; returns (format name, ndarray)."""
    name = path.name.lower()
    data = path.read_bytes()
    if name.endswith(".binvox"):
        return "binvox", read_binvox(data).data
    if name.endswith(".sev"):
        return "sev", load_sev(path)
    if name.endswith((".nii", ".nii.gz")):
        return "nifti", read_nifti(data).data
    raise VoxevalError(f"unsupported file type: {path.name}")


def cmd_inspect(args: argparse.Namespace) -> int:
    _print_config("inspect", {"path": args.path})
    path = Path(args.path)
    fmt, arr = _load_any(path)
    dims = "x".join(str(d) for d in arr.shape)
    occupied = int(np.count_nonzero(arr))
    line = f"{path.name}: format {fmt}, dims {dims}, dtype {arr.dtype}, occupied {occupied}"
    if np.issubdtype(arr.dtype, np.floating):
        line += f", min {arr.min():.6g}, max {arr.max():.6g}"
    print(line)
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    _print_config("convert", {"src": args.src, "dst": args.dst})
    src, dst = Path(args.src), Path(args.dst)
    if not dst.name.lower().endswith(".sev"):
        raise VoxevalError("convert writes SEV files; output must end in .sev")
    fmt, arr = _load_any(src)
    dst.write_bytes(write_sev(arr))
    print(f"{src.name} ({fmt}) -> {dst}")
    return 0


_COMMANDS = {
    "prepare": cmd_prepare,
    "eval": cmd_eval,
    "synth": cmd_synth,
    "inspect": cmd_inspect,
    "convert": cmd_convert,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _setup_logging(args)
        return _COMMANDS[args.command](args)
    except VoxevalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
