"""Dataset construction: shape pairs, scan crops, brain halves, splits, manifests."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError, ValidationError
from .formats.binvox import read_binvox
from .formats.nifti import read_nifti
from .formats.ply import read_scannet_scene
from .formats.pointcloud import voxelize
from .formats.sev import save_sev
from .grid import VoxelGrid

log = logging.getLogger(__name__)

BUILDER_VERSION = "0.1.0"
TUMOR_FRACTION_MIN = 0.003


@dataclass
class Sample:
    """One dataset entry; order/group/flip fields only exist where they apply."""

    sample_id: str
    label: int
    volume: np.ndarray
    mask: np.ndarray
    order: int | None = None
    group: str | None = None
    flip_eligible: bool | None = None
    split: str | None = None


@dataclass
class Dataset:
    name: str
    seed: int
    classes: tuple[str, ...]
    samples: list[Sample] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    def ids(self) -> list[str]:
        return [s.sample_id for s in self.samples]


def _check_uniform_dims(samples: list[Sample], name: str) -> None:
    dims = {s.volume.shape[:3] for s in samples}
    if len(dims) > 1:
        raise ValidationError(f"{name}: samples disagree on voxel dims: {sorted(dims)}")


def _load_binvox_dir(class_dir: Path, skipped: list[dict]) -> list[tuple[str, np.ndarray]]:
    """All readable, non-empty occupancy grids under a class directory, sorted."""
    out = []
    files = sorted(class_dir.rglob("*.binvox"))
    for f in files:
        rel = "_".join(f.relative_to(class_dir).with_suffix("").parts)
        sample_id = f"{class_dir.name}_{rel}"
        try:
            grid = read_binvox(f.read_bytes())
        except FormatError as exc:
            log.warning("skipping unreadable binvox %s: %s", f, exc)
            skipped.append({"id": sample_id, "reason": f"unreadable binvox: {exc}"})
            continue
        occ = grid.data
        if occ.sum() == 0:
            log.warning("skipping zero-occupancy model %s", f)
            skipped.append({"id": sample_id, "reason": "zero occupancy"})
            continue
        out.append((sample_id, occ))
    return out


def build_shapenet_binary(class_dirs: Sequence[str | Path], seed: int = 0) -> Dataset:
    """Two-class occupancy dataset: the mask is the object volume itself."""
    if len(class_dirs) != 2:
        raise ValidationError("shapenet-binary needs exactly two class directories")
    dirs = [Path(d) for d in class_dirs]
    ds = Dataset("shapenet-binary", seed, tuple(d.name for d in dirs))
    for label, d in enumerate(dirs):
        models = _load_binvox_dir(d, ds.skipped)
        if not models:
            raise ValidationError(f"no usable models under class directory {d}")
        for sample_id, occ in models:
            ds.samples.append(Sample(sample_id, label, occ, occ.copy()))
    _check_uniform_dims(ds.samples, ds.name)
    split_train_test(ds, seed)
    return ds


def prepare_pairs(
    volumes: Sequence[np.ndarray],
    labels: Sequence[int],
    seed: int = 0,
    ids: Sequence[str] | None = None,
) -> Dataset:
    """Concatenate each target volume with a distractor along axis 0.

    Volumes labeled 0 or 1 are targets; any other label marks a noise-pool
    member. For every target, a pool volume is drawn uniformly with
    replacement and the pair is stacked in a random order o (0 = target
    first); the mask covers the target's occupancy inside its own half and is
    zero in the distractor half. The label stays the target's class.
    """
    if len(volumes) != len(labels):
        raise ValidationError("volumes and labels must have equal length")
    if ids is not None and len(ids) != len(volumes):
        raise ValidationError("ids must match volumes in length")
    vols = [np.asarray(v) for v in volumes]
    for v in vols:
        if v.ndim != 3:
            raise ValidationError("pair inputs must be 3D occupancy grids")
    if len({v.shape for v in vols}) > 1:
        raise ValidationError("pair inputs disagree on voxel dims")
    targets = [i for i, l in enumerate(labels) if l in (0, 1)]
    pool = [i for i, l in enumerate(labels) if l not in (0, 1)]
    if not targets:
        raise ValidationError("no target volumes (labels 0/1) given")
    if not pool:
        raise ValidationError("noise pool is empty")
    ds = Dataset("shapenet-pairs", seed, ("0", "1"))
    rng = np.random.default_rng(seed)
    for i in targets:
        j = pool[int(rng.integers(len(pool)))]
        order = int(rng.integers(2))
        target = vols[i].astype(np.uint8)
        noise = vols[j].astype(np.uint8)
        zeros = np.zeros_like(target)
        if order == 0:
            volume = np.concatenate([target, noise], axis=0)
            mask = np.concatenate([target, zeros], axis=0)
        else:
            volume = np.concatenate([noise, target], axis=0)
            mask = np.concatenate([zeros, target], axis=0)
        sample_id = ids[i] if ids is not None else f"pair_{i:05d}"
        ds.samples.append(
            Sample(sample_id, int(labels[i]), volume, mask, order=order)
        )
    split_train_test(ds, seed)
    return ds


def build_shapenet_pairs(
    class_dirs: Sequence[str | Path],
    noise_dirs: Sequence[str | Path],
    seed: int = 0,
) -> Dataset:
    """Directory front end for prepare_pairs: two target classes plus a pool."""
    if len(class_dirs) != 2:
        raise ValidationError("shapenet-pairs needs exactly two class directories")
    if not noise_dirs:
        raise ValidationError("shapenet-pairs needs at least one noise directory")
    skipped: list[dict] = []
    volumes: list[np.ndarray] = []
    labels: list[int] = []
    ids: list[str] = []
    for label, d in enumerate(Path(p) for p in class_dirs):
        models = _load_binvox_dir(d, skipped)
        if not models:
            raise ValidationError(f"no usable models under class directory {d}")
        for sample_id, occ in models:
            volumes.append(occ)
            labels.append(label)
            ids.append(sample_id)
    for d in (Path(p) for p in noise_dirs):
        for sample_id, occ in _load_binvox_dir(d, skipped):
            volumes.append(occ)
            labels.append(-1)
            ids.append(sample_id)
    ds = prepare_pairs(volumes, labels, seed, ids=ids)
    ds.classes = tuple(Path(p).name for p in class_dirs)
    ds.skipped = skipped + ds.skipped
    return ds


def build_scannet(
    scene_dirs: Sequence[str | Path],
    mode: str,
    classes: Sequence[str] = ("chair", "table"),
    dims: tuple[int, int, int] = (32, 32, 32),
    seed: int = 0,
) -> Dataset:
    """Per-instance occupancy grids from annotated scans.

    mode "isolated" voxelizes only the instance's own points; mode "crop"
    voxelizes every scene point inside the instance's tight bounding box. The
    mask is always the instance-only voxelization on the same grid transform,
    so in isolated mode mask and volume coincide.
    """
    if mode not in ("isolated", "crop"):
        raise ValidationError(f"scannet mode must be 'isolated' or 'crop', got {mode!r}")
    if len(classes) != 2:
        raise ValidationError("scannet needs exactly two class label names")
    ds = Dataset(f"scannet-{mode}", seed, tuple(classes))
    for scene in (Path(p) for p in scene_dirs):
        try:
            ply = _find_one(scene, "*.ply")
            agg = _find_one(scene, "*.aggregation.json")
            segs = _find_one(scene, "*.segs.json")
        except ValidationError as exc:
            log.warning("skipping scene %s: %s", scene, exc)
            ds.skipped.append({"id": scene.name, "reason": str(exc)})
            continue
        cloud = read_scannet_scene(ply.read_bytes(), agg.read_bytes(), segs.read_bytes())
        for gid in np.unique(cloud.instance_ids):
            if gid < 0:
                continue
            sel = cloud.instance_ids == gid
            name = cloud.semantic_names[int(cloud.semantic_ids[sel][0])]
            if name not in classes:
                continue
            sample_id = f"{scene.name}_{int(gid):03d}_{name}"
            inst_pts = cloud.points[sel]
            if inst_pts.shape[0] == 0:
                ds.skipped.append({"id": sample_id, "reason": "instance has no points"})
                continue
            lo, hi = inst_pts.min(axis=0), inst_pts.max(axis=0)
            if mode == "isolated":
                sample_pts = inst_pts
            else:
                inside = np.all((cloud.points >= lo) & (cloud.points <= hi), axis=1)
                sample_pts = cloud.points[inside]
            bounds = (sample_pts.min(axis=0), sample_pts.max(axis=0))
            volume = voxelize(sample_pts, dims, bounds=bounds)
            mask = voxelize(inst_pts, dims, bounds=bounds)
            label = list(classes).index(name)
            ds.samples.append(Sample(sample_id, label, volume, mask))
    if not ds.samples:
        raise ValidationError("no instances of the requested classes found")
    split_train_test(ds, seed)
    return ds


def _find_one(scene: Path, pattern: str) -> Path:
    hits = sorted(scene.glob(pattern))
    if not hits:
        raise ValidationError(f"missing {pattern}")
    return hits[0]


def _rotate_volume(a: np.ndarray) -> np.ndarray:
    """-90 degree rotations about axis 0 then axis 1 (spatial axes only)."""
    a = np.rot90(a, k=-1, axes=(1, 2))
    a = np.rot90(a, k=-1, axes=(0, 2))
    return a


def _quantize_u8(a: np.ndarray) -> np.ndarray:
    """Per-channel min-max to [0,1], then to [0,255] rounding half up."""
    a = a.astype(np.float64)
    flat = a.reshape(-1, a.shape[-1]) if a.ndim == 4 else a.reshape(-1, 1)
    lo = flat.min(axis=0)
    hi = flat.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    unit = (a - lo) / span if a.ndim == 4 else (a - lo[0]) / span[0]
    return np.floor(unit * 255.0 + 0.5).astype(np.uint8)


TUMOR_LABELS = (1, 2, 4)


def preprocess_brats_case(
    volume: np.ndarray, seg: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Reorient, quantize, and binarize one scan.

    volume is (W, H, D) or (W, H, D, C) float; seg is (W, H, D) with the
    tumor compartments labeled 1, 2, and 4, which merge into one foreground.
    """
    v = np.asarray(volume)
    s = np.asarray(seg)
    if v.ndim not in (3, 4) or s.ndim != 3:
        raise ValidationError("expected a 3D/4D volume and a 3D segmentation")
    if v.shape[:3] != s.shape:
        raise ValidationError(
            f"volume spatial dims {v.shape[:3]} != segmentation dims {s.shape}"
        )
    v = _rotate_volume(v)
    s = _rotate_volume(s)
    labels = np.rint(s).astype(np.int64)
    mask = np.isin(labels, TUMOR_LABELS).astype(np.uint8)
    return _quantize_u8(v), mask


def split_brats_halves(
    case_id: str,
    volume: np.ndarray,
    seg: np.ndarray,
    min_tumor_fraction: float = TUMOR_FRACTION_MIN,
) -> tuple[list[Sample], list[dict]]:
    """Split one preprocessed-on-the-fly case at the midplane of the last axis.

    Halves with tumor fraction strictly between 0 and the minimum are
    discarded; t == 0 keeps label 0 and t >= minimum keeps label 1.
    """
    vol_u8, mask = preprocess_brats_case(volume, seg)
    axis_len = vol_u8.shape[2]
    if axis_len % 2 != 0:
        raise ValidationError(
            f"cannot halve axis of odd length {axis_len} (case {case_id})"
        )
    half = axis_len // 2
    samples: list[Sample] = []
    skipped: list[dict] = []
    for part, sl in enumerate([slice(0, half), slice(half, axis_len)]):
        v_half = vol_u8[:, :, sl]
        m_half = mask[:, :, sl]
        t = float(m_half.sum()) / m_half.size
        sample_id = f"{case_id}_h{part}"
        if 0.0 < t < min_tumor_fraction:
            skipped.append(
                {"id": sample_id, "reason": f"tumor fraction {t:.6f} inside exclusion band"}
            )
            continue
        label = 1 if t >= min_tumor_fraction else 0
        samples.append(
            Sample(
                sample_id,
                label,
                np.ascontiguousarray(v_half),
                np.ascontiguousarray(m_half),
                group=case_id,
                flip_eligible=True,
            )
        )
    return samples, skipped


def build_brats_halves(
    case_dirs: Sequence[str | Path],
    seed: int = 0,
    min_tumor_fraction: float = TUMOR_FRACTION_MIN,
) -> Dataset:
    """Hemisphere-half dataset from per-case directories.

    Each case directory must hold exactly one segmentation image (file name
    contains "seg") and one intensity image, as .nii or .nii.gz.
    """
    ds = Dataset("brats-halves", seed, ("non-tumor", "tumor"))
    for case in (Path(p) for p in case_dirs):
        nii = sorted(
            f for f in case.iterdir() if f.name.endswith((".nii", ".nii.gz"))
        )
        seg_files = [f for f in nii if "seg" in f.name.lower()]
        vol_files = [f for f in nii if f not in seg_files]
        if len(seg_files) != 1 or len(vol_files) != 1:
            raise ValidationError(
                f"case {case} must hold one volume and one 'seg' NIfTI, "
                f"found {len(vol_files)} and {len(seg_files)}"
            )
        vol = read_nifti(vol_files[0].read_bytes())
        seg = read_nifti(seg_files[0].read_bytes())
        if seg.data.ndim != 3:
            raise ValidationError(f"segmentation {seg_files[0]} must be 3D")
        samples, skipped = split_brats_halves(
            case.name, vol.data, seg.data, min_tumor_fraction
        )
        ds.samples.extend(samples)
        ds.skipped.extend(skipped)
    if not ds.samples:
        raise ValidationError("no usable halves after the tumor-fraction filter")
    _check_uniform_dims(ds.samples, ds.name)
    split_train_test(ds, seed)
    return ds


def split_train_test(
    dataset: Dataset, seed: int, test_fraction: float = 0.2
) -> Dataset:
    """Assign train/test splits in place; grouped samples stay together.

    The test size targets round(n * test_fraction) with a minimum of one
    sample. When samples carry group ids (patients), whole groups go to the
    test side until the target is reached.
    """
    n = len(dataset.samples)
    if n < 2:
        raise ValidationError("need at least two samples to split")
    if not (0.0 < test_fraction < 1.0):
        raise ValidationError("test fraction must be in (0, 1)")
    target = max(1, int(n * test_fraction + 0.5))
    rng = np.random.default_rng(seed)
    groups = [s.group for s in dataset.samples]
    if any(g is not None for g in groups):
        seen: dict[str, list[int]] = {}
        for i, g in enumerate(groups):
            seen.setdefault(g if g is not None else f"__solo_{i}", []).append(i)
        names = list(seen)
        order = rng.permutation(len(names))
        test_idx: set[int] = set()
        for k in order:
            members = seen[names[int(k)]]
            if len(test_idx) >= target:
                break
            if len(test_idx) + len(members) >= n:
                continue
            test_idx.update(members)
        if not test_idx:
            raise ValidationError("grouping leaves no way to form a test split")
    else:
        perm = rng.permutation(n)
        test_idx = set(int(i) for i in perm[:target])
    for i, s in enumerate(dataset.samples):
        s.split = "test" if i in test_idx else "train"
    return dataset


def write_dataset(dataset: Dataset, out_dir: str | Path) -> Path:
    """Write one volume and mask file per sample plus manifest.json."""
    out = Path(out_dir)
    (out / "volumes").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    entries = []
    for s in dataset.samples:
        vol_rel = f"volumes/{s.sample_id}.sev"
        mask_rel = f"masks/{s.sample_id}.sev"
        save_sev(out / vol_rel, s.volume)
        save_sev(out / mask_rel, s.mask)
        entry = {
            "id": s.sample_id,
            "label": s.label,
            "split": s.split,
            "positive": bool(s.mask.sum() > 0),
            "volume": vol_rel,
            "mask": mask_rel,
        }
        if s.order is not None:
            entry["order"] = s.order
        if s.group is not None:
            entry["group"] = s.group
        if s.flip_eligible is not None:
            entry["flip_eligible"] = s.flip_eligible
        entries.append(entry)
    manifest = {
        "name": dataset.name,
        "builder_version": BUILDER_VERSION,
        "seed": dataset.seed,
        "classes": list(dataset.classes),
        "samples": entries,
        "skipped": dataset.skipped,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n")
    return path


def load_manifest(path: str | Path) -> dict:
    """Read and sanity-check a manifest; accepts the file or its directory."""
    p = Path(path)
    if p.is_dir():
        p = p / "manifest.json"
    try:
        manifest = json.loads(p.read_text())
    except FileNotFoundError:
        raise ValidationError(f"no manifest at {p}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"manifest {p} is not valid JSON: {exc}") from None
    for key in ("name", "seed", "samples"):
        if key not in manifest:
            raise FormatError(f"manifest {p} lacks required key {key!r}")
    ids = [s.get("id") for s in manifest["samples"]]
    if len(set(ids)) != len(ids):
        raise FormatError(f"manifest {p} has duplicate sample ids")
    manifest["_dir"] = str(p.parent)
    return manifest
