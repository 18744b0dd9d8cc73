"""voxeval: saliency-map evaluation benchmarks for 3D volumes.

Box-localization and voxel-classification metrics over threshold sweeps,
dataset builders for voxelized shape/scan/scan-pair/brain-half benchmarks,
synthetic-saliency generators for validating the metrics, and the file
formats tying it together.
"""

__version__ = "0.1.0"

from .components import (
    ComponentLabeling,
    Connectivity,
    component_bboxes,
    label_components,
    largest_component,
    largest_component_id,
)
from .datasets import (
    Dataset,
    Sample,
    build_brats_halves,
    build_scannet,
    build_shapenet_binary,
    build_shapenet_pairs,
    load_manifest,
    prepare_pairs,
    preprocess_brats_case,
    split_brats_halves,
    split_train_test,
    write_dataset,
)
from ._sweep import warmup
from .errors import FormatError, ValidationError, VoxevalError
from .grid import (
    BoundingBox,
    ThresholdGrid,
    VoxelGrid,
    bbox_of,
    iou,
    normalize_saliency,
    threshold,
)
from .report import (
    EvalConfig,
    MetricReport,
    emit_report,
    eval_metrics,
    pair_inputs,
    run_eval,
)
from .synth import DegradationSpec, from_gt, gaussian_blob
from .wsol import (
    WsolResult,
    box_acc_3d,
    box_acc_3d_v2,
    max_3d_box_acc,
    max_3d_box_acc_v2,
    max_box_acc_2d,
    max_box_acc_2d_v2,
)
from .wsss import (
    F1Result,
    McResult,
    PrCurve,
    f1_sweep,
    mass_concentration,
    pr_curve,
    pxap_slicewise,
    sample_ap,
    vx_prec_rec,
    vxap,
)

__all__ = [
    "__version__",
    "BoundingBox",
    "ComponentLabeling",
    "Connectivity",
    "Dataset",
    "DegradationSpec",
    "EvalConfig",
    "F1Result",
    "FormatError",
    "McResult",
    "MetricReport",
    "PrCurve",
    "Sample",
    "ThresholdGrid",
    "ValidationError",
    "VoxelGrid",
    "VoxevalError",
    "WsolResult",
    "bbox_of",
    "box_acc_3d",
    "box_acc_3d_v2",
    "build_brats_halves",
    "build_scannet",
    "build_shapenet_binary",
    "build_shapenet_pairs",
    "component_bboxes",
    "emit_report",
    "eval_metrics",
    "f1_sweep",
    "from_gt",
    "gaussian_blob",
    "iou",
    "label_components",
    "largest_component",
    "largest_component_id",
    "load_manifest",
    "mass_concentration",
    "max_3d_box_acc",
    "max_3d_box_acc_v2",
    "max_box_acc_2d",
    "max_box_acc_2d_v2",
    "normalize_saliency",
    "pair_inputs",
    "pr_curve",
    "prepare_pairs",
    "preprocess_brats_case",
    "pxap_slicewise",
    "run_eval",
    "sample_ap",
    "split_brats_halves",
    "split_train_test",
    "threshold",
    "vx_prec_rec",
    "vxap",
    "warmup",
    "write_dataset",
]
