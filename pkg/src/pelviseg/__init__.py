"""Multi-class pelvic bone CT segmentation toolkit: NIfTI label I/O,
connected-component and SDF post-processing, Dice/Hausdorff evaluation,
dataset manifests/splits and synthetic verification phantoms."""

from . import errors
from .components import ComponentSet, Connectivity, label_components, largest_component
from .dataset import (
    Manifest,
    Split,
    SplitRule,
    TABLE1_SPLITS,
    build_manifest,
    dataset_stats,
    split,
)
from .distance import DistanceField, edt, edt_squared, signed_distance
from .metrics import (
    AggregateSummary,
    MetricsRecord,
    PairMetrics,
    aggregate,
    dice,
    evaluate_case,
    hausdorff,
    percent_change,
)
from .nifti import HeaderSummary, inspect_header, read_label_nifti, write_label_nifti
from .phantom import Fragment, PhantomSpec, Primitive, TruthSheet, generate
from .postproc import (
    DEFAULT_SDF_THRESHOLD,
    FilterConfig,
    FilterMode,
    apply_filter,
    mcr_filter,
    sdf_filter,
)
from .report import emit_grid, emit_records_csv, emit_table
from .volume import (
    BACKGROUND,
    CLASS_NAMES,
    FOREGROUND_CLASSES,
    BinaryMask,
    LabelVolume,
    VoxelIndex,
    class_mask,
    foreground_mask,
    relabel,
    union_mask,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateSummary",
    "BACKGROUND",
    "BinaryMask",
    "CLASS_NAMES",
    "ComponentSet",
    "Connectivity",
    "DEFAULT_SDF_THRESHOLD",
    "DistanceField",
    "FOREGROUND_CLASSES",
    "FilterConfig",
    "FilterMode",
    "Fragment",
    "HeaderSummary",
    "LabelVolume",
    "Manifest",
    "MetricsRecord",
    "PairMetrics",
    "PhantomSpec",
    "Primitive",
    "Split",
    "SplitRule",
    "TABLE1_SPLITS",
    "TruthSheet",
    "VoxelIndex",
    "aggregate",
    "apply_filter",
    "build_manifest",
    "class_mask",
    "dataset_stats",
    "dice",
    "edt",
    "edt_squared",
    "emit_grid",
    "emit_records_csv",
    "emit_table",
    "errors",
    "evaluate_case",
    "foreground_mask",
    "generate",
    "hausdorff",
    "inspect_header",
    "label_components",
    "largest_component",
    "mcr_filter",
    "percent_change",
    "read_label_nifti",
    "relabel",
    "sdf_filter",
    "signed_distance",
    "split",
    "union_mask",
    "write_label_nifti",
]
