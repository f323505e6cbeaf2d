"""Dice and Hausdorff evaluation with per-class / Whole / Average aggregation.

Hausdorff distances are measured between boundary voxel sets (a boundary
voxel has a face neighbor outside the mask or sits on the grid border) in
voxel units by default, and are undefined when either side of a pair is
empty; undefined values propagate as ``None``, never as sentinel numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .distance import bounding_window, edt_squared, surface_layer
from .errors import DimMismatchError, EmptyInputError, EmptyMaskError
from .volume import (
    CLASS_NAMES,
    FOREGROUND_CLASSES,
    BinaryMask,
    LabelVolume,
    class_mask,
    foreground_mask,
)

SCOPE_KEYS = ("whole", "sacrum", "left_hip", "right_hip", "lumbar_spine", "average")


def _check_same_grid(pred, gt):
    if pred.dims != gt.dims:
        raise DimMismatchError(f"dims differ: {pred.dims} vs {gt.dims}")
    if pred.spacing != gt.spacing:
        raise DimMismatchError(f"spacing differs: {pred.spacing} vs {gt.spacing}")


def dice(pred: BinaryMask, gt: BinaryMask) -> float:
    """Overlap ratio 2|P∩G| / (|P|+|G|); 1.0 when both masks are empty."""
    _check_same_grid(pred, gt)
    p = pred.count()
    g = gt.count()
    if p + g == 0:
        return 1.0
    inter = int(np.count_nonzero(pred.data & gt.data))
    return 2.0 * inter / (p + g)


def hausdorff(pred: BinaryMask, gt: BinaryMask, units: str = "voxel") -> float:
    """Symmetric Hausdorff distance between the two boundary voxel sets.

    Computed via two distance transforms: each direction takes the maximum,
    over one side's boundary voxels, of the distance to the nearest boundary
    voxel of the other side.
    """
    _check_same_grid(pred, gt)
    if pred.is_empty() or gt.is_empty():
        raise EmptyMaskError("Hausdorff distance undefined for an empty mask")
    if units not in ("voxel", "mm"):
        raise ValueError(f"units must be 'voxel' or 'mm', got {units!r}")
    weighted = units == "mm"
    bp = surface_layer(pred)
    bg = surface_layer(gt)
    # the transforms may run on the joint bounding box: every boundary voxel
    # of either side lies inside it, so no distance changes
    window = bounding_window(bp.data | bg.data)
    bp_w = BinaryMask(bp.data[window], pred.spacing)
    bg_w = BinaryMask(bg.data[window], gt.spacing)
    dist_to_gt = edt_squared(bg_w, weighted=weighted)
    dist_to_pred = edt_squared(bp_w, weighted=weighted)
    forward = float(dist_to_gt[bp_w.data].max())
    backward = float(dist_to_pred[bg_w.data].max())
    return math.sqrt(max(forward, backward))


@dataclass(frozen=True)
class PairMetrics:
    dice: float
    hd: float | None


@dataclass(frozen=True)
class MetricsRecord:
    """Per-class, whole-bone and class-average metrics for one case pair."""

    case_id: str
    per_class: dict[int, PairMetrics]
    whole: PairMetrics
    average: PairMetrics

    def scope(self, key: str) -> PairMetrics:
        if key == "whole":
            return self.whole
        if key == "average":
            return self.average
        for cid, name in CLASS_NAMES.items():
            if name == key:
                return self.per_class[cid]
        raise KeyError(key)

    def to_mapping(self) -> dict:
        out: dict = {"case_id": self.case_id}
        for key in SCOPE_KEYS:
            pm = self.scope(key)
            out[key] = {"dice": pm.dice, "hd": pm.hd}
        return out


def _pair(pred_mask: BinaryMask, gt_mask: BinaryMask, units: str) -> PairMetrics:
    d = dice(pred_mask, gt_mask)
    if pred_mask.is_empty() or gt_mask.is_empty():
        return PairMetrics(d, None)
    return PairMetrics(d, hausdorff(pred_mask, gt_mask, units=units))


def evaluate_case(
    pred: LabelVolume, gt: LabelVolume, units: str = "voxel"
) -> MetricsRecord:
    """Evaluate one prediction against its ground truth.

    The average fields are the arithmetic mean over the four anatomical
    classes; the average HD is undefined whenever any class HD is.
    """
    _check_same_grid(pred, gt)
    per_class = {
        c: _pair(class_mask(pred, c), class_mask(gt, c), units)
        for c in FOREGROUND_CLASSES
    }
    whole = _pair(foreground_mask(pred), foreground_mask(gt), units)
    avg_dice = sum(pm.dice for pm in per_class.values()) / len(per_class)
    hds = [pm.hd for pm in per_class.values()]
    avg_hd = sum(hds) / len(hds) if all(h is not None for h in hds) else None
    return MetricsRecord(pred.case_id or gt.case_id, per_class, whole, PairMetrics(avg_dice, avg_hd))


@dataclass(frozen=True)
class FieldStats:
    """Mean metrics for one table column over a batch of cases."""

    dice_mean: float
    hd_mean: float | None
    hd_undefined: int


@dataclass(frozen=True)
class AggregateSummary:
    n_cases: int
    fields: dict[str, FieldStats]


def aggregate(records: Sequence[MetricsRecord] | Iterable[MetricsRecord]) -> AggregateSummary:
    """Arithmetic means over cases; undefined HDs are excluded and counted."""
    records = list(records)
    if not records:
        raise EmptyInputError("no records to aggregate")
    fields = {}
    for key in SCOPE_KEYS:
        pairs = [r.scope(key) for r in records]
        dice_mean = sum(p.dice for p in pairs) / len(pairs)
        defined = [p.hd for p in pairs if p.hd is not None]
        hd_mean = sum(defined) / len(defined) if defined else None
        fields[key] = FieldStats(dice_mean, hd_mean, len(pairs) - len(defined))
    return AggregateSummary(len(records), fields)


def percent_change(a: float, b: float) -> float:
    """Percentage decrease from ``a`` to ``b``: 100*(a-b)/a."""
    if a == 0:
        raise ValueError("reference value must be non-zero")
    return 100.0 * (a - b) / a
