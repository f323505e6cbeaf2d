"""Prediction post-processing: MCR size filtering and the SDF distance filter.

The classic cleanup keeps only the maximum connected region (MCR) of each
anatomical class.  The SDF filter relaxes that: secondary components survive
when their minimum center-to-center distance to the class MCR is within a
threshold, so bone pieces lying near the main structure are not discarded
along with far-away false positives.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .components import Connectivity, label_components, largest_component_id
from .distance import bounding_window, edt_squared
from .volume import BACKGROUND, FOREGROUND_CLASSES, BinaryMask, LabelVolume

DEFAULT_SDF_THRESHOLD = 35.0


class FilterMode(str, Enum):
    NONE = "none"
    MCR = "mcr"
    SDF = "sdf"


@dataclass(frozen=True)
class FilterConfig:
    """Post-processing configuration.

    ``threshold`` is the SDF distance bound in voxel units; ``per_class``
    treats every anatomical class independently (the default), otherwise the
    pooled foreground is filtered as one structure.
    """

    mode: FilterMode = FilterMode.SDF
    threshold: float = DEFAULT_SDF_THRESHOLD
    connectivity: Connectivity = Connectivity.VERTEX26
    per_class: bool = True

    def __post_init__(self):
        if self.threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")


def _class_masks(vol: LabelVolume, per_class: bool):
    """Yield (restore_values, mask_data) per filtering unit."""
    if per_class:
        for c in FOREGROUND_CLASSES:
            m = vol.data == c
            if m.any():
                yield np.uint8(c), m
    else:
        m = vol.data != BACKGROUND
        if m.any():
            yield vol.data, m


def _keep_largest(mask_data: np.ndarray, spacing, conn: Connectivity) -> np.ndarray:
    # component analysis inside the class bounding box; scan order (and so
    # component ids and tie-breaks) is unchanged by the crop
    window = bounding_window(mask_data)
    cs = label_components(BinaryMask(mask_data[window], spacing), conn)
    if cs.count <= 1:
        return mask_data
    kept = np.zeros(mask_data.shape, dtype=bool, order="F")
    kept[window] = cs.label_grid == largest_component_id(cs)
    return kept


def mcr_filter(
    vol: LabelVolume,
    conn: Connectivity = Connectivity.VERTEX26,
    per_class: bool = True,
) -> LabelVolume:
    """Keep only the maximum connected region of each class."""
    out = np.zeros(vol.dims, dtype=np.uint8, order="F")
    for restore, mask_data in _class_masks(vol, per_class):
        kept = _keep_largest(mask_data, vol.spacing, conn)
        if isinstance(restore, np.ndarray):
            out[kept] = restore[kept]
        else:
            out[kept] = restore
    return vol.with_data(out)


def sdf_filter(vol: LabelVolume, cfg: FilterConfig) -> LabelVolume:
    """Keep the MCR plus every secondary component within the distance bound.

    For each class: the MCR is always kept; any other component survives iff
    the minimum unsigned distance from its voxels to the MCR (voxel units,
    center to center) does not exceed ``cfg.threshold``.
    """
    if cfg.mode is not FilterMode.SDF:
        raise ValueError(f"sdf_filter requires mode 'sdf', got {cfg.mode.value!r}")
    tsq = float(cfg.threshold) * float(cfg.threshold)
    out = np.zeros(vol.dims, dtype=np.uint8, order="F")
    for restore, mask_data in _class_masks(vol, cfg.per_class):
        window = bounding_window(mask_data)
        cs = label_components(BinaryMask(mask_data[window], vol.spacing), cfg.connectivity)
        if cs.count <= 1:
            kept = mask_data
        else:
            mcr_id = largest_component_id(cs)
            mcr_mask = BinaryMask(cs.label_grid == mcr_id, vol.spacing)
            dist_sq = edt_squared(mcr_mask)
            kept_w = mcr_mask.data.copy()
            for cid in range(1, cs.count + 1):
                if cid == mcr_id:
                    continue
                comp = cs.label_grid == cid
                if float(dist_sq[comp].min()) <= tsq:
                    kept_w |= comp
            kept = np.zeros(vol.dims, dtype=bool, order="F")
            kept[window] = kept_w
        if isinstance(restore, np.ndarray):
            out[kept] = restore[kept]
        else:
            out[kept] = restore
    return vol.with_data(out)


def apply_filter(vol: LabelVolume, cfg: FilterConfig) -> LabelVolume:
    """Dispatch on the configured mode; NONE is the identity."""
    if cfg.mode is FilterMode.NONE:
        return vol
    if cfg.mode is FilterMode.MCR:
        return mcr_filter(vol, cfg.connectivity, cfg.per_class)
    return sdf_filter(vol, cfg)
