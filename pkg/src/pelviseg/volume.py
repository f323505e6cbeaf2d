"""Core voxel-grid data model: label volumes, per-class binary masks.

All volumes use the canonical label coding

    0 = background, 1 = sacrum, 2 = left hip, 3 = right hip, 4 = lumbar spine

and an x-fastest memory layout so that ``data.ravel(order="F")`` is exactly
the on-disk voxel sequence of a NIfTI file.  Values are immutable after
construction; every operation returns a new object.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, NamedTuple

import numpy as np

from .errors import (
    InvalidClassError,
    LabelOutOfRangeError,
    UnmappedLabelError,
)

BACKGROUND = 0
SACRUM = 1
LEFT_HIP = 2
RIGHT_HIP = 3
LUMBAR_SPINE = 4

FOREGROUND_CLASSES = (SACRUM, LEFT_HIP, RIGHT_HIP, LUMBAR_SPINE)
MAX_LABEL = LUMBAR_SPINE

CLASS_NAMES = {
    SACRUM: "sacrum",
    LEFT_HIP: "left_hip",
    RIGHT_HIP: "right_hip",
    LUMBAR_SPINE: "lumbar_spine",
}


class VoxelIndex(NamedTuple):
    """A single in-bounds grid position."""

    i: int
    j: int
    k: int

    def in_bounds(self, dims: tuple[int, int, int]) -> bool:
        return all(0 <= c < n for c, n in zip(self, dims))


def _check_spacing(spacing) -> tuple[float, float, float]:
    spacing = tuple(float(s) for s in spacing)
    if len(spacing) != 3 or any(s <= 0 for s in spacing):
        raise ValueError(f"spacing must be three positive values, got {spacing}")
    return spacing


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class LabelVolume:
    """A 3-D grid of class labels with voxel spacing metadata.

    ``data`` is an (nx, ny, nz) uint8 array, Fortran-ordered and read-only.
    The constructor takes ownership of the array it is given; pass a copy if
    the caller needs to keep a writable reference.
    """

    data: np.ndarray
    spacing: tuple[float, float, float]
    case_id: str = ""
    meta: Mapping[str, Any] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        arr = np.asfortranarray(self.data)
        if arr.ndim != 3 or 0 in arr.shape:
            raise ValueError(f"label data must be a non-empty 3-D grid, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if not np.issubdtype(arr.dtype, np.integer):
                raise ValueError(f"label data must be integer-typed, got {arr.dtype}")
            if arr.size and (arr.min() < 0 or arr.max() > np.iinfo(np.uint8).max):
                raise LabelOutOfRangeError(
                    f"labels outside 0..{MAX_LABEL} in volume {self.case_id!r}"
                )
            arr = np.asfortranarray(arr.astype(np.uint8))
        if arr.max(initial=0) > MAX_LABEL:
            bad = sorted(int(v) for v in np.unique(arr) if v > MAX_LABEL)
            raise LabelOutOfRangeError(
                f"labels {bad} outside 0..{MAX_LABEL} in volume {self.case_id!r}"
            )
        object.__setattr__(self, "data", _freeze(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def present_classes(self) -> tuple[int, ...]:
        return tuple(int(v) for v in np.unique(self.data) if v != BACKGROUND)

    def with_data(self, data: np.ndarray) -> "LabelVolume":
        """Same case, spacing and metadata with replaced voxel data."""
        return LabelVolume(data, self.spacing, self.case_id, meta=self.meta)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelVolume):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and self.case_id == other.case_id
            and np.array_equal(self.data, other.data)
        )


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """A single-class boolean view sharing dims and spacing with its source."""

    data: np.ndarray
    spacing: tuple[float, float, float]

    def __post_init__(self):
        arr = np.asfortranarray(self.data)
        if arr.ndim != 3 or 0 in arr.shape:
            raise ValueError(f"mask data must be a non-empty 3-D grid, got shape {arr.shape}")
        if arr.dtype != np.bool_:
            arr = np.asfortranarray(arr.astype(bool))
        object.__setattr__(self, "data", _freeze(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.data.shape

    def count(self) -> int:
        return int(np.count_nonzero(self.data))

    def is_empty(self) -> bool:
        return not bool(self.data.any())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and np.array_equal(self.data, other.data)
        )


def _check_class_id(class_id: int) -> int:
    class_id = int(class_id)
    if class_id not in FOREGROUND_CLASSES:
        raise InvalidClassError(f"class id must be one of {FOREGROUND_CLASSES}, got {class_id}")
    return class_id


def class_mask(vol: LabelVolume, class_id: int) -> BinaryMask:
    """Boolean mask of the voxels carrying one foreground class."""
    class_id = _check_class_id(class_id)
    return BinaryMask(vol.data == class_id, vol.spacing)


def union_mask(vol: LabelVolume, class_ids: Iterable[int]) -> BinaryMask:
    """Boolean mask of the voxels carrying any of the given classes."""
    ids = sorted({_check_class_id(c) for c in class_ids})
    if not ids:
        raise InvalidClassError("class_ids must be non-empty")
    if ids == list(FOREGROUND_CLASSES):
        return BinaryMask(vol.data != BACKGROUND, vol.spacing)
    return BinaryMask(np.isin(vol.data, ids), vol.spacing)


def foreground_mask(vol: LabelVolume) -> BinaryMask:
    """All foreground classes pooled into one mask ("whole bone")."""
    return union_mask(vol, FOREGROUND_CLASSES)


def apply_label_mapping(arr: np.ndarray, mapping: Mapping[int, int]) -> np.ndarray:
    """Apply a label->label mapping to a raw integer array.

    Every value present in ``arr`` must have a mapping entry, and the image
    of the mapping must lie in 0..4.  Used both by :func:`relabel` and by the
    NIfTI reader's relabel hook (where raw values may exceed 4).
    """
    present = [int(v) for v in np.unique(arr)]
    missing = [v for v in present if v not in mapping]
    if missing:
        raise UnmappedLabelError(f"labels {missing} present in data but absent from mapping")
    bad_targets = sorted({int(t) for t in mapping.values() if not 0 <= int(t) <= MAX_LABEL})
    if bad_targets:
        raise LabelOutOfRangeError(f"mapping targets {bad_targets} outside 0..{MAX_LABEL}")
    out = np.empty(arr.shape, dtype=np.uint8, order="F")
    for src in present:
        out[arr == src] = np.uint8(mapping[src])
    return out


def relabel(vol: LabelVolume, mapping: Mapping[int, int]) -> LabelVolume:
    """Voxelwise label substitution; dims, spacing and case id are kept."""
    return vol.with_data(apply_label_mapping(vol.data, mapping))
