"""Thin scripting bindings for pelviseg post-processing and evaluation.

Everything here is marshalling: volumes come in as in-memory integer arrays
plus spacing (or as NIfTI paths), results go back out as arrays or plain
mappings.  All semantics live in pelviseg itself, so binding output is
byte-identical to the command-line pipeline on the same inputs.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

import pelviseg
from pelviseg import (
    Connectivity,
    FilterConfig,
    FilterMode,
    LabelVolume,
    apply_filter,
    evaluate_case,
    read_label_nifti,
    write_label_nifti,
)

__version__ = pelviseg.__version__

__all__ = ["Volume", "postprocess", "evaluate", "__version__"]


class Volume:
    """A label volume handle constructed from an array or a NIfTI file.

    Validation is exactly that of the core model: integer labels 0..4 and
    strictly positive spacing.  ``copy=False`` adopts the caller's array
    without copying when its dtype and layout already match (the array is
    then frozen); semantics are identical either way.
    """

    def __init__(self, inner: LabelVolume):
        self._inner = inner

    @classmethod
    def from_array(
        cls,
        array: np.ndarray,
        spacing: tuple[float, float, float],
        case_id: str = "",
        copy: bool = True,
    ) -> "Volume":
        data = np.array(array, copy=True) if copy else array
        return cls(LabelVolume(data, spacing, case_id))

    @classmethod
    def from_nifti(cls, path, relabel: Mapping[int, int] | None = None) -> "Volume":
        return cls(read_label_nifti(path, relabel=relabel))

    def to_array(self) -> np.ndarray:
        return np.array(self._inner.data, copy=True)

    def save(self, path, gzip_compress: bool = False) -> None:
        write_label_nifti(self._inner, path, gzip_compress=gzip_compress)

    @property
    def dims(self) -> tuple[int, int, int]:
        return self._inner.dims

    @property
    def spacing(self) -> tuple[float, float, float]:
        return self._inner.spacing

    @property
    def case_id(self) -> str:
        return self._inner.case_id

    def unwrap(self) -> LabelVolume:
        return self._inner

    def __eq__(self, other) -> bool:
        if isinstance(other, Volume):
            return self._inner == other._inner
        return NotImplemented


def _as_label_volume(volume: "Volume | LabelVolume") -> LabelVolume:
    if isinstance(volume, Volume):
        return volume.unwrap()
    if isinstance(volume, LabelVolume):
        return volume
    raise TypeError(f"expected Volume or LabelVolume, got {type(volume).__name__}")


def postprocess(
    volume: "Volume | LabelVolume",
    mode: str = "sdf",
    t: float = 35.0,
    connectivity: int = 26,
    per_class: bool = True,
) -> Volume:
    """Apply the none/mcr/sdf filter; mirrors ``pelviseg postprocess``."""
    cfg = FilterConfig(FilterMode(mode), float(t), Connectivity(connectivity), per_class)
    return Volume(apply_filter(_as_label_volume(volume), cfg))


def evaluate(
    pred: "Volume | LabelVolume",
    gt: "Volume | LabelVolume",
    units: str = "voxel",
) -> dict:
    """Score a prediction against ground truth; mirrors ``pelviseg evaluate``.

    Returns a mapping with per-scope ``{"dice": float, "hd": float | None}``
    entries; an undefined Hausdorff distance is ``None``, never a number.
    """
    record = evaluate_case(_as_label_volume(pred), _as_label_volume(gt), units=units)
    return record.to_mapping()
