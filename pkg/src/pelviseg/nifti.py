"""Bit-exact single-file NIfTI-1 reader/writer for label volumes.

Only the 348-byte NIfTI-1 header plus a 4-byte extension stub is handled;
gzip containers are detected by their leading magic bytes.  Byte order is
inferred from ``dim[0]`` (valid values are 1..7).  The writer always emits
little-endian uint8 with data at offset 352, so written files are
byte-deterministic.

Orientation (qform/sform) is carried through verbatim when a read volume is
rewritten, but never interpreted: all processing happens in voxel index
space.  Spacing is stored at the format's float32 precision.
"""

from __future__ import annotations

import gzip
import os
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import (
    LabelOutOfRangeError,
    NonIntegralLabelsError,
    NotNiftiError,
    ScaledLabelsError,
    UnsupportedDatatypeError,
    UnsupportedRankError,
)
from .volume import MAX_LABEL, LabelVolume, apply_label_mapping

HEADER_SIZE = 348
DATA_OFFSET = 352
GZIP_MAGIC = b"\x1f\x8b"
MAGIC_SINGLE = b"n+1\x00"
MAGIC_PAIRED = b"ni1\x00"

DT_UINT8 = 2
DT_INT16 = 4
DT_INT32 = 8
DT_FLOAT32 = 16
DT_UINT16 = 512

_DTYPES = {
    DT_UINT8: ("uint8", np.dtype(np.uint8), 8),
    DT_INT16: ("int16", np.dtype(np.int16), 16),
    DT_INT32: ("int32", np.dtype(np.int32), 32),
    DT_FLOAT32: ("float32", np.dtype(np.float32), 32),
    DT_UINT16: ("uint16", np.dtype(np.uint16), 16),
}

_HEADER_FIELDS = [
    ("sizeof_hdr", "i4"),
    ("data_type", "S10"),
    ("db_name", "S18"),
    ("extents", "i4"),
    ("session_error", "i2"),
    ("regular", "S1"),
    ("dim_info", "u1"),
    ("dim", "i2", 8),
    ("intent_p1", "f4"),
    ("intent_p2", "f4"),
    ("intent_p3", "f4"),
    ("intent_code", "i2"),
    ("datatype", "i2"),
    ("bitpix", "i2"),
    ("slice_start", "i2"),
    ("pixdim", "f4", 8),
    ("vox_offset", "f4"),
    ("scl_slope", "f4"),
    ("scl_inter", "f4"),
    ("slice_end", "i2"),
    ("slice_code", "u1"),
    ("xyzt_units", "u1"),
    ("cal_max", "f4"),
    ("cal_min", "f4"),
    ("slice_duration", "f4"),
    ("toffset", "f4"),
    ("glmax", "i4"),
    ("glmin", "i4"),
    ("descrip", "S80"),
    ("aux_file", "S24"),
    ("qform_code", "i2"),
    ("sform_code", "i2"),
    ("quatern_b", "f4"),
    ("quatern_c", "f4"),
    ("quatern_d", "f4"),
    ("qoffset_x", "f4"),
    ("qoffset_y", "f4"),
    ("qoffset_z", "f4"),
    ("srow_x", "f4", 4),
    ("srow_y", "f4", 4),
    ("srow_z", "f4", 4),
    ("intent_name", "S16"),
    ("magic", "S4"),
]

_ORIENTATION_FIELDS = (
    "qform_code",
    "sform_code",
    "quatern_b",
    "quatern_c",
    "quatern_d",
    "qoffset_x",
    "qoffset_y",
    "qoffset_z",
    "srow_x",
    "srow_y",
    "srow_z",
)

NIFTI_UNITS_MM = 2


def _header_dtype(byteorder: str) -> np.dtype:
    fields = []
    for spec in _HEADER_FIELDS:
        name, fmt = spec[0], spec[1]
        fmt = fmt if fmt.startswith("S") else byteorder + fmt
        if len(spec) == 3:
            fields.append((name, fmt, spec[2]))
        else:
            fields.append((name, fmt))
    dt = np.dtype(fields)
    assert dt.itemsize == HEADER_SIZE
    return dt


_HDR_LE = _header_dtype("<")
_HDR_BE = _header_dtype(">")


@dataclass(frozen=True)
class HeaderSummary:
    """Facts derivable from the header without touching the voxel payload."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    datatype: str
    endianness: str
    gzipped: bool


def _is_gzipped(path) -> bool:
    with open(path, "rb") as f:
        return f.read(2) == GZIP_MAGIC


def _open_stream(path, gzipped: bool):
    return gzip.open(path, "rb") if gzipped else open(path, "rb")


def _parse_header(raw: bytes, path) -> tuple[np.void, str]:
    if len(raw) < HEADER_SIZE:
        raise NotNiftiError(f"{path}: file shorter than the {HEADER_SIZE}-byte header")
    for hdr_dtype, endianness in ((_HDR_LE, "little"), (_HDR_BE, "big")):
        hdr = np.frombuffer(raw[:HEADER_SIZE], dtype=hdr_dtype)[0]
        if 1 <= int(hdr["dim"][0]) <= 7:
            break
    else:
        raise NotNiftiError(f"{path}: dim[0] invalid under either byte order")
    if int(hdr["sizeof_hdr"]) != HEADER_SIZE:
        raise NotNiftiError(f"{path}: sizeof_hdr is {int(hdr['sizeof_hdr'])}, expected {HEADER_SIZE}")
    # numpy S-typed scalars drop trailing NULs, so compare padded bytes
    magic = bytes(hdr["magic"]).ljust(4, b"\x00")
    if magic == MAGIC_PAIRED:
        raise NotNiftiError(f"{path}: paired .hdr/.img NIfTI is not supported")
    if magic != MAGIC_SINGLE:
        raise NotNiftiError(f"{path}: bad magic {magic!r}")
    return hdr, endianness


def _grid_shape(hdr, path) -> tuple[int, int, int]:
    dim = hdr["dim"]
    rank = int(dim[0])
    if rank < 3:
        raise UnsupportedRankError(f"{path}: rank-{rank} volume, need 3-D")
    extra = [int(dim[a]) for a in range(4, rank + 1)]
    if any(e != 1 for e in extra):
        raise UnsupportedRankError(f"{path}: trailing dims {extra} are not singleton")
    shape = tuple(int(dim[a]) for a in (1, 2, 3))
    if any(n < 1 for n in shape):
        raise NotNiftiError(f"{path}: non-positive grid dims {shape}")
    return shape


def _spacing(hdr, path) -> tuple[float, float, float]:
    spacing = tuple(float(hdr["pixdim"][a]) for a in (1, 2, 3))
    if any(not s > 0 for s in spacing):
        raise NotNiftiError(f"{path}: non-positive pixdim {spacing}")
    return spacing


def _datatype(hdr, path):
    code = int(hdr["datatype"])
    if code not in _DTYPES:
        raise UnsupportedDatatypeError(f"{path}: datatype code {code} not in supported label family")
    name, dtype, bitpix = _DTYPES[code]
    if int(hdr["bitpix"]) != bitpix:
        raise NotNiftiError(f"{path}: bitpix {int(hdr['bitpix'])} inconsistent with {name}")
    return name, dtype


def inspect_header(path) -> HeaderSummary:
    """Summarize a NIfTI file from its header alone."""
    gzipped = _is_gzipped(path)
    with _open_stream(path, gzipped) as f:
        raw = f.read(HEADER_SIZE)
    hdr, endianness = _parse_header(raw, path)
    name, _ = _datatype(hdr, path)
    return HeaderSummary(_grid_shape(hdr, path), _spacing(hdr, path), name, endianness, gzipped)


def _case_id(path) -> str:
    name = os.path.basename(str(path))
    for suffix in (".nii.gz", ".nii"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return os.path.splitext(name)[0]


def read_label_nifti(path, relabel: Mapping[int, int] | None = None) -> LabelVolume:
    """Read a label volume, decoding to the canonical 0..4 coding.

    ``relabel`` optionally maps the file's raw integer labels onto the
    canonical coding before validation; without it, raw values must already
    lie in 0..4.
    """
    gzipped = _is_gzipped(path)
    with _open_stream(path, gzipped) as f:
        raw = f.read()
    hdr, endianness = _parse_header(raw, path)
    shape = _grid_shape(hdr, path)
    spacing = _spacing(hdr, path)
    name, dtype = _datatype(hdr, path)
    if endianness == "big":
        dtype = dtype.newbyteorder(">")

    slope = float(hdr["scl_slope"])
    inter = float(hdr["scl_inter"])
    slope = 0.0 if np.isnan(slope) else slope
    inter = 0.0 if np.isnan(inter) else inter
    if slope not in (0.0, 1.0) or inter != 0.0:
        raise ScaledLabelsError(f"{path}: scaled voxels (slope={slope}, inter={inter}) on a label read")

    offset = int(hdr["vox_offset"])
    if offset < HEADER_SIZE:
        raise NotNiftiError(f"{path}: vox_offset {offset} before end of header")
    nvox = shape[0] * shape[1] * shape[2]
    payload = raw[offset : offset + nvox * dtype.itemsize]
    if len(payload) != nvox * dtype.itemsize:
        raise NotNiftiError(f"{path}: truncated voxel payload")
    flat = np.frombuffer(payload, dtype=dtype)
    if name == "float32":
        rounded = np.rint(flat)
        if not np.all(np.abs(flat - rounded) <= 1e-6):
            raise NonIntegralLabelsError(f"{path}: float labels are not integral")
        flat = rounded.astype(np.int64)
    arr = flat.reshape(shape, order="F")

    if relabel is not None:
        arr = apply_label_mapping(arr, relabel)
    else:
        lo = int(arr.min())
        hi = int(arr.max())
        if lo < 0 or hi > MAX_LABEL:
            raise LabelOutOfRangeError(
                f"{path}: labels span {lo}..{hi}, outside 0..{MAX_LABEL} "
                "and no relabel mapping supplied"
            )

    meta = {"nifti_orientation": _orientation_meta(hdr)}
    data = np.asfortranarray(arr.astype(np.uint8))
    return LabelVolume(data, spacing, _case_id(path), meta=meta)


def _orientation_meta(hdr) -> dict:
    meta: dict = {"pixdim0": float(hdr["pixdim"][0]), "xyzt_units": int(hdr["xyzt_units"])}
    for key in _ORIENTATION_FIELDS:
        value = hdr[key]
        if isinstance(value, np.ndarray):
            meta[key] = tuple(float(v) for v in value)
        elif key.endswith("_code"):
            meta[key] = int(value)
        else:
            meta[key] = float(value)
    return meta


def write_label_nifti(vol: LabelVolume, path, gzip_compress: bool = False) -> None:
    """Write a single-file little-endian uint8 NIfTI-1 volume.

    ``read_label_nifti(write_label_nifti(vol)) == vol`` holds field for
    field (the file name should carry the case id).  Orientation fields from
    a previously read file are written back verbatim.
    """
    hdr = np.zeros((), dtype=_HDR_LE)
    hdr["sizeof_hdr"] = HEADER_SIZE
    hdr["regular"] = b"r"
    nx, ny, nz = vol.dims
    hdr["dim"] = [3, nx, ny, nz, 1, 1, 1, 1]
    hdr["datatype"] = DT_UINT8
    hdr["bitpix"] = 8
    hdr["pixdim"] = [1.0, *vol.spacing, 0.0, 0.0, 0.0, 0.0]
    hdr["vox_offset"] = DATA_OFFSET
    hdr["scl_slope"] = 1.0
    hdr["scl_inter"] = 0.0
    hdr["xyzt_units"] = NIFTI_UNITS_MM
    hdr["magic"] = MAGIC_SINGLE

    orientation = (vol.meta or {}).get("nifti_orientation")
    if orientation:
        pixdim = hdr["pixdim"].copy()
        pixdim[0] = orientation.get("pixdim0", 1.0)
        hdr["pixdim"] = pixdim
        hdr["xyzt_units"] = orientation.get("xyzt_units", NIFTI_UNITS_MM)
        for key in _ORIENTATION_FIELDS:
            if key in orientation:
                hdr[key] = orientation[key]

    payload = vol.data.ravel(order="F").tobytes()
    blob = hdr.tobytes() + b"\x00\x00\x00\x00" + payload
    if gzip_compress:
        with open(path, "wb") as f:
            # fixed mtime and no embedded name keep the bytes deterministic
            with gzip.GzipFile(filename="", fileobj=f, mode="wb", mtime=0) as gz:
                gz.write(blob)
    else:
        with open(path, "wb") as f:
            f.write(blob)
