"""Exact Euclidean distance transforms and signed distance fields.

The squared transform is dimension-separable: the first axis is handled with
a forward/backward sweep (nearest seed along the line), the remaining axes
with the lower-envelope-of-parabolas pass, each linear in the axis length.
All intermediate values stay exactly representable in float64, so unweighted
squared distances are exact integers and tests can compare them against a
brute-force oracle with zero tolerance.

The envelope kernel is JIT-compiled with numba when available (needed for
512-cube grids); the interpreted fallback runs the same code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMaskError, FullMaskError
from .volume import BinaryMask

# above any real squared distance on a supported grid; offsets survive
# float64 rounding without ever dipping below real values
_INF = 1e30


def _envelope_pass_lines(lines: np.ndarray, w2: float) -> None:
    """In-place 1-D transform of every row: D(q) = min_p w2*(q-p)^2 + f(p)."""
    m, n = lines.shape
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1, dtype=np.float64)
    d = np.empty(n, dtype=np.float64)
    inf = np.inf
    for r in range(m):
        f = lines[r]
        k = 0
        v[0] = 0
        z[0] = -inf
        z[1] = inf
        for q in range(1, n):
            fq = f[q] + w2 * q * q
            s = (fq - (f[v[k]] + w2 * v[k] * v[k])) / (2.0 * w2 * (q - v[k]))
            while s <= z[k]:
                k -= 1
                s = (fq - (f[v[k]] + w2 * v[k] * v[k])) / (2.0 * w2 * (q - v[k]))
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = inf
        k = 0
        for q in range(n):
            while z[k + 1] < q:
                k += 1
            dq = q - v[k]
            d[q] = w2 * dq * dq + f[v[k]]
        lines[r] = d


try:  # pragma: no cover - exercised whenever numba is installed
    import numba

    _envelope_kernel = numba.njit(cache=True)(_envelope_pass_lines)
except ImportError:  # pragma: no cover
    _envelope_kernel = None


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Per-voxel Euclidean distance to a reference mask.

    Values are in voxel units unless the transform was spacing-weighted, in
    which case they are millimeters.  Signed fields are negative strictly
    inside the mask and zero on its boundary layer.
    """

    values: np.ndarray
    spacing: tuple[float, float, float]
    units: str = "voxel"
    signed: bool = False

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.values.shape


def _envelope_pass(f: np.ndarray, axis: int, w2: float) -> np.ndarray:
    moved = np.moveaxis(f, axis, -1)
    lines = np.ascontiguousarray(moved).reshape(-1, moved.shape[-1])
    kernel = _envelope_kernel if _envelope_kernel is not None else _envelope_pass_lines
    kernel(lines, w2)
    return np.moveaxis(lines.reshape(moved.shape), -1, axis)


def _axis0_sweep(seed: np.ndarray) -> np.ndarray:
    """Steps along axis 0 to the nearest seed in the same line (big if none)."""
    nx = seed.shape[0]
    big = sum(seed.shape) + 1
    g = np.empty(seed.shape, dtype=np.int64)
    g[0] = np.where(seed[0], 0, big)
    for i in range(1, nx):
        g[i] = np.where(seed[i], 0, np.minimum(g[i - 1] + 1, big))
    for i in range(nx - 2, -1, -1):
        np.minimum(g[i], g[i + 1] + 1, out=g[i])
    return g


def edt_squared(mask: BinaryMask, weighted: bool = False) -> np.ndarray:
    """Exact squared distance from every voxel center to the nearest mask voxel.

    Returns int64 in voxel units, or float64 in squared millimeters when
    ``weighted`` scales each axis by the voxel spacing.
    """
    seed = mask.data
    if not seed.any():
        raise EmptyMaskError("distance transform of an empty mask")
    steps = _axis0_sweep(seed)
    none_in_line = steps >= sum(seed.shape) + 1
    w2 = [float(s) * float(s) for s in mask.spacing] if weighted else [1.0, 1.0, 1.0]
    f = (steps.astype(np.float64) ** 2) * w2[0]
    f[none_in_line] = _INF
    for axis in (1, 2):
        f = _envelope_pass(f, axis, w2[axis])
    if weighted:
        return f
    return np.rint(f).astype(np.int64)


def edt(mask: BinaryMask, weighted: bool = False) -> DistanceField:
    """Exact Euclidean distance transform of a non-empty mask."""
    sq = edt_squared(mask, weighted=weighted)
    values = np.sqrt(sq.astype(np.float64))
    return DistanceField(values, mask.spacing, units="mm" if weighted else "voxel")


def interface_layer(mask: BinaryMask) -> BinaryMask:
    """Mask voxels with a face neighbor in the in-grid complement.

    Voxels touching the grid border do not count as interface: only the
    complement inside the grid defines the zero level of the signed field.
    """
    return BinaryMask(_boundary(mask.data, border_is_background=False), mask.spacing)


def surface_layer(mask: BinaryMask) -> BinaryMask:
    """Mask voxels with a face neighbor outside the mask or on the grid border."""
    return BinaryMask(_boundary(mask.data, border_is_background=True), mask.spacing)


def bounding_window(data: np.ndarray) -> tuple[slice, slice, slice]:
    """Tight slices around the true voxels of a non-empty boolean grid."""
    window = []
    for axis in range(3):
        other = tuple(a for a in range(3) if a != axis)
        profile = np.flatnonzero(data.any(axis=other))
        window.append(slice(int(profile[0]), int(profile[-1]) + 1))
    return tuple(window)


def _neighbor_occupancy(data: np.ndarray, axis: int, direction: int, fill: bool) -> np.ndarray:
    out = np.full(data.shape, fill, dtype=bool)
    src = [slice(None)] * 3
    dst = [slice(None)] * 3
    if direction > 0:
        dst[axis] = slice(0, -1)
        src[axis] = slice(1, None)
    else:
        dst[axis] = slice(1, None)
        src[axis] = slice(0, -1)
    out[tuple(dst)] = data[tuple(src)]
    return out


def _boundary(data: np.ndarray, border_is_background: bool) -> np.ndarray:
    interior = data.copy()
    fill = not border_is_background
    for axis in range(3):
        for direction in (1, -1):
            interior &= _neighbor_occupancy(data, axis, direction, fill)
    return data & ~interior


def signed_distance(mask: BinaryMask) -> DistanceField:
    """Signed Euclidean distance: zero on the mask's interface layer,
    negative strictly inside, positive outside.

    The zero level sits on the mask voxels face-adjacent to the complement;
    interior voxels measure distance to that layer, outside voxels to the
    mask itself.  A mask with no strict interior (e.g. a single voxel) is
    zero everywhere on the mask.
    """
    data = mask.data
    if not data.any():
        raise EmptyMaskError("signed distance of an empty mask")
    if data.all():
        raise FullMaskError("signed distance undefined for a full-grid mask")
    layer = interface_layer(mask)
    outside = np.sqrt(edt_squared(mask).astype(np.float64))
    inside = np.sqrt(edt_squared(layer).astype(np.float64))
    values = np.where(data, -inside, outside)
    return DistanceField(values, mask.spacing, units="voxel", signed=True)
