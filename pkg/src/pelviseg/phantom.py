"""Synthetic multi-class phantoms with analytically known structure.

A phantom is a ground-truth/prediction pair built from simple primitives
(balls, boxes) plus injected fragments placed at an exact, axis-aligned
center-to-center distance from their class's maximum connected region.  The
accompanying truth sheet records the realized fragment distances and the
exact Dice/Hausdorff values of the pair, all computed by brute-force code in
this module, never by the library kernels the phantoms are used to test.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SpecOutOfBoundsError, UnsatisfiableGapError
from .volume import CLASS_NAMES, FOREGROUND_CLASSES, LabelVolume

TRUTH_VERSION = 1
SPEC_VERSION = 1

_SCOPES = ("whole", "sacrum", "left_hip", "right_hip", "lumbar_spine", "average")


@dataclass(frozen=True)
class Primitive:
    """One solid shape: a ball (size = radius) or a box (size = full extents)."""

    shape: str
    center: tuple[int, int, int]
    size: int | tuple[int, int, int]
    class_id: int

    def __post_init__(self):
        if self.shape not in ("ball", "box"):
            raise ValueError(f"shape must be 'ball' or 'box', got {self.shape!r}")
        if self.class_id not in FOREGROUND_CLASSES:
            raise ValueError(f"class_id must be 1..4, got {self.class_id}")


@dataclass(frozen=True)
class Fragment:
    """A detached piece injected into the prediction (and optionally the
    ground truth) at an exact minimum distance from its class MCR."""

    class_id: int
    voxels: int
    gap: int
    in_gt: bool = False

    def __post_init__(self):
        if self.class_id not in FOREGROUND_CLASSES:
            raise ValueError(f"class_id must be 1..4, got {self.class_id}")
        if self.voxels < 1:
            raise ValueError("fragment needs at least one voxel")
        if int(self.gap) != self.gap or self.gap < 2:
            raise UnsatisfiableGapError(
                f"gap must be an integer >= 2 voxels (axis-aligned placement), got {self.gap}"
            )


@dataclass(frozen=True)
class PhantomSpec:
    dims: tuple[int, int, int]
    primitives: tuple[Primitive, ...]
    fragments: tuple[Fragment, ...] = ()
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    perturb_steps: int = 0
    case_id: str = "phantom"
    seed: int = 0  # reserved; volumes are a pure function of the spec

    def to_mapping(self) -> dict:
        return {
            "version": SPEC_VERSION,
            "case_id": self.case_id,
            "dims": list(self.dims),
            "spacing": list(self.spacing),
            "primitives": [
                {
                    "shape": p.shape,
                    "center": list(p.center),
                    "size": list(p.size) if isinstance(p.size, tuple) else p.size,
                    "class_id": p.class_id,
                }
                for p in self.primitives
            ],
            "fragments": [
                {
                    "class_id": f.class_id,
                    "voxels": f.voxels,
                    "gap": f.gap,
                    "in_gt": f.in_gt,
                }
                for f in self.fragments
            ],
            "perturb_steps": self.perturb_steps,
            "seed": self.seed,
        }

    @classmethod
    def from_mapping(cls, m: dict) -> "PhantomSpec":
        return cls(
            dims=tuple(int(v) for v in m["dims"]),
            primitives=tuple(
                Primitive(
                    p["shape"],
                    tuple(int(v) for v in p["center"]),
                    tuple(int(v) for v in p["size"]) if isinstance(p["size"], list) else int(p["size"]),
                    int(p["class_id"]),
                )
                for p in m["primitives"]
            ),
            fragments=tuple(
                Fragment(int(f["class_id"]), int(f["voxels"]), int(f["gap"]), bool(f.get("in_gt", False)))
                for f in m.get("fragments", ())
            ),
            spacing=tuple(float(v) for v in m.get("spacing", (1.0, 1.0, 1.0))),
            perturb_steps=int(m.get("perturb_steps", 0)),
            case_id=m.get("case_id", "phantom"),
            seed=int(m.get("seed", 0)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_mapping(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "PhantomSpec":
        return cls.from_mapping(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass(frozen=True)
class FragmentTruth:
    class_id: int
    voxels: int
    min_distance: float


@dataclass
class TruthSheet:
    """The oracle of record for one phantom pair."""

    case_id: str
    fragments: list[FragmentTruth] = field(default_factory=list)
    metrics: dict[str, dict] = field(default_factory=dict)

    def to_mapping(self) -> dict:
        return {
            "version": TRUTH_VERSION,
            "case_id": self.case_id,
            "fragments": [
                {"class_id": f.class_id, "voxels": f.voxels, "min_distance": f.min_distance}
                for f in self.fragments
            ],
            "metrics": self.metrics,
        }

    @classmethod
    def from_mapping(cls, m: dict) -> "TruthSheet":
        return cls(
            m["case_id"],
            [
                FragmentTruth(int(f["class_id"]), int(f["voxels"]), float(f["min_distance"]))
                for f in m["fragments"]
            ],
            m["metrics"],
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_mapping(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TruthSheet":
        return cls.from_mapping(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# brute-force helpers (independent of the library kernels)


def _brute_components(mask: np.ndarray) -> list[np.ndarray]:
    """26-connected components as coordinate arrays, ordered by first voxel
    in x-fastest scan order."""
    nx, ny, nz = mask.shape
    flat = mask.ravel(order="F")
    remaining = set(np.flatnonzero(flat).tolist())
    comps = []
    scan = sorted(remaining)
    for start in scan:
        if start not in remaining:
            continue
        stack = [start]
        remaining.discard(start)
        voxels = []
        while stack:
            pos = stack.pop()
            voxels.append(pos)
            i = pos % nx
            j = (pos // nx) % ny
            k = pos // (nx * ny)
            for di in (-1, 0, 1):
                ii = i + di
                if not 0 <= ii < nx:
                    continue
                for dj in (-1, 0, 1):
                    jj = j + dj
                    if not 0 <= jj < ny:
                        continue
                    for dk in (-1, 0, 1):
                        kk = k + dk
                        if not 0 <= kk < nz:
                            continue
                        npos = ii + nx * (jj + ny * kk)
                        if npos in remaining:
                            remaining.discard(npos)
                            stack.append(npos)
        voxels.sort()
        coords = np.empty((len(voxels), 3), dtype=np.int64)
        arr = np.asarray(voxels)
        coords[:, 0] = arr % nx
        coords[:, 1] = (arr // nx) % ny
        coords[:, 2] = arr // (nx * ny)
        comps.append(coords)
    return comps


def _min_sq_distance(a: np.ndarray, b: np.ndarray) -> int:
    best = None
    for start in range(0, len(a), 1024):
        chunk = a[start : start + 1024]
        d = chunk[:, None, :] - b[None, :, :]
        sq = (d * d).sum(axis=2)
        m = int(sq.min())
        best = m if best is None else min(best, m)
    return best


def _max_min_sq_distance(a: np.ndarray, b: np.ndarray) -> int:
    worst = 0
    for start in range(0, len(a), 1024):
        chunk = a[start : start + 1024]
        d = chunk[:, None, :] - b[None, :, :]
        sq = (d * d).sum(axis=2)
        worst = max(worst, int(sq.min(axis=1).max()))
    return worst


def _brute_boundary(mask: np.ndarray) -> np.ndarray:
    padded = np.pad(mask, 1, constant_values=False)
    inner = (
        padded[2:, 1:-1, 1:-1]
        & padded[:-2, 1:-1, 1:-1]
        & padded[1:-1, 2:, 1:-1]
        & padded[1:-1, :-2, 1:-1]
        & padded[1:-1, 1:-1, 2:]
        & padded[1:-1, 1:-1, :-2]
    )
    return mask & ~inner


def _brute_dice(p: np.ndarray, g: np.ndarray) -> float:
    np_count = int(p.sum())
    ng = int(g.sum())
    if np_count + ng == 0:
        return 1.0
    return 2.0 * int((p & g).sum()) / (np_count + ng)


def _brute_hd(p: np.ndarray, g: np.ndarray) -> float | None:
    if not p.any() or not g.any():
        return None
    bp = np.argwhere(_brute_boundary(p))
    bg = np.argwhere(_brute_boundary(g))
    return math.sqrt(max(_max_min_sq_distance(bp, bg), _max_min_sq_distance(bg, bp)))


# ---------------------------------------------------------------------------
# volume assembly


def _paint_primitive(grid: np.ndarray, prim: Primitive) -> None:
    nx, ny, nz = grid.shape
    ci, cj, ck = prim.center
    if prim.shape == "ball":
        r = int(prim.size)
        if r < 0:
            raise SpecOutOfBoundsError(f"negative ball radius {r}")
        lo = (ci - r, cj - r, ck - r)
        hi = (ci + r, cj + r, ck + r)
        if any(l < 0 for l in lo) or hi[0] >= nx or hi[1] >= ny or hi[2] >= nz:
            raise SpecOutOfBoundsError(f"ball at {prim.center} radius {r} leaves the grid")
        ii, jj, kk = np.ogrid[lo[0] : hi[0] + 1, lo[1] : hi[1] + 1, lo[2] : hi[2] + 1]
        region = (ii - ci) ** 2 + (jj - cj) ** 2 + (kk - ck) ** 2 <= r * r
        window = grid[lo[0] : hi[0] + 1, lo[1] : hi[1] + 1, lo[2] : hi[2] + 1]
    else:
        extents = prim.size if isinstance(prim.size, tuple) else (prim.size,) * 3
        starts = tuple(c - (e - 1) // 2 for c, e in zip(prim.center, extents))
        stops = tuple(s + e for s, e in zip(starts, extents))
        if any(s < 0 for s in starts) or stops[0] > nx or stops[1] > ny or stops[2] > nz:
            raise SpecOutOfBoundsError(f"box at {prim.center} extents {extents} leaves the grid")
        region = np.ones(extents, dtype=bool)
        window = grid[starts[0] : stops[0], starts[1] : stops[1], starts[2] : stops[2]]
    if (window[region] != 0).any():
        raise SpecOutOfBoundsError(f"primitive at {prim.center} overlaps an existing structure")
    window[region] = prim.class_id


def _dilate6(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:] |= mask[:-1]
    out[:-1] |= mask[1:]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    out[:, :, 1:] |= mask[:, :, :-1]
    out[:, :, :-1] |= mask[:, :, 1:]
    return out


def _erode6(mask: np.ndarray) -> np.ndarray:
    return ~_brute_boundary(mask) & mask


def _perturb(pred: np.ndarray, steps: int) -> None:
    for c in FOREGROUND_CLASSES:
        mask = pred == c
        if not mask.any():
            continue
        changed = mask
        for _ in range(abs(steps)):
            if steps > 0:
                grown = _dilate6(changed)
                changed = changed | (grown & (pred == 0))
            else:
                changed = _erode6(changed)
        pred[mask] = 0
        pred[changed] = c


def _box_extents(voxels: int) -> tuple[int, int, int]:
    """Most compact (a >= b >= c) factorization, smallest extent along x."""
    best = (voxels, 1, 1)
    for c in range(1, int(round(voxels ** (1 / 3))) + 2):
        if voxels % c:
            continue
        rest = voxels // c
        for b in range(c, int(math.isqrt(rest)) + 1):
            if rest % b:
                continue
            a = rest // b
            if a >= b and a < best[0]:
                best = (a, b, c)
    a, b, c = best
    return (c, a, b)


def generate(spec: PhantomSpec) -> tuple[LabelVolume, LabelVolume, TruthSheet]:
    """Build the ground-truth/prediction pair and its truth sheet.

    Fragment gaps are realized exactly (verified by brute force against the
    prediction's class MCR); violations raise ``UnsatisfiableGapError``.
    """
    nx, ny, nz = spec.dims
    gt = np.zeros(spec.dims, dtype=np.uint8, order="F")
    for prim in spec.primitives:
        _paint_primitive(gt, prim)
    pred = gt.copy(order="F")
    if spec.perturb_steps:
        _perturb(pred, spec.perturb_steps)

    truth = TruthSheet(spec.case_id)
    fragment_coords: list[tuple[Fragment, np.ndarray]] = []
    by_class: dict[int, list[Fragment]] = {}
    for frag in spec.fragments:
        by_class.setdefault(frag.class_id, []).append(frag)

    for class_id, frags in sorted(by_class.items()):
        comps = _brute_components(pred == class_id)
        if not comps:
            raise UnsatisfiableGapError(f"class {class_id} has no structure to anchor fragments")
        sizes = [len(c) for c in comps]
        mcr = comps[sizes.index(max(sizes))]
        imax = int(mcr[:, 0].max())
        at_pole = mcr[mcr[:, 0] == imax]
        j0, k0 = min((int(v[1]), int(v[2])) for v in at_pole)
        prev_end = imax
        for frag in sorted(frags, key=lambda f: f.gap):
            if frag.voxels >= max(sizes):
                raise UnsatisfiableGapError(
                    f"fragment of {frag.voxels} voxels would dominate the class-{class_id} MCR"
                )
            ex, ey, ez = _box_extents(frag.voxels)
            start_i = imax + frag.gap
            if start_i < prev_end + 2:
                raise UnsatisfiableGapError(
                    f"class {class_id}: gap {frag.gap} collides with an earlier fragment"
                )
            if start_i + ex > nx or j0 + ey > ny or k0 + ez > nz:
                raise UnsatisfiableGapError(
                    f"class {class_id}: fragment at gap {frag.gap} leaves the {spec.dims} grid"
                )
            window = (
                slice(start_i, start_i + ex),
                slice(j0, j0 + ey),
                slice(k0, k0 + ez),
            )
            if (pred[window] != 0).any() or (frag.in_gt and (gt[window] != 0).any()):
                raise UnsatisfiableGapError(
                    f"class {class_id}: fragment at gap {frag.gap} overlaps existing voxels"
                )
            pred[window] = class_id
            if frag.in_gt:
                gt[window] = class_id
            ii, jj, kk = np.meshgrid(
                np.arange(start_i, start_i + ex),
                np.arange(j0, j0 + ey),
                np.arange(k0, k0 + ez),
                indexing="ij",
            )
            coords = np.stack([ii.ravel(), jj.ravel(), kk.ravel()], axis=1)
            fragment_coords.append((frag, coords))
            prev_end = start_i + ex - 1

    # verify the realized gaps against the final prediction
    mcr_by_class = {}
    for class_id in sorted(by_class):
        comps = _brute_components(pred == class_id)
        sizes = [len(c) for c in comps]
        mcr_by_class[class_id] = comps[sizes.index(max(sizes))]
    for frag, coords in fragment_coords:
        realized_sq = _min_sq_distance(coords, mcr_by_class[frag.class_id])
        if realized_sq != frag.gap * frag.gap:
            raise UnsatisfiableGapError(
                f"class {frag.class_id}: realized gap {math.sqrt(realized_sq):.3f} "
                f"!= requested {frag.gap}"
            )
        truth.fragments.append(FragmentTruth(frag.class_id, len(coords), float(frag.gap)))

    truth.metrics = _truth_metrics(pred, gt)
    gt_vol = LabelVolume(gt, spec.spacing, spec.case_id)
    pred_vol = LabelVolume(pred, spec.spacing, spec.case_id)
    return gt_vol, pred_vol, truth


def _truth_metrics(pred: np.ndarray, gt: np.ndarray) -> dict[str, dict]:
    metrics: dict[str, dict] = {}
    class_pairs = []
    for c in FOREGROUND_CLASSES:
        d = _brute_dice(pred == c, gt == c)
        h = _brute_hd(pred == c, gt == c)
        metrics[CLASS_NAMES[c]] = {"dice": d, "hd": h}
        class_pairs.append((d, h))
    metrics["whole"] = {
        "dice": _brute_dice(pred != 0, gt != 0),
        "hd": _brute_hd(pred != 0, gt != 0),
    }
    avg_dice = sum(d for d, _ in class_pairs) / len(class_pairs)
    hds = [h for _, h in class_pairs]
    avg_hd = sum(hds) / len(hds) if all(h is not None for h in hds) else None
    metrics["average"] = {"dice": avg_dice, "hd": avg_hd}
    return {key: metrics[key] for key in _SCOPES}
