"""Connected-component labeling of binary masks.

A single raster pass collects adjacency between foreground voxels under the
chosen connectivity; a union-find with path compression merges them, which
keeps the whole thing close to linear in the voxel count.  Component ids are
assigned in ascending order of each component's first voxel in scan order
(x fastest, then y, then z), so the labeling is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import EmptyMaskError
from .volume import BinaryMask


class Connectivity(IntEnum):
    """Voxel adjacency: shared face, face-or-edge, or face-edge-or-vertex."""

    FACE6 = 6
    EDGE18 = 18
    VERTEX26 = 26


def neighbor_offsets(conn: Connectivity) -> list[tuple[int, int, int]]:
    offs = []
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            for dk in (-1, 0, 1):
                nz = (di != 0) + (dj != 0) + (dk != 0)
                if nz == 0:
                    continue
                if conn is Connectivity.FACE6 and nz > 1:
                    continue
                if conn is Connectivity.EDGE18 and nz > 2:
                    continue
                offs.append((di, dj, dk))
    return offs


def _backward_offsets(conn: Connectivity) -> list[tuple[int, int, int]]:
    # offsets pointing at voxels already visited in x-fastest scan order
    return [
        (di, dj, dk)
        for (di, dj, dk) in neighbor_offsets(conn)
        if (dk, dj, di) < (0, 0, 0)
    ]


@dataclass(frozen=True, eq=False)
class ComponentSet:
    """Partition of a mask's foreground into maximal connected components.

    ``label_grid`` holds one id per voxel (0 = background); ids are dense in
    1..count and ``sizes[cid]`` is the voxel count of component ``cid``.
    """

    label_grid: np.ndarray
    count: int
    sizes: dict[int, int]
    spacing: tuple[float, float, float]
    connectivity: Connectivity

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.label_grid.shape

    def component_mask(self, cid: int) -> BinaryMask:
        if not 1 <= cid <= self.count:
            raise KeyError(f"component id {cid} not in 1..{self.count}")
        return BinaryMask(self.label_grid == cid, self.spacing)


def label_components(
    mask: BinaryMask, conn: Connectivity = Connectivity.VERTEX26
) -> ComponentSet:
    """Label all connected components of ``mask`` under ``conn``."""
    data = mask.data
    nx, ny, nz = data.shape
    flat = data.ravel(order="F")
    fg_positions = np.flatnonzero(flat)
    nfg = fg_positions.size

    grid_flat = np.full(flat.shape, -1, dtype=np.int64)
    grid_flat[fg_positions] = np.arange(nfg)
    fgid = grid_flat.reshape(data.shape, order="F")

    parent = list(range(nfg))
    rank = [0] * nfg

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for di, dj, dk in _backward_offsets(conn):
        sa = (
            slice(max(0, -di), nx - max(0, di)),
            slice(max(0, -dj), ny - max(0, dj)),
            slice(max(0, -dk), nz - max(0, dk)),
        )
        sb = (
            slice(max(0, di), nx - max(0, -di)),
            slice(max(0, dj), ny - max(0, -dj)),
            slice(max(0, dk), nz - max(0, -dk)),
        )
        a = fgid[sa]
        b = fgid[sb]
        both = (a >= 0) & (b >= 0)
        pa = a[both]
        pb = b[both]
        for x, y in zip(pa.tolist(), pb.tolist()):
            rx, ry = find(x), find(y)
            if rx == ry:
                continue
            if rank[rx] < rank[ry]:
                rx, ry = ry, rx
            parent[ry] = rx
            if rank[rx] == rank[ry]:
                rank[rx] += 1

    label_grid = np.zeros(data.shape, dtype=np.int32, order="F")
    if nfg:
        roots = np.fromiter((find(i) for i in range(nfg)), dtype=np.int64, count=nfg)
        unique_roots, first_idx = np.unique(roots, return_index=True)
        order = np.argsort(first_idx, kind="stable")
        canonical = np.empty(unique_roots.size, dtype=np.int32)
        canonical[order] = np.arange(1, unique_roots.size + 1, dtype=np.int32)
        labels_fg = canonical[np.searchsorted(unique_roots, roots)]
        out_flat = label_grid.ravel(order="F")
        out_flat[fg_positions] = labels_fg
        label_grid = out_flat.reshape(data.shape, order="F")
        counts = np.bincount(labels_fg, minlength=unique_roots.size + 1)
        sizes = {cid: int(counts[cid]) for cid in range(1, unique_roots.size + 1)}
        count = int(unique_roots.size)
    else:
        sizes = {}
        count = 0

    label_grid.flags.writeable = False
    return ComponentSet(label_grid, count, sizes, mask.spacing, conn)


def largest_component_id(cs: ComponentSet) -> int:
    """Id of the maximum connected region; ties break to the smallest id."""
    if cs.count == 0:
        raise EmptyMaskError("no components in an empty mask")
    best = max(cs.sizes.values())
    return min(cid for cid, size in cs.sizes.items() if size == best)


def largest_component(cs: ComponentSet) -> BinaryMask:
    """Mask of the maximum connected region (the MCR)."""
    return cs.component_mask(largest_component_id(cs))
