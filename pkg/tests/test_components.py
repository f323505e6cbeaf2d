"""Connected-component labeling against a flood-fill oracle."""

import numpy as np
import pytest

from pelviseg import BinaryMask, Connectivity, label_components, largest_component
from pelviseg.errors import EmptyMaskError

from oracles import flood_components, random_mask

ALL_CONNECTIVITIES = [Connectivity.FACE6, Connectivity.EDGE18, Connectivity.VERTEX26]


def mask_of(arr):
    return BinaryMask(np.asarray(arr, dtype=bool), (1.0, 1.0, 1.0))


def test_face_sharing_voxels_single_component():
    arr = np.zeros((3, 3, 3), dtype=bool)
    arr[0, 0, 0] = arr[1, 0, 0] = True
    for conn in (Connectivity.FACE6, Connectivity.VERTEX26):
        cs = label_components(mask_of(arr), conn)
        assert cs.count == 1
        assert cs.sizes == {1: 2}


def test_corner_sharing_voxels_split_under_face6():
    arr = np.zeros((3, 3, 3), dtype=bool)
    arr[0, 0, 0] = arr[1, 1, 1] = True
    assert label_components(mask_of(arr), Connectivity.FACE6).count == 2
    assert label_components(mask_of(arr), Connectivity.EDGE18).count == 2
    assert label_components(mask_of(arr), Connectivity.VERTEX26).count == 1


def test_edge_sharing_voxels_split_under_face6_only():
    arr = np.zeros((3, 3, 3), dtype=bool)
    arr[0, 0, 0] = arr[1, 1, 0] = True
    assert label_components(mask_of(arr), Connectivity.FACE6).count == 2
    assert label_components(mask_of(arr), Connectivity.EDGE18).count == 1


def test_empty_mask_gives_zero_components():
    cs = label_components(mask_of(np.zeros((2, 2, 2))))
    assert cs.count == 0
    assert cs.sizes == {}
    assert not cs.label_grid.any()


@pytest.mark.parametrize("conn", ALL_CONNECTIVITIES)
@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_partition_matches_flood_fill(conn, seed):
    rng = np.random.default_rng(seed)
    arr = random_mask(rng, (16, 16, 16), 0.3)
    cs = label_components(mask_of(arr), conn)
    expected = flood_components(arr, int(conn))
    assert np.array_equal(cs.label_grid, expected)
    assert cs.count == int(expected.max())


@pytest.mark.parametrize("seed", range(6))
def test_connectivity_monotonicity(seed):
    rng = np.random.default_rng(100 + seed)
    arr = random_mask(rng, (10, 10, 10), rng.uniform(0.1, 0.5))
    mask = mask_of(arr)
    counts = {conn: label_components(mask, conn).count for conn in ALL_CONNECTIVITIES}
    assert counts[Connectivity.VERTEX26] <= counts[Connectivity.EDGE18]
    assert counts[Connectivity.EDGE18] <= counts[Connectivity.FACE6]


def test_partition_properties():
    rng = np.random.default_rng(42)
    arr = random_mask(rng, (12, 12, 12), 0.35)
    cs = label_components(mask_of(arr))
    assert np.array_equal(cs.label_grid > 0, arr)
    assert sum(cs.sizes.values()) == int(arr.sum())
    assert sorted(cs.sizes) == list(range(1, cs.count + 1))


def test_determinism():
    rng = np.random.default_rng(7)
    arr = random_mask(rng, (14, 14, 14), 0.25)
    first = label_components(mask_of(arr))
    second = label_components(mask_of(arr))
    assert np.array_equal(first.label_grid, second.label_grid)


class TestLargestComponent:
    def test_single_component_unchanged(self):
        arr = np.zeros((5, 5, 5), dtype=bool)
        arr[1:4, 1:4, 1:4] = True
        cs = label_components(mask_of(arr))
        assert np.array_equal(largest_component(cs).data, arr)

    def test_picks_biggest(self):
        arr = np.zeros((20, 5, 5), dtype=bool)
        arr[0:10, 0:4, 0:4] = True      # 160 voxels
        arr[15:17, 0:2, 0:1] = True     # 4 voxels
        cs = label_components(mask_of(arr))
        assert cs.count == 2
        out = largest_component(cs)
        assert out.count() == 160
        assert not out.data[15:17].any()

    def test_tie_breaks_to_smallest_id(self):
        arr = np.zeros((7, 3, 3), dtype=bool)
        arr[0:2, 0, 0] = True   # first in scan order -> id 1
        arr[4:6, 0, 0] = True   # same size -> id 2
        cs = label_components(mask_of(arr))
        assert cs.sizes == {1: 2, 2: 2}
        out = largest_component(cs)
        assert out.data[0, 0, 0] and not out.data[4, 0, 0]

    def test_matches_floodfill_argmax(self):
        rng = np.random.default_rng(3)
        arr = random_mask(rng, (12, 12, 12), 0.2)
        cs = label_components(mask_of(arr))
        expected_labels = flood_components(arr, 26)
        sizes = np.bincount(expected_labels.ravel())[1:]
        best = int(np.argmax(sizes)) + 1  # argmax returns first maximum
        assert np.array_equal(largest_component(cs).data, expected_labels == best)

    def test_empty_raises(self):
        cs = label_components(mask_of(np.zeros((2, 2, 2))))
        with pytest.raises(EmptyMaskError):
            largest_component(cs)
