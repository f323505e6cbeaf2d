"""Exact EDT and signed distance against exhaustive oracles."""

import math

import numpy as np
import pytest

from pelviseg import BinaryMask, edt, edt_squared, signed_distance
from pelviseg.errors import EmptyMaskError, FullMaskError

from oracles import (
    brute_signed_distance,
    brute_sq_edt,
    brute_sq_edt_weighted,
    random_mask,
)


def mask_of(arr, spacing=(1.0, 1.0, 1.0)):
    return BinaryMask(np.asarray(arr, dtype=bool), spacing)


class TestEdt:
    def test_all_true_is_zero(self):
        field = edt(mask_of(np.ones((4, 4, 4))))
        assert not field.values.any()

    def test_single_seed_analytic(self):
        arr = np.zeros((3, 3, 3), dtype=bool)
        arr[1, 1, 1] = True
        values = edt(mask_of(arr)).values
        assert values[1, 1, 1] == 0.0
        assert values[0, 1, 1] == pytest.approx(1.0)
        assert values[0, 0, 1] == pytest.approx(math.sqrt(2))
        assert values[0, 0, 0] == pytest.approx(math.sqrt(3))

    @pytest.mark.parametrize("seed", range(8))
    def test_exact_against_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        dims = tuple(rng.integers(4, 17) for _ in range(3))
        arr = random_mask(rng, dims, rng.uniform(0.02, 0.5))
        if not arr.any():
            arr[tuple(d // 2 for d in dims)] = True
        got = edt_squared(mask_of(arr))
        assert got.dtype == np.int64
        assert np.array_equal(got, brute_sq_edt(arr))

    def test_weighted_matches_brute_force(self):
        rng = np.random.default_rng(77)
        arr = random_mask(rng, (8, 7, 6), 0.15)
        arr[0, 0, 0] = True
        spacing = (0.85, 0.85, 0.8)
        got = edt_squared(mask_of(arr, spacing), weighted=True)
        expected = brute_sq_edt_weighted(arr, spacing)
        assert np.allclose(got, expected, rtol=1e-12, atol=1e-9)

    def test_monotone_under_dilation(self):
        rng = np.random.default_rng(12)
        small = random_mask(rng, (10, 10, 10), 0.1)
        small[5, 5, 5] = True
        grown = small | random_mask(rng, (10, 10, 10), 0.1)
        d_small = edt_squared(mask_of(small))
        d_grown = edt_squared(mask_of(grown))
        assert (d_grown <= d_small).all()

    def test_translation_equivariance_away_from_borders(self):
        arr = np.zeros((16, 16, 16), dtype=bool)
        arr[4:7, 5:8, 6:9] = True
        shifted = np.zeros_like(arr)
        shifted[5:8, 6:9, 7:10] = True
        d0 = edt_squared(mask_of(arr))
        d1 = edt_squared(mask_of(shifted))
        # compare interiors that stay far from every border under the shift
        assert np.array_equal(d0[3:10, 3:10, 3:10], d1[4:11, 4:11, 4:11])

    def test_lipschitz_in_voxel_metric(self):
        rng = np.random.default_rng(21)
        arr = random_mask(rng, (9, 9, 9), 0.08)
        arr[4, 4, 4] = True
        values = edt(mask_of(arr)).values
        for axis in range(3):
            diff = np.abs(np.diff(values, axis=axis))
            assert (diff <= 1.0 + 1e-12).all()

    def test_empty_mask_raises(self):
        with pytest.raises(EmptyMaskError):
            edt(mask_of(np.zeros((3, 3, 3))))

    def test_interpreted_kernel_matches_brute_force(self, monkeypatch):
        from pelviseg import distance as distance_mod

        monkeypatch.setattr(distance_mod, "_envelope_kernel", None)
        rng = np.random.default_rng(55)
        arr = random_mask(rng, (9, 8, 7), 0.2)
        arr[0, 0, 0] = True
        assert np.array_equal(edt_squared(mask_of(arr)), brute_sq_edt(arr))


class TestSignedDistance:
    def test_cube_center_and_outside(self):
        arr = np.zeros((11, 11, 11), dtype=bool)
        arr[3:8, 3:8, 3:8] = True
        values = signed_distance(mask_of(arr)).values
        assert values[5, 5, 5] == pytest.approx(-2.0)
        assert values[10, 5, 5] == pytest.approx(3.0)  # face distance 3 outside
        assert values[3, 5, 5] == 0.0  # interface layer

    def test_single_voxel_has_no_interior(self):
        arr = np.zeros((3, 3, 3), dtype=bool)
        arr[1, 1, 1] = True
        values = signed_distance(mask_of(arr)).values
        assert values[1, 1, 1] == 0.0
        assert (values >= 0).all()

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(200 + seed)
        arr = random_mask(rng, (7, 7, 7), 0.4)
        arr[3, 3, 3] = True
        arr[0, 0, 0] = False
        got = signed_distance(mask_of(arr)).values
        assert np.allclose(got, brute_signed_distance(arr), atol=1e-12)

    @pytest.mark.parametrize("seed", range(3))
    def test_sign_flip_against_complement(self, seed):
        rng = np.random.default_rng(300 + seed)
        arr = random_mask(rng, (6, 6, 6), 0.5)
        arr[2, 2, 2] = True
        arr[5, 5, 5] = False
        f = signed_distance(mask_of(arr)).values
        g = signed_distance(mask_of(~arr)).values
        # strict interiors carry opposite signs; zero levels sit one layer
        # apart so magnitudes agree only up to that convention
        assert ((f < 0) <= (g > 0)).all()
        assert ((g < 0) <= (f > 0)).all()

    def test_zero_exactly_on_interface(self):
        arr = np.zeros((6, 6, 6), dtype=bool)
        arr[1:5, 1:5, 1:5] = True
        values = signed_distance(mask_of(arr)).values
        interface = arr.copy()
        interface[2:4, 2:4, 2:4] = False
        assert (values[interface] == 0.0).all()
        assert (values[arr & ~interface] < 0).all()
        assert (values[~arr] > 0).all()

    def test_empty_and_full_raise(self):
        with pytest.raises(EmptyMaskError):
            signed_distance(mask_of(np.zeros((3, 3, 3))))
        with pytest.raises(FullMaskError):
            signed_distance(mask_of(np.ones((3, 3, 3))))
