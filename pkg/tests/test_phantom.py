"""Phantom generation and truth-sheet verification."""

import pytest

from pelviseg import Fragment, PhantomSpec, Primitive, TruthSheet, generate
from pelviseg.errors import SpecOutOfBoundsError, UnsatisfiableGapError

from oracles import brute_dice, brute_hausdorff, brute_min_set_distance


def four_ball_spec(**kwargs):
    # all structures share one x plane so every +x fragment corridor is free
    return PhantomSpec(
        dims=(40, 40, 40),
        primitives=(
            Primitive("ball", (10, 10, 10), 4, 1),
            Primitive("ball", (10, 28, 10), 4, 2),
            Primitive("ball", (10, 10, 28), 4, 3),
            Primitive("ball", (10, 28, 28), 4, 4),
        ),
        **kwargs,
    )


class TestGenerate:
    def test_clean_spec_gives_identical_pair(self):
        gt, pred, truth = generate(four_ball_spec())
        assert pred == gt
        for key, pm in truth.metrics.items():
            assert pm["dice"] == 1.0
            assert pm["hd"] == 0.0

    def test_fragment_gap_realized_exactly(self):
        spec = four_ball_spec(fragments=(Fragment(1, 27, 10),))
        gt, pred, truth = generate(spec)
        assert len(truth.fragments) == 1
        frag = truth.fragments[0]
        assert frag.min_distance == 10.0
        assert frag.voxels == 27
        # independent recheck of the realized distance
        fragment_voxels = (pred.data == 1) & (gt.data == 0)
        structure = (pred.data == 1) & (gt.data == 1)
        assert brute_min_set_distance(fragment_voxels, structure) == 10.0

    def test_fragment_absent_from_gt_by_default(self):
        spec = four_ball_spec(fragments=(Fragment(2, 8, 5),))
        gt, pred, truth = generate(spec)
        assert int((pred.data == 2).sum()) - int((gt.data == 2).sum()) == 8

    def test_in_gt_fragment_lands_in_both(self):
        spec = four_ball_spec(fragments=(Fragment(2, 8, 5, in_gt=True),))
        gt, pred, truth = generate(spec)
        assert pred == gt
        assert truth.metrics["left_hip"]["dice"] == 1.0

    def test_dilation_perturbation_truth_matches_brute_force(self):
        spec = PhantomSpec(
            dims=(20, 20, 20),
            primitives=(Primitive("ball", (9, 9, 9), 5, 1),),
            perturb_steps=1,
        )
        gt, pred, truth = generate(spec)
        assert pred != gt
        p = pred.data == 1
        g = gt.data == 1
        assert truth.metrics["sacrum"]["dice"] == pytest.approx(brute_dice(p, g))
        assert truth.metrics["sacrum"]["hd"] == pytest.approx(brute_hausdorff(p, g))
        assert truth.metrics["sacrum"]["hd"] == pytest.approx(1.0)

    def test_erosion_perturbation(self):
        spec = PhantomSpec(
            dims=(20, 20, 20),
            primitives=(Primitive("box", (9, 9, 9), (7, 7, 7), 3),),
            perturb_steps=-1,
        )
        gt, pred, truth = generate(spec)
        assert int((pred.data == 3).sum()) == 5 * 5 * 5
        assert truth.metrics["right_hip"]["hd"] == pytest.approx(brute_hausdorff(pred.data == 3, gt.data == 3))

    def test_multiple_fragments_one_class(self):
        spec = PhantomSpec(
            dims=(80, 24, 24),
            primitives=(Primitive("ball", (10, 11, 11), 5, 4),),
            fragments=(Fragment(4, 8, 5), Fragment(4, 8, 20), Fragment(4, 27, 40)),
        )
        gt, pred, truth = generate(spec)
        gaps = sorted(f.min_distance for f in truth.fragments)
        assert gaps == [5.0, 20.0, 40.0]

    def test_deterministic(self):
        spec = four_ball_spec(fragments=(Fragment(1, 27, 10),))
        a = generate(spec)
        b = generate(spec)
        assert a[0] == b[0]
        assert a[1] == b[1]
        assert a[2].to_mapping() == b[2].to_mapping()


class TestSpecErrors:
    def test_primitive_out_of_bounds(self):
        spec = PhantomSpec(dims=(10, 10, 10), primitives=(Primitive("ball", (9, 5, 5), 3, 1),))
        with pytest.raises(SpecOutOfBoundsError):
            generate(spec)

    def test_overlapping_primitives(self):
        spec = PhantomSpec(
            dims=(20, 20, 20),
            primitives=(
                Primitive("ball", (8, 8, 8), 4, 1),
                Primitive("ball", (10, 8, 8), 4, 2),
            ),
        )
        with pytest.raises(SpecOutOfBoundsError):
            generate(spec)

    def test_gap_below_two_unsatisfiable(self):
        with pytest.raises(UnsatisfiableGapError):
            Fragment(1, 8, 1)

    def test_fragment_leaving_grid_unsatisfiable(self):
        spec = PhantomSpec(
            dims=(20, 20, 20),
            primitives=(Primitive("ball", (9, 9, 9), 4, 1),),
            fragments=(Fragment(1, 8, 15),),
        )
        with pytest.raises(UnsatisfiableGapError):
            generate(spec)

    def test_dominating_fragment_unsatisfiable(self):
        spec = PhantomSpec(
            dims=(40, 20, 20),
            primitives=(Primitive("box", (5, 9, 9), (3, 3, 3), 1),),
            fragments=(Fragment(1, 64, 5),),
        )
        with pytest.raises(UnsatisfiableGapError):
            generate(spec)

    def test_fragment_without_structure_unsatisfiable(self):
        spec = PhantomSpec(
            dims=(20, 20, 20),
            primitives=(Primitive("ball", (9, 9, 9), 4, 1),),
            fragments=(Fragment(2, 8, 5),),
        )
        with pytest.raises(UnsatisfiableGapError):
            generate(spec)

    def test_colliding_fragments_unsatisfiable(self):
        spec = PhantomSpec(
            dims=(60, 20, 20),
            primitives=(Primitive("ball", (9, 9, 9), 5, 1),),
            fragments=(Fragment(1, 27, 5), Fragment(1, 27, 6)),
        )
        with pytest.raises(UnsatisfiableGapError):
            generate(spec)


class TestSerialization:
    def test_spec_round_trip(self, tmp_path):
        spec = four_ball_spec(fragments=(Fragment(1, 27, 10), Fragment(2, 8, 4, in_gt=True)))
        path = tmp_path / "spec.json"
        spec.save(path)
        assert PhantomSpec.load(path) == spec

    def test_truth_round_trip(self, tmp_path):
        _, _, truth = generate(four_ball_spec(fragments=(Fragment(1, 27, 10),)))
        path = tmp_path / "truth.json"
        truth.save(path)
        assert TruthSheet.load(path).to_mapping() == truth.to_mapping()
