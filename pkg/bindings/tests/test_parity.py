"""Binding/CLI parity on a phantom fixture set, plus the binding surface."""

import contextlib
import json
import subprocess
import sys

import numpy as np
import pytest

import pelviseg_bindings as pb
from pelviseg import Fragment, PhantomSpec, Primitive, generate, write_label_nifti
from pelviseg.cli import main as cli_main
from pelviseg.errors import DimMismatchError, LabelOutOfRangeError
from pelviseg.report import parse_records_csv


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"\n[ACCEPTANCE] {name}: FAIL")
        raise
    print(f"\n[ACCEPTANCE] {name}: PASS")


def four_balls():
    return (
        Primitive("ball", (10, 10, 10), 4, 1),
        Primitive("ball", (10, 28, 10), 4, 2),
        Primitive("ball", (10, 10, 28), 4, 3),
        Primitive("ball", (10, 28, 28), 4, 4),
    )


def fixture_specs():
    return [
        PhantomSpec(dims=(40, 40, 40), primitives=four_balls(), case_id="clean"),
        PhantomSpec(
            dims=(96, 44, 44),
            primitives=four_balls(),
            fragments=(
                Fragment(1, 27, 3),
                Fragment(2, 27, 10),
                Fragment(3, 27, 20),
                Fragment(4, 27, 40),
                Fragment(1, 27, 60),
            ),
            case_id="gaps",
        ),
        PhantomSpec(
            dims=(64, 44, 44),
            primitives=four_balls(),
            fragments=(Fragment(1, 27, 10, in_gt=True),),
            case_id="near",
        ),
        PhantomSpec(
            dims=(40, 40, 40), primitives=four_balls(), perturb_steps=1, case_id="perturbed"
        ),
    ]


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    pred_dir = root / "pred"
    gt_dir = root / "gt"
    pred_dir.mkdir()
    gt_dir.mkdir()
    pairs = {}
    for spec in fixture_specs():
        gt, pred, _ = generate(spec)
        write_label_nifti(pred, pred_dir / f"{spec.case_id}.nii.gz", gzip_compress=True)
        write_label_nifti(gt, gt_dir / f"{spec.case_id}.nii.gz", gzip_compress=True)
        pairs[spec.case_id] = (pred, gt)
    return {"root": root, "pred_dir": pred_dir, "gt_dir": gt_dir, "pairs": pairs}


def test_binding_parity_with_cli(corpus, tmp_path):
    with criterion("Binding parity (postprocess and evaluate equal CLI outputs)"):
        # postprocess parity, byte for byte, across all three modes
        for mode, t in (("none", 35.0), ("mcr", 35.0), ("sdf", 35.0), ("sdf", 5.0)):
            cli_out = tmp_path / f"cli_{mode}_{int(t)}"
            rc = cli_main([
                "postprocess", str(corpus["pred_dir"]), "--out", str(cli_out),
                "--mode", mode, "--t", str(t),
            ])
            assert rc == 0
            for case_id in corpus["pairs"]:
                bound = pb.postprocess(
                    pb.Volume.from_nifti(corpus["pred_dir"] / f"{case_id}.nii.gz"),
                    mode=mode, t=t,
                )
                bound_path = tmp_path / f"bound_{mode}_{int(t)}_{case_id}.nii.gz"
                bound.save(bound_path, gzip_compress=True)
                cli_bytes = (cli_out / f"{case_id}.nii.gz").read_bytes()
                assert bound_path.read_bytes() == cli_bytes, (mode, t, case_id)

        # evaluate parity after canonical JSON serialization
        eval_out = tmp_path / "cli_eval"
        rc = cli_main([
            "evaluate", "--pred", str(corpus["pred_dir"]), "--gt", str(corpus["gt_dir"]),
            "--out", str(eval_out),
        ])
        assert rc == 0
        cli_maps = parse_records_csv((eval_out / "records.csv").read_text())
        bound_maps = []
        for case_id in sorted(corpus["pairs"]):
            pred, gt = corpus["pairs"][case_id]
            bound_maps.append(pb.evaluate(pred, gt))
        canonical = lambda maps: json.dumps(maps, sort_keys=True).encode()
        assert canonical(bound_maps) == canonical(cli_maps)


def test_parity_through_installed_console_script(corpus, tmp_path):
    out_dir = tmp_path / "subproc"
    proc = subprocess.run(
        [sys.executable, "-m", "pelviseg.cli", "postprocess",
         str(corpus["pred_dir"] / "gaps.nii.gz"), "--out", str(out_dir),
         "--mode", "sdf", "--t", "35"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    bound = pb.postprocess(pb.Volume.from_nifti(corpus["pred_dir"] / "gaps.nii.gz"))
    bound_path = tmp_path / "bound.nii.gz"
    bound.save(bound_path, gzip_compress=True)
    assert bound_path.read_bytes() == (out_dir / "gaps.nii.gz").read_bytes()


class TestVolume:
    def test_from_array_round_trip(self):
        arr = np.zeros((4, 4, 4), dtype=np.uint8)
        arr[1:3, 1:3, 1:3] = 2
        vol = pb.Volume.from_array(arr, (0.8, 0.8, 1.0), "v")
        assert vol.dims == (4, 4, 4)
        assert vol.spacing == (0.8, 0.8, 1.0)
        assert np.array_equal(vol.to_array(), arr)

    def test_from_array_copy_leaves_caller_writable(self):
        arr = np.zeros((3, 3, 3), dtype=np.uint8)
        pb.Volume.from_array(arr, (1, 1, 1))
        arr[0, 0, 0] = 1  # still writable

    def test_from_array_zero_copy_adopts(self):
        arr = np.asfortranarray(np.zeros((3, 3, 3), dtype=np.uint8))
        vol = pb.Volume.from_array(arr, (1, 1, 1), copy=False)
        assert vol.to_array() is not arr
        with pytest.raises(ValueError):
            arr[0, 0, 0] = 1  # adopted and frozen

    def test_invalid_label_names_out_of_range(self):
        arr = np.zeros((3, 3, 3), dtype=np.uint8)
        arr[0, 0, 0] = 7
        with pytest.raises(LabelOutOfRangeError):
            pb.Volume.from_array(arr, (1, 1, 1))

    def test_version_mirrors_core(self):
        import pelviseg

        assert pb.__version__ == pelviseg.__version__


class TestOps:
    def test_noop_returns_equal_array(self):
        arr = np.zeros((5, 5, 5), dtype=np.uint8)
        arr[1:4, 1:4, 1:4] = 3
        vol = pb.Volume.from_array(arr, (1, 1, 1))
        out = pb.postprocess(vol, mode="none")
        assert np.array_equal(out.to_array(), arr)

    def test_evaluate_self_is_perfect(self):
        arr = np.zeros((6, 6, 6), dtype=np.uint8)
        arr[1:3, 1:3, 1:3] = 1
        vol = pb.Volume.from_array(arr, (1, 1, 1), "case")
        result = pb.evaluate(vol, vol)
        assert result["sacrum"] == {"dice": 1.0, "hd": 0.0}
        assert result["left_hip"]["hd"] is None  # absent class: undefined, not NaN

    def test_dim_mismatch_raises(self):
        a = pb.Volume.from_array(np.zeros((3, 3, 3), dtype=np.uint8), (1, 1, 1))
        b = pb.Volume.from_array(np.zeros((4, 3, 3), dtype=np.uint8), (1, 1, 1))
        with pytest.raises(DimMismatchError):
            pb.evaluate(a, b)

    def test_rejects_foreign_types(self):
        with pytest.raises(TypeError):
            pb.postprocess(np.zeros((3, 3, 3)))
