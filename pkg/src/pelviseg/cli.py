"""Batch command-line frontend for post-processing, evaluation and dataset tooling.

Subcommands: ``postprocess`` (filter prediction volumes), ``evaluate``
(prediction vs ground-truth metrics and summary tables), ``split``,
``manifest``, ``phantom`` and ``report``.  Per-case failures never abort a
batch unless ``--strict``; they are collected into a machine-readable error
report and flip the exit code to 1.  Usage problems exit with 2.

Every flag default can be overridden by an environment variable with the
``PELVISEG_`` prefix (e.g. ``PELVISEG_JOBS=8``).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import dataset as ds
from . import phantom as ph
from .components import Connectivity
from .errors import PelvisegError
from .metrics import aggregate, evaluate_case
from .nifti import read_label_nifti, write_label_nifti
from .postproc import FilterConfig, FilterMode, apply_filter
from .report import (
    TABLE_FORMATS,
    emit_grid,
    emit_records_csv,
    emit_table,
    parse_records_csv,
    summary_from_mappings,
)

ENV_PREFIX = "PELVISEG_"
ERROR_REPORT_VERSION = 1


def _env(name: str, fallback, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return fallback
    if cast is bool:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return cast(raw)


def _nifti_files(path: Path) -> list[Path]:
    out = []
    for p in sorted(path.iterdir()):
        if p.is_file() and (p.name.endswith(".nii") or p.name.endswith(".nii.gz")):
            out.append(p)
    return out


def _stem(path: Path) -> str:
    name = path.name
    for suffix in (".nii.gz", ".nii"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def _load_relabel(path: str | None) -> dict[int, int] | None:
    if path is None:
        return None
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return {int(k): int(v) for k, v in raw.items()}


def _write_error_report(path, errors: list[dict]) -> None:
    records = [{k: v for k, v in e.items() if k != "ok"} for e in errors]
    payload = {"version": ERROR_REPORT_VERSION, "errors": records}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _run_tasks(fn, tasks, jobs: int, strict: bool):
    """Map fn over tasks, preserving order; stop at the first error if strict."""
    results = []
    if jobs <= 1:
        for task in tasks:
            result = fn(task)
            results.append(result)
            if strict and not result.get("ok"):
                break
        return results
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        for result in ex.map(fn, tasks):
            results.append(result)
            if strict and not result.get("ok"):
                break
    return results


# ---------------------------------------------------------------------------
# postprocess


def _postprocess_one(task: dict) -> dict:
    try:
        relabel = task["relabel"]
        vol = read_label_nifti(task["in_path"], relabel=relabel)
        cfg = FilterConfig(
            FilterMode(task["mode"]),
            task["threshold"],
            Connectivity(task["connectivity"]),
            task["per_class"],
        )
        out = apply_filter(vol, cfg)
        write_label_nifti(out, task["out_path"], gzip_compress=task["gzip"])
        return {"ok": True, "case_id": vol.case_id}
    except Exception as exc:  # noqa: BLE001 - reported per case
        return {
            "ok": False,
            "case_id": _stem(Path(task["in_path"])),
            "path": str(task["in_path"]),
            "error": type(exc).__name__,
            "message": str(exc),
        }


def _cmd_postprocess(args) -> int:
    inputs: list[Path] = []
    for raw in args.inputs:
        p = Path(raw)
        if p.is_dir():
            inputs.extend(_nifti_files(p))
        else:
            inputs.append(p)
    inputs.sort(key=_stem)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    relabel = _load_relabel(args.relabel)
    tasks = [
        {
            "in_path": str(p),
            "out_path": str(out_dir / p.name),
            "mode": args.mode,
            "threshold": args.t,
            "connectivity": args.connectivity,
            "per_class": not args.pooled,
            "relabel": relabel,
            "gzip": p.name.endswith(".gz"),
        }
        for p in inputs
    ]
    results = _run_tasks(_postprocess_one, tasks, args.jobs, args.strict)
    errors = [r for r in results if not r["ok"]]
    for r in results:
        status = "ok" if r["ok"] else f"FAILED ({r['error']})"
        print(f"{r['case_id']}: {status}")
    if errors:
        report_path = args.error_report or out_dir / "errors.json"
        _write_error_report(report_path, errors)
        print(f"{len(errors)} case(s) failed; error report: {report_path}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# evaluate


def _evaluate_one(task: dict) -> dict:
    try:
        pred = read_label_nifti(task["pred_path"], relabel=task["relabel"])
        gt = read_label_nifti(task["gt_path"])
        record = evaluate_case(pred, gt, units=task["units"])
        return {"ok": True, "case_id": task["case_id"], "record": record}
    except Exception as exc:  # noqa: BLE001 - reported per case
        return {
            "ok": False,
            "case_id": task["case_id"],
            "path": str(task["pred_path"]),
            "error": type(exc).__name__,
            "message": str(exc),
        }


def _cmd_evaluate(args) -> int:
    pred_dir = Path(args.pred)
    gt_dir = Path(args.gt)
    pred_by_stem = {_stem(p): p for p in _nifti_files(pred_dir)}
    gt_by_stem = {_stem(p): p for p in _nifti_files(gt_dir)}
    relabel = _load_relabel(args.relabel)

    errors = [
        {"ok": False, "case_id": stem, "error": "MissingCounterpart",
         "message": f"no ground truth for {stem}", "path": str(pred_by_stem[stem])}
        for stem in sorted(set(pred_by_stem) - set(gt_by_stem))
    ] + [
        {"ok": False, "case_id": stem, "error": "MissingCounterpart",
         "message": f"no prediction for {stem}", "path": str(gt_by_stem[stem])}
        for stem in sorted(set(gt_by_stem) - set(pred_by_stem))
    ]

    tasks = [
        {
            "case_id": stem,
            "pred_path": str(pred_by_stem[stem]),
            "gt_path": str(gt_by_stem[stem]),
            "units": args.units,
            "relabel": relabel,
        }
        for stem in sorted(set(pred_by_stem) & set(gt_by_stem))
    ]
    if args.strict and errors:
        tasks = []
    results = _run_tasks(_evaluate_one, tasks, args.jobs, args.strict)
    errors.extend(r for r in results if not r["ok"])
    records = [r["record"] for r in results if r["ok"]]

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if records:
        records_csv = emit_records_csv(records)
        (out_dir / "records.csv").write_text(records_csv, encoding="utf-8")
        summary = aggregate(records)
        label = args.label or pred_dir.name
        ext = "csv" if args.format == "csv" else "md"
        table = emit_table([(label, summary)], fmt=args.format)
        (out_dir / f"summary.{ext}").write_text(table, encoding="utf-8")
        print(table, end="")
    if errors:
        report_path = args.error_report or out_dir / "errors.json"
        _write_error_report(report_path, errors)
        print(f"{len(errors)} case(s) failed; error report: {report_path}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# split / manifest / phantom / report


def _cmd_split(args) -> int:
    manifest = ds.Manifest.load(args.manifest)
    if args.dataset:
        wanted = set(args.dataset)
        unknown = wanted - set(manifest.sub_datasets)
        if unknown:
            raise PelvisegError(f"sub-dataset(s) {sorted(unknown)} not in manifest")
        manifest = ds.Manifest(
            {k: v for k, v in manifest.sub_datasets.items() if k in wanted},
            manifest.notes,
        )
    rule = ds.SplitRule.TABLE1_OVERRIDE if args.override_table1 else ds.SplitRule(args.rule)
    result = ds.split(manifest, args.seed, rule)
    result.save(args.out)
    for name, lists in sorted(result.assignments.items()):
        tr, va, te = lists.counts()
        print(f"{name}: {tr}/{va}/{te}")
    return 0


def _cmd_manifest(args) -> int:
    manifest, errors = ds.build_manifest(args.root)
    manifest.notes = args.notes
    manifest.save(args.out)
    if manifest.n_cases() == 0:
        print("warning: no readable cases found", file=sys.stderr)
    for name, entries in sorted(manifest.sub_datasets.items()):
        print(f"{name}: {len(entries)} case(s)")
    if errors:
        report_path = args.error_report or Path(args.out).with_suffix(".errors.json")
        _write_error_report(report_path, errors)
        print(f"{len(errors)} file(s) skipped; error report: {report_path}", file=sys.stderr)
        return 1
    return 0


def _cmd_phantom(args) -> int:
    spec = ph.PhantomSpec.load(args.spec)
    gt, pred, truth = ph.generate(spec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = ".nii.gz" if args.gzip else ".nii"
    write_label_nifti(gt, out_dir / f"{spec.case_id}_gt{ext}", gzip_compress=args.gzip)
    write_label_nifti(pred, out_dir / f"{spec.case_id}_pred{ext}", gzip_compress=args.gzip)
    truth.save(out_dir / f"{spec.case_id}_truth.json")
    print(f"{spec.case_id}: dims={gt.dims} fragments={len(truth.fragments)}")
    return 0


def _cmd_report(args) -> int:
    if args.records:
        rows = []
        for item in args.records:
            if "=" not in item:
                raise PelvisegError(f"--records expects NAME=PATH, got {item!r}")
            name, path = item.split("=", 1)
            mappings = parse_records_csv(Path(path).read_text(encoding="utf-8"))
            rows.append((name, summary_from_mappings(mappings)))
        text = emit_table(rows, fmt=args.format)
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
            if args.figures:
                from .figures import render_summary_bars

                render_summary_bars(rows, Path(args.out).with_suffix(".png"))
        else:
            print(text, end="")
        return 0

    grid = json.loads(Path(args.grid).read_text(encoding="utf-8"))
    row_labels = grid["rows"]
    col_labels = grid["cols"]
    values = grid["values"]
    text = emit_grid(row_labels, col_labels, values,
                     lo=args.clip_lo, hi=args.clip_hi, decimals=args.decimals)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        if args.figures:
            from .figures import render_grid_heatmap

            render_grid_heatmap(row_labels, col_labels, values, Path(args.out).with_suffix(".png"),
                                lo=args.clip_lo, hi=args.clip_hi, decimals=args.decimals)
    else:
        print(text, end="")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(parser, *, jobs=True, strict=True, error_report=True):
    if jobs:
        parser.add_argument("--jobs", type=int, default=_env("JOBS", 1, int),
                            help="parallel worker count (default 1)")
    if strict:
        parser.add_argument("--strict", action="store_true",
                            default=_env("STRICT", False, bool),
                            help="abort the batch on the first per-case error")
    if error_report:
        parser.add_argument("--error-report", default=None,
                            help="path for the per-case error report (JSON)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pelviseg",
        description="Post-processing and evaluation toolkit for pelvic bone CT label volumes.",
        epilog=f"Flag defaults can be overridden via {ENV_PREFIX}<FLAG> environment variables "
               f"(e.g. {ENV_PREFIX}JOBS, {ENV_PREFIX}MODE, {ENV_PREFIX}T).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("postprocess", help="filter prediction volumes")
    p.add_argument("inputs", nargs="+", metavar="PATH",
                   help="prediction NIfTI file(s) and/or directories")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mode", choices=[m.value for m in FilterMode],
                   default=_env("MODE", FilterMode.SDF.value))
    p.add_argument("--t", type=float, default=_env("T", 35.0, float),
                   help="SDF distance threshold in voxels (default 35)")
    p.add_argument("--connectivity", type=int, choices=[6, 18, 26],
                   default=_env("CONNECTIVITY", 26, int))
    p.add_argument("--pooled", action="store_true",
                   help="filter pooled foreground instead of per class")
    p.add_argument("--relabel", default=None,
                   help="JSON file mapping raw input labels to the canonical coding")
    _add_common(p)
    p.set_defaults(func=_cmd_postprocess)

    p = sub.add_parser("evaluate", help="score predictions against ground truth")
    p.add_argument("--pred", required=True, help="directory of prediction volumes")
    p.add_argument("--gt", required=True, help="directory of ground-truth volumes")
    p.add_argument("--out", required=True, help="output directory for records.csv and summary")
    p.add_argument("--units", choices=["voxel", "mm"], default=_env("UNITS", "voxel"))
    p.add_argument("--format", choices=list(TABLE_FORMATS), default=_env("FORMAT", "csv"))
    p.add_argument("--label", default=None, help="row label for the summary table")
    p.add_argument("--relabel", default=None,
                   help="JSON label mapping applied to prediction files")
    _add_common(p)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("split", help="partition a manifest into train/val/test")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=_env("SEED", 0, int))
    p.add_argument("--rule", choices=[r.value for r in ds.SplitRule],
                   default=ds.SplitRule.FRACTIONAL.value)
    p.add_argument("--override-table1", action="store_true",
                   help="force the published per-sub-dataset counts")
    p.add_argument("--dataset", action="append", default=None,
                   help="restrict to the named sub-dataset (repeatable)")
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("manifest", help="index a directory of NIfTI volumes")
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--notes", default="")
    _add_common(p, jobs=False, strict=False)
    p.set_defaults(func=_cmd_manifest)

    p = sub.add_parser("phantom", help="generate a synthetic gt/pred pair with a truth sheet")
    p.add_argument("--spec", required=True, help="phantom spec (JSON)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--gzip", action="store_true", help="write .nii.gz volumes")
    p.set_defaults(func=_cmd_phantom)

    p = sub.add_parser("report", help="emit tables and value grids")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--records", action="append", metavar="NAME=PATH",
                        help="records.csv labelled with a row name (repeatable)")
    source.add_argument("--grid", help="grid JSON with rows/cols/values")
    p.add_argument("--format", choices=list(TABLE_FORMATS), default=_env("FORMAT", "csv"))
    p.add_argument("--clip-lo", type=float, default=None,
                   help="clip grid values below this bound (annotated)")
    p.add_argument("--clip-hi", type=float, default=None,
                   help="clip grid values above this bound (annotated)")
    p.add_argument("--decimals", type=int, default=2)
    p.add_argument("--out", default=None, help="output file (stdout if omitted)")
    p.add_argument("--figures", action="store_true",
                   help="render matplotlib figures next to --out")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "figures", False) and not args.out:
        parser.error("--figures requires --out")
    try:
        return args.func(args)
    except (PelvisegError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
