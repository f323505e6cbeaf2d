"""Deterministic table and grid emission for evaluation results.

Tables carry one row per filter mode or model with ``dice/hd`` cells in the
fixed column order Whole, Sacrum, Left hip, Right hip, Lumbar spine,
Average; Dice is printed with 3 decimals, HD with 2, and undefined HDs
render as an em dash with a per-row excluded count.  Grids are model-by-
dataset value matrices with optional clipping: clipped cells keep the
original value as an annotation, missing cells are marked ``x``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

from .errors import EmptyInputError, RaggedMatrixError
from .metrics import SCOPE_KEYS, AggregateSummary, MetricsRecord

COLUMN_LABELS = ("Whole", "Sacrum", "Left hip", "Right hip", "Lumbar spine", "Average")
UNDEFINED_MARK = "—"  # em dash
MISSING_MARK = "x"

TABLE_FORMATS = ("csv", "markdown")


def format_cell(dice: float, hd: float | None) -> str:
    if hd is None:
        return f"{dice:.3f}/{UNDEFINED_MARK}"
    return f"{dice:.3f}/{hd:.2f}"


@dataclass(frozen=True)
class ReportTable:
    row_labels: tuple[str, ...]
    cells: tuple[tuple[str, ...], ...]
    undefined_counts: tuple[int, ...]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["Filter", *COLUMN_LABELS, "hd_undefined"])
        for label, row, undef in zip(self.row_labels, self.cells, self.undefined_counts):
            writer.writerow([label, *row, undef])
        return buf.getvalue()

    def to_markdown(self) -> str:
        lines = [
            "| Filter | " + " | ".join(COLUMN_LABELS) + " |",
            "| --- " * (len(COLUMN_LABELS) + 1) + "|",
        ]
        for label, row in zip(self.row_labels, self.cells):
            lines.append("| " + " | ".join([label, *row]) + " |")
        total_undef = sum(self.undefined_counts)
        if total_undef:
            lines.append("")
            lines.append(f"{UNDEFINED_MARK} = HD undefined ({total_undef} value(s) excluded)")
        return "\n".join(lines) + "\n"


def build_table(rows: Sequence[tuple[str, AggregateSummary]]) -> ReportTable:
    if not rows:
        raise EmptyInputError("no summaries to tabulate")
    labels = []
    cells = []
    undef = []
    for label, summary in rows:
        labels.append(label)
        cells.append(
            tuple(
                format_cell(summary.fields[key].dice_mean, summary.fields[key].hd_mean)
                for key in SCOPE_KEYS
            )
        )
        undef.append(sum(summary.fields[key].hd_undefined for key in SCOPE_KEYS))
    return ReportTable(tuple(labels), tuple(cells), tuple(undef))


def emit_table(rows: Sequence[tuple[str, AggregateSummary]], fmt: str = "csv") -> str:
    """Render aggregate summaries as CSV or a GitHub pipe table."""
    if fmt not in TABLE_FORMATS:
        raise ValueError(f"format must be one of {TABLE_FORMATS}, got {fmt!r}")
    table = build_table(rows)
    return table.to_csv() if fmt == "csv" else table.to_markdown()


def _grid_cell(value: float | None, lo: float | None, hi: float | None, decimals: int) -> str:
    if value is None:
        return MISSING_MARK
    if lo is not None and value < lo:
        return f"{lo:.{decimals}f} ({value:.{decimals}f})"
    if hi is not None and value > hi:
        return f"{hi:.{decimals}f} ({value:.{decimals}f})"
    return f"{value:.{decimals}f}"


def emit_grid(
    row_labels: Sequence[str],
    col_labels: Sequence[str],
    values: Sequence[Sequence[float | None]],
    lo: float | None = None,
    hi: float | None = None,
    decimals: int = 2,
) -> str:
    """Render a model-by-dataset value grid as annotated CSV.

    Values below ``lo`` or above ``hi`` are clipped to the bound with the
    original value kept in parentheses; ``None`` cells are marked missing.
    """
    if len(values) != len(row_labels):
        raise RaggedMatrixError(f"{len(values)} value rows for {len(row_labels)} row labels")
    for r, row in enumerate(values):
        if len(row) != len(col_labels):
            raise RaggedMatrixError(
                f"row {row_labels[r]!r} has {len(row)} cells, expected {len(col_labels)}"
            )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["Model", *col_labels])
    for label, row in zip(row_labels, values):
        writer.writerow([label, *(_grid_cell(v, lo, hi, decimals) for v in row)])
    return buf.getvalue()


RECORD_COLUMNS = ["case_id"]
for _key in SCOPE_KEYS:
    RECORD_COLUMNS += [f"dice_{_key}", f"hd_{_key}"]


def emit_records_csv(records: Sequence[MetricsRecord]) -> str:
    """One CSV row per case; undefined HD cells are left empty."""
    if not records:
        raise EmptyInputError("no records to emit")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for record in records:
        row: list = [record.case_id]
        for key in SCOPE_KEYS:
            pm = record.scope(key)
            row.append(f"{pm.dice!r}")
            row.append("" if pm.hd is None else f"{pm.hd!r}")
        writer.writerow(row)
    return buf.getvalue()


def parse_records_csv(text: str) -> list[dict]:
    """Parse an ``emit_records_csv`` document back into scope mappings."""
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for row in reader:
        m: dict = {"case_id": row["case_id"]}
        for key in SCOPE_KEYS:
            hd = row[f"hd_{key}"]
            m[key] = {
                "dice": float(row[f"dice_{key}"]),
                "hd": None if hd == "" else float(hd),
            }
        out.append(m)
    return out


def summary_from_mappings(mappings: Sequence[dict]) -> AggregateSummary:
    """Aggregate parsed record mappings (mirrors :func:`metrics.aggregate`)."""
    from .metrics import FieldStats

    if not mappings:
        raise EmptyInputError("no records to aggregate")
    fields = {}
    for key in SCOPE_KEYS:
        dices = [m[key]["dice"] for m in mappings]
        hds = [m[key]["hd"] for m in mappings]
        defined = [h for h in hds if h is not None]
        fields[key] = FieldStats(
            sum(dices) / len(dices),
            sum(defined) / len(defined) if defined else None,
            len(hds) - len(defined),
        )
    return AggregateSummary(len(mappings), fields)
