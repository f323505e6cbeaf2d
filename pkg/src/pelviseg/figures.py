"""Matplotlib rendering of report tables and grids to image files.

The CLI report path writes these figures next to the delimited output when
asked to.  Rendering is presentation only; every number shown comes from the
same summaries that feed the CSV emitters.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import SCOPE_KEYS, AggregateSummary
from .report import COLUMN_LABELS

_PNG_META = {"Software": None}  # keep written bytes reproducible


def render_grid_heatmap(
    row_labels: Sequence[str],
    col_labels: Sequence[str],
    values: Sequence[Sequence[float | None]],
    path,
    lo: float | None = None,
    hi: float | None = None,
    title: str = "",
    decimals: int = 2,
) -> None:
    """Heat map of a model-by-dataset grid with clipped values annotated.

    Cell colors use the clipped value; out-of-range cells show the original
    number in parentheses and missing cells are crossed out.
    """
    data = np.full((len(row_labels), len(col_labels)), np.nan)
    for r, row in enumerate(values):
        for c, v in enumerate(row):
            if v is not None:
                data[r, c] = min(max(v, lo if lo is not None else v), hi if hi is not None else v)
    fig, ax = plt.subplots(figsize=(1.2 * len(col_labels) + 2, 0.6 * len(row_labels) + 2))
    im = ax.imshow(data, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(col_labels)), col_labels, rotation=30, ha="right")
    ax.set_yticks(range(len(row_labels)), row_labels)
    for r, row in enumerate(values):
        for c, v in enumerate(row):
            if v is None:
                ax.text(c, r, "×", ha="center", va="center", color="red", fontsize=14)
                continue
            clipped = (lo is not None and v < lo) or (hi is not None and v > hi)
            text = f"{v:.{decimals}f}"
            if clipped:
                bound = lo if (lo is not None and v < lo) else hi
                text = f"{bound:.{decimals}f}\n({v:.{decimals}f})"
            ax.text(c, r, text, ha="center", va="center", color="white", fontsize=8)
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    plt.close(fig)


def render_summary_bars(rows: Sequence[tuple[str, AggregateSummary]], path) -> None:
    """Grouped bars of mean Dice and mean HD per table row."""
    labels = [label for label, _ in rows]
    fig, axes = plt.subplots(1, 2, figsize=(12, 4))
    x = np.arange(len(SCOPE_KEYS))
    width = 0.8 / max(len(rows), 1)
    for idx, (label, summary) in enumerate(rows):
        dice = [summary.fields[k].dice_mean for k in SCOPE_KEYS]
        hd = [summary.fields[k].hd_mean for k in SCOPE_KEYS]
        offs = x + (idx - (len(rows) - 1) / 2) * width
        axes[0].bar(offs, dice, width, label=label)
        axes[1].bar(
            offs,
            [0.0 if v is None else v for v in hd],
            width,
            label=label,
        )
    axes[0].set_title("Mean Dice")
    axes[0].set_ylim(0, 1.05)
    axes[1].set_title("Mean HD (voxels)")
    for ax in axes:
        ax.set_xticks(x, COLUMN_LABELS, rotation=30, ha="right")
    axes[0].legend(labels=labels, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata=_PNG_META)
    plt.close(fig)
