"""Learning-curve figures rendered straight to files.

Aggregates per-step network MSD by pipeline (median across duplicate
entries, e.g. seed batches) and draws one log-scale curve per pipeline.
Uses the Agg canvas directly so no display or global pyplot state is
needed.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure


def learning_curves(rows: Iterable) -> dict:
    """pipeline -> (steps array, median-MSD array), steps ascending."""
    by_pipeline: dict = {}
    for row in rows:
        by_pipeline.setdefault(row.pipeline, {}).setdefault(row.t, []).append(row.msd)
    curves = {}
    for pipeline, per_t in sorted(by_pipeline.items()):
        ts = np.array(sorted(per_t))
        msd = np.array([float(np.median(per_t[t])) for t in ts])
        curves[pipeline] = (ts, msd)
    return curves


def render_learning_curve(rows: Iterable, out_path, title: str | None = None) -> None:
    """Render MSD-vs-step curves for every pipeline in rows to an image file."""
    curves = learning_curves(rows)
    fig = Figure(figsize=(7.0, 4.5))
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    for pipeline, (ts, msd) in curves.items():
        ax.semilogy(ts, msd, label=pipeline)
    ax.set_xlabel("step")
    ax.set_ylabel("network MSD")
    if title:
        ax.set_title(title)
    if curves:
        ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.savefig(out_path, bbox_inches="tight", dpi=120)
