"""Figures for benchmark summaries (runtime and interval width against model length)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

MARKERS = {"exact": "o", "approx": "s"}


def _series(rows: Sequence[dict], topology: str, method: str, column: str):
    pts = sorted(
        (int(r["length"]), float(r[column]))
        for r in rows
        if r["topology"] == topology and r["method"] == method and not math.isnan(float(r[column]))
    )
    return [p[0] for p in pts], [p[1] for p in pts]


def _figure(rows, column: str, ylabel: str, path, log: bool = False) -> Path:
    topologies = list(dict.fromkeys(r["topology"] for r in rows))
    methods = list(dict.fromkeys(r["method"] for r in rows))
    fig, axes = plt.subplots(1, len(topologies), figsize=(4.2 * len(topologies), 3.4), squeeze=False)
    for ax, topo in zip(axes[0], topologies):
        for m in methods:
            x, y = _series(rows, topo, m, column)
            if x:
                ax.plot(x, y, marker=MARKERS.get(m, "^"), label=m)
        ax.set_title(topo.replace("_", " "))
        ax.set_xlabel("length l")
        ax.set_ylabel(ylabel)
        if log:
            ax.set_yscale("log")
        ax.grid(alpha=0.3)
        ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_runtime(rows: Sequence[dict], path) -> Path:
    return _figure(rows, "mean_runtime", "mean runtime [s]", path, log=True)


def plot_width(rows: Sequence[dict], path) -> Path:
    return _figure(rows, "mean_width", "mean interval width", path)


def render_summary(rows: Sequence[dict], directory) -> list[Path]:
    """Write ``runtime.png`` and ``width.png`` next to the CSV files."""
    directory = Path(directory)
    return [plot_runtime(rows, directory / "runtime.png"), plot_width(rows, directory / "width.png")]
