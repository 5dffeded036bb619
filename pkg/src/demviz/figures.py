"""Matplotlib renderings of the three report tables."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_best_per_vt_class(rows: list[dict], path: str) -> None:
    """Grouped bars: best IoU for every (vt, class) pair."""
    vts = sorted({r["vt"] for r in rows})
    classes = sorted({r["class"] for r in rows})
    lookup = {(r["vt"], r["class"]): r["best_iou"] for r in rows}
    x = np.arange(len(vts))
    width = 0.8 / max(len(classes), 1)
    fig, ax = plt.subplots(figsize=(max(6, 1.4 * len(vts)), 4))
    for ci, cls in enumerate(classes):
        vals = [lookup.get((vt, cls), np.nan) for vt in vts]
        ax.bar(x + (ci - (len(classes) - 1) / 2) * width, vals, width,
               label=f"class {cls}")
    ax.set_xticks(x, vts, rotation=30, ha="right")
    ax.set_ylabel("best validation IoU")
    ax.set_ylim(0, 1.05)
    ax.legend(fontsize=8)
    ax.set_title("Best model IoU per visualisation and class")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_variability(rows: list[dict], group_field: str, path: str) -> None:
    """Min-median-max whiskers of pooled IoU for each group."""
    pooled = [r for r in rows if str(r["class"]) == "all"]
    groups = [str(r[group_field]) for r in pooled]
    mins = [r["min_iou"] for r in pooled]
    meds = [r["median_iou"] for r in pooled]
    maxs = [r["max_iou"] for r in pooled]
    x = np.arange(len(groups))
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(groups)), 4))
    ax.vlines(x, mins, maxs, color="tab:gray", lw=2)
    ax.scatter(x, meds, color="tab:blue", zorder=3, label="median")
    ax.scatter(x, mins, color="tab:red", marker="_", s=200)
    ax.scatter(x, maxs, color="tab:green", marker="_", s=200)
    ax.set_xticks(x, groups, rotation=30, ha="right")
    ax.set_ylabel("validation IoU")
    ax.set_ylim(0, 1.05)
    ax.set_title(f"IoU spread by {group_field}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
