"""Confusion-count accumulation and class-wise segmentation metrics.

Counts accumulate at dataset level (micro): per-tile counts merge by
plain addition, so empty tiles cannot dilute a class's IoU.  Vacuous
denominators return 1.0 by convention — an absent, never-predicted class
must not poison aggregates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import RasterError

TVERSKY_EPSILON = 1e-7


@dataclass
class EvalConfig:
    threshold: float = 0.5
    tversky_alpha: float = 0.7
    tversky_beta: float = 0.3

    def __post_init__(self):
        if not (0.0 < self.threshold < 1.0):
            raise RasterError("threshold must be in (0, 1)")
        if self.tversky_alpha < 0 or self.tversky_beta < 0 \
                or self.tversky_alpha + self.tversky_beta <= 0:
            raise RasterError("tversky weights must be >= 0 with positive sum")


@dataclass
class ConfusionCounts:
    """Pixel confusion counts for one class."""

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def merge(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp,
                               self.fn + other.fn, self.tn + other.tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def accumulate(pred: np.ndarray, gt: np.ndarray, cfg: EvalConfig,
               into: ConfusionCounts | None = None) -> ConfusionCounts:
    """Threshold a probability/binary raster and add its counts.

    Pixels with pred >= threshold count as positive (ties are positive,
    pinned so implementations agree bit-for-bit).
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt).astype(bool)
    if pred.shape != gt.shape:
        raise RasterError(f"shape mismatch: pred {pred.shape} vs gt {gt.shape}")
    if pred.size and (pred.min() < 0.0 or pred.max() > 1.0):
        raise RasterError("prediction values must lie in [0, 1]")
    pos = pred >= cfg.threshold
    tp = int(np.count_nonzero(pos & gt))
    fp = int(np.count_nonzero(pos & ~gt))
    fn = int(np.count_nonzero(~pos & gt))
    tn = int(np.count_nonzero(~pos & ~gt))
    add = ConfusionCounts(tp, fp, fn, tn)
    return into.merge(add) if into is not None else add


def iou(counts: ConfusionCounts) -> float:
    denom = counts.tp + counts.fp + counts.fn
    return counts.tp / denom if denom else 1.0


def precision_recall(counts: ConfusionCounts) -> tuple[float, float]:
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 1.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 1.0
    return precision, recall


def tversky_loss(pred_probs: np.ndarray, gt: np.ndarray, cfg: EvalConfig) -> float:
    """Soft Tversky loss: 1 - (TP+eps) / (TP + alpha*FN + beta*FP + eps).

    With alpha = beta = 0.5 this reduces to 1 - Dice.
    """
    p = np.asarray(pred_probs, dtype=np.float64)
    g = np.asarray(gt, dtype=np.float64)
    if p.shape != g.shape:
        raise RasterError(f"shape mismatch: pred {p.shape} vs gt {g.shape}")
    tp = float(np.sum(p * g))
    fn = float(np.sum((1.0 - p) * g))
    fp = float(np.sum(p * (1.0 - g)))
    eps = TVERSKY_EPSILON
    return 1.0 - (tp + eps) / (tp + cfg.tversky_alpha * fn + cfg.tversky_beta * fp + eps)
