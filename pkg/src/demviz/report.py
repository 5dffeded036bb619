"""Aggregation of per-fold evaluation records into ranking tables.

Three views, mirroring how the runs are usually compared:

* best model per (visualisation, class),
* IoU spread across the eight model configurations for each visualisation,
* IoU spread across the seven visualisations for each model.

All floats are emitted with repr so the CSVs round-trip exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from statistics import median

from .grid import RasterError

METRIC_FIELDS = ["run_id", "model_id", "vt", "fold", "class",
                 "tp", "fp", "fn", "tn", "iou", "precision", "recall"]


@dataclass
class EvalRecord:
    model_id: int
    vt: str
    fold: int
    cls: int
    iou: float
    precision: float
    recall: float

    def __post_init__(self):
        if not (1 <= self.model_id <= 8):
            raise RasterError(f"model_id must be in [1, 8], got {self.model_id}")
        for name in ("iou", "precision", "recall"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise RasterError(f"{name}={v} outside [0, 1]")


@dataclass
class MeanRecord:
    """Fold-averaged metrics for one (model, vt, class) group."""

    model_id: int
    vt: str
    cls: int
    iou: float
    precision: float
    recall: float
    n_folds: int
    complete: bool


def fold_mean(records: list[EvalRecord]) -> list[MeanRecord]:
    """Average metrics over folds within each (model, vt, class) group.

    Groups missing some of the folds seen elsewhere are averaged over the
    folds they have and flagged incomplete.
    """
    if not records:
        raise RasterError("no evaluation records")
    all_folds = {r.fold for r in records}
    groups: dict[tuple[int, str, int], list[EvalRecord]] = {}
    for r in records:
        groups.setdefault((r.model_id, r.vt, r.cls), []).append(r)
    out = []
    for (model_id, vt, cls) in sorted(groups):
        rs = groups[(model_id, vt, cls)]
        n = len(rs)
        out.append(MeanRecord(
            model_id=model_id, vt=vt, cls=cls,
            iou=sum(r.iou for r in rs) / n,
            precision=sum(r.precision for r in rs) / n,
            recall=sum(r.recall for r in rs) / n,
            n_folds=n,
            complete={r.fold for r in rs} == all_folds,
        ))
    return out


def best_per_vt_class(means: list[MeanRecord], per_vt_only: bool = False) -> list[dict]:
    """Best model and IoU per (vt, class); ties go to the lower model_id.

    With per_vt_only, a single winner per vt is chosen by class-averaged
    IoU and its per-class scores are reported instead.
    """
    if not means:
        raise RasterError("no records to rank")
    rows = []
    if per_vt_only:
        by_vt: dict[str, dict[int, list[MeanRecord]]] = {}
        for m in means:
            by_vt.setdefault(m.vt, {}).setdefault(m.model_id, []).append(m)
        for vt in sorted(by_vt):
            scores = {mid: sum(r.iou for r in rs) / len(rs)
                      for mid, rs in by_vt[vt].items()}
            winner = max(sorted(scores), key=lambda mid: scores[mid])
            for m in sorted(by_vt[vt][winner], key=lambda m: m.cls):
                rows.append({"vt": vt, "class": m.cls,
                             "best_iou": m.iou, "best_model_id": winner})
        return rows
    groups: dict[tuple[str, int], list[MeanRecord]] = {}
    for m in means:
        groups.setdefault((m.vt, m.cls), []).append(m)
    for (vt, cls) in sorted(groups):
        best = max(groups[(vt, cls)], key=lambda m: (m.iou, -m.model_id))
        rows.append({"vt": vt, "class": cls,
                     "best_iou": best.iou, "best_model_id": best.model_id})
    return rows


def variability(means: list[MeanRecord], group_by: str) -> list[dict]:
    """IoU min/median/max/range per group, per class plus pooled ("all").

    group_by "vt" spreads over models; group_by "model" spreads over vts.
    """
    if group_by not in ("vt", "model"):
        raise RasterError(f"group_by must be 'vt' or 'model', got {group_by!r}")
    if not means:
        raise RasterError("no records to summarise")
    key = (lambda m: m.vt) if group_by == "vt" else (lambda m: m.model_id)
    groups: dict[object, list[MeanRecord]] = {}
    for m in means:
        groups.setdefault(key(m), []).append(m)
    rows = []
    for g in sorted(groups, key=str):
        per_class: dict[object, list[float]] = {}
        for m in groups[g]:
            per_class.setdefault(m.cls, []).append(m.iou)
        per_class["all"] = [m.iou for m in groups[g]]
        for cls in sorted(per_class, key=str):
            ious = per_class[cls]
            rows.append({
                group_by: g, "class": cls,
                "min_iou": min(ious), "median_iou": median(ious),
                "max_iou": max(ious), "range_iou": max(ious) - min(ious),
                "n": len(ious),
            })
    return rows


def rank_classes_by_best(means: list[MeanRecord]) -> list[tuple[int, float, str, int]]:
    """Classes ordered by their best achievable IoU (class, iou, vt, model)."""
    best: dict[int, tuple[float, str, int]] = {}
    for m in means:
        cur = best.get(m.cls)
        if cur is None or m.iou > cur[0]:
            best[m.cls] = (m.iou, m.vt, m.model_id)
    return sorted(((c, v[0], v[1], v[2]) for c, v in best.items()),
                  key=lambda t: -t[1])


# ---------------------------------------------------------------------------
# CSV I/O
# ---------------------------------------------------------------------------

def write_metrics_csv(path: str, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=METRIC_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row[k]) for k in METRIC_FIELDS})


def read_metrics_csv(path: str) -> list[EvalRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(EvalRecord(
                model_id=int(row["model_id"]), vt=row["vt"],
                fold=int(row["fold"]), cls=int(row["class"]),
                iou=float(row["iou"]), precision=float(row["precision"]),
                recall=float(row["recall"]),
            ))
    if not records:
        raise RasterError(f"no metric rows in {path}")
    return records


def write_table_csv(path: str, rows: list[dict]) -> None:
    if not rows:
        raise RasterError("refusing to write an empty table")
    fields = list(rows[0].keys())
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def read_table_csv(path: str) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return [dict(row) for row in csv.DictReader(fh)]


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)
