"""Command-line pipeline: synth, viz, tile, folds, stats, eval, report.

Exit codes: 0 on success, 1 on a runtime failure, 2 on bad usage.  Every
command is deterministic given its flags, inputs, and seed, independent
of the --threads setting.
"""

from __future__ import annotations

import functools
import os
import sys

import click
import numpy as np

from . import figures, report
from .dataset import DatasetManifest, ManifestEntry, ClassCatalog, assign_folds, \
    class_stats, tile_grid
from .grid import DemGrid, RasterError
from .metrics import ConfusionCounts, EvalConfig, accumulate, iou, precision_recall
from .params import VtName, VtParams
from .raster_io import read_mask, read_raster, write_mask, write_raster, write_sidecar
from .synth import make_synthetic_terrain
from .vt import compute_vt

VT_CHOICES = [v.value for v in VtName]


def fail_on_error(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except RasterError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
    return wrapper


@click.group()
@click.option("--quiet", is_flag=True, default=False, help="Suppress progress output.")
@click.pass_context
def main(ctx, quiet):
    """LiDAR DEM visualisation and segmentation-evaluation toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["quiet"] = quiet


def _say(ctx, msg):
    if not ctx.obj.get("quiet"):
        click.echo(msg)


@main.command()
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--size", default=512, show_default=True)
@click.option("--gsd", default=0.5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.pass_context
@fail_on_error
def synth(ctx, out_dir, size, gsd, seed):
    """Generate a synthetic DEM + mask with implanted earthworks."""
    os.makedirs(out_dir, exist_ok=True)
    dem, mask = make_synthetic_terrain(size=size, gsd=gsd, seed=seed)
    dem_path = os.path.join(out_dir, "dem.asc")
    mask_path = os.path.join(out_dir, "mask.png")
    write_raster(dem, dem_path)
    write_mask(mask, mask_path)
    _say(ctx, f"wrote {dem_path} and {mask_path}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--vt", "vt_name", required=True, type=click.Choice(VT_CHOICES))
@click.option("--output", required=True, type=click.Path())
@click.option("--params", "params_path", type=click.Path(exists=True))
@click.option("--threads", default=1, show_default=True)
@click.pass_context
@fail_on_error
def viz(ctx, input_path, vt_name, output, params_path, threads):
    """Compute one visualisation technique for a DEM raster."""
    params = VtParams.from_json_file(params_path) if params_path else VtParams()
    grid = read_raster(input_path)
    if grid.gsd_defaulted:
        click.echo("warning: input carries no pixel scale, using gsd=1.0", err=True)
    image = compute_vt(VtName(vt_name), grid, params, threads=threads)
    write_raster(image, output, gsd=grid.gsd)
    write_sidecar(output, {"vt": vt_name, "params": params.to_dict(),
                           "source": os.path.basename(input_path)})
    _say(ctx, f"wrote {output}")


@main.command()
@click.option("--dem", "dem_path", required=True, type=click.Path(exists=True))
@click.option("--mask", "mask_path", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--tile-size", default=256, show_default=True)
@click.option("--dataset-name", default="dataset", show_default=True)
@click.option("--classes", default="1=mound,2=ditch", show_default=True,
              help="Catalog as 'id=name,id=name'.")
@click.pass_context
@fail_on_error
def tile(ctx, dem_path, mask_path, out_dir, tile_size, dataset_name, classes):
    """Tile a DEM/mask pair and write the dataset manifest."""
    catalog = _parse_catalog(classes)
    dem = read_raster(dem_path)
    mask = read_mask(mask_path)
    tiles = tile_grid(dem, mask, tile_size)
    tiles_dir = os.path.join(out_dir, "tiles")
    os.makedirs(tiles_dir, exist_ok=True)
    entries = []
    for t in tiles:
        dem_rel = os.path.join("tiles", f"{t.tile_id}_dem.tif")
        mask_rel = os.path.join("tiles", f"{t.tile_id}_mask.png")
        write_raster(t.dem, os.path.join(out_dir, dem_rel))
        write_mask(t.mask, os.path.join(out_dir, mask_rel))
        entries.append(ManifestEntry(
            tile_id=t.tile_id, dem_path=dem_rel, mask_path=mask_rel,
            classes_present=sorted(t.classes_present)))
    manifest = DatasetManifest(dataset_name=dataset_name, gsd=dem.gsd,
                               tile_size=tile_size, catalog=catalog,
                               entries=entries)
    manifest_path = os.path.join(out_dir, "manifest.json")
    manifest.save(manifest_path)
    _say(ctx, f"wrote {len(tiles)} tiles and {manifest_path}")


def _parse_catalog(spec: str) -> ClassCatalog:
    pairs = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            cid, name = part.split("=", 1)
            pairs.append((int(cid), name.strip()))
        except ValueError:
            raise RasterError(f"bad --classes entry {part!r}, expected id=name")
    return ClassCatalog(sorted(pairs))


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--k", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--output", type=click.Path(), help="Defaults to rewriting the manifest.")
@click.pass_context
@fail_on_error
def folds(ctx, manifest_path, k, seed, output):
    """Assign deterministic stratified cross-validation folds."""
    manifest = DatasetManifest.load(manifest_path)
    assign_folds(manifest, k=k, seed=seed)
    out = output or manifest_path
    manifest.save(out)
    _say(ctx, f"assigned {k} folds (seed {seed}) -> {out}")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.pass_context
@fail_on_error
def stats(ctx, manifest_path):
    """Print per-class tile and pixel counts."""
    manifest = DatasetManifest.load(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    click.echo("class,name,tile_count,pixel_count")
    for row in class_stats(manifest, base):
        click.echo(f"{row['class']},{row['name']},{row['tile_count']},{row['pixel_count']}")


@main.command(name="eval")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--pred-dir", required=True, type=click.Path(exists=True))
@click.option("--output", required=True, type=click.Path())
@click.option("--model-id", default=1, show_default=True)
@click.option("--vt", "vt_name", required=True, type=click.Choice(VT_CHOICES))
@click.option("--run-id", default="run0", show_default=True)
@click.option("--threshold", default=0.5, show_default=True)
@click.option("--strict", is_flag=True, default=False,
              help="Fail instead of skipping missing prediction files.")
@click.pass_context
@fail_on_error
def eval_cmd(ctx, manifest_path, pred_dir, output, model_id, vt_name, run_id,
             threshold, strict):
    """Score prediction rasters (<tile_id>_<class>.tif) against the masks."""
    manifest = DatasetManifest.load(manifest_path)
    if manifest.k < 2:
        raise RasterError("manifest has no fold assignment; run `demviz folds` first")
    base = os.path.dirname(os.path.abspath(manifest_path))
    cfg = EvalConfig(threshold=threshold)
    counts: dict[tuple[int, int], ConfusionCounts] = {}
    missing = []
    for entry in sorted(manifest.entries, key=lambda e: e.tile_id):
        gt_mask = read_mask(os.path.join(base, entry.mask_path))
        for cls in manifest.catalog.ids():
            pred_path = os.path.join(pred_dir, f"{entry.tile_id}_{cls}.tif")
            if not os.path.isfile(pred_path):
                missing.append(pred_path)
                click.echo(f"warning: missing prediction {pred_path}", err=True)
                continue
            pred = read_raster(pred_path).values
            key = (entry.fold, cls)
            counts[key] = accumulate(pred, gt_mask == cls, cfg, counts.get(key))
    if missing and strict:
        raise RasterError(f"{len(missing)} prediction files missing (--strict)")
    if not counts:
        raise RasterError("no predictions evaluated")
    rows = []
    for (fold, cls) in sorted(counts):
        c = counts[(fold, cls)]
        p, r = precision_recall(c)
        rows.append({"run_id": run_id, "model_id": model_id, "vt": vt_name,
                     "fold": fold, "class": cls, "tp": c.tp, "fp": c.fp,
                     "fn": c.fn, "tn": c.tn, "iou": iou(c),
                     "precision": p, "recall": r})
    report.write_metrics_csv(output, rows)
    _say(ctx, f"wrote {len(rows)} metric rows -> {output}")


@main.command(name="report")
@click.option("--metrics", "metrics_paths", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--figures/--no-figures", "render_figures", default=True,
              show_default=True)
@click.option("--best-per-vt", is_flag=True, default=False,
              help="Pick one best model per vt instead of per (vt, class).")
@click.pass_context
@fail_on_error
def report_cmd(ctx, metrics_paths, out_dir, render_figures, best_per_vt):
    """Aggregate metric CSVs into the three ranking tables (and figures)."""
    os.makedirs(out_dir, exist_ok=True)
    records = []
    for path in metrics_paths:
        records.extend(report.read_metrics_csv(path))
    means = report.fold_mean(records)
    best = report.best_per_vt_class(means, per_vt_only=best_per_vt)
    var_vt = report.variability(means, "vt")
    var_model = report.variability(means, "model")
    report.write_table_csv(os.path.join(out_dir, "best_per_vt_class.csv"), best)
    report.write_table_csv(os.path.join(out_dir, "variability_by_vt.csv"), var_vt)
    report.write_table_csv(os.path.join(out_dir, "variability_by_model.csv"), var_model)
    _write_summary(os.path.join(out_dir, "summary.txt"), means)
    if render_figures:
        figures.plot_best_per_vt_class(best, os.path.join(out_dir, "best_per_vt_class.png"))
        figures.plot_variability(var_vt, "vt", os.path.join(out_dir, "variability_by_vt.png"))
        figures.plot_variability(var_model, "model",
                                 os.path.join(out_dir, "variability_by_model.png"))
    _say(ctx, f"wrote report tables to {out_dir}")


def _write_summary(path: str, means) -> None:
    incomplete = [m for m in means if not m.complete]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("classes ranked by best fold-averaged IoU\n")
        fh.write("(micro-accumulated counts; vacuous denominators score 1.0)\n\n")
        for cls, best_iou, vt, model_id in report.rank_classes_by_best(means):
            fh.write(f"class {cls}: IoU {best_iou:.4f} ({vt}, model {model_id})\n")
        if incomplete:
            fh.write(f"\nwarning: {len(incomplete)} group(s) averaged over a "
                     f"partial fold set\n")
            for m in incomplete:
                fh.write(f"  model {m.model_id} {m.vt} class {m.cls}: "
                         f"{m.n_folds} fold(s)\n")


if __name__ == "__main__":
    main()
