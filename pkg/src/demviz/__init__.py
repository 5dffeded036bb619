"""LiDAR DEM visualisation techniques, tiled segmentation datasets, and
class-wise evaluation reports."""

from .grid import DemGrid, FocalWindow, MultiBandImage, RasterError
from .focal import focal_mean, focal_std, percentile_cut_stretch
from .params import VtName, VtParams
from .terrain import (
    horizon_angles,
    mstp,
    e2mstp,
    positive_openness,
    sky_view_factor,
    slope,
    slrm,
)
from .vt import compute_vt
from .dataset import (
    AugmentationSpec,
    ClassCatalog,
    DatasetManifest,
    ManifestEntry,
    SplitMix64,
    TilePair,
    assign_folds,
    augment,
    class_stats,
    fnv1a64,
    tile_grid,
)
from .metrics import (
    ConfusionCounts,
    EvalConfig,
    accumulate,
    iou,
    precision_recall,
    tversky_loss,
)
from .raster_io import read_image, read_mask, read_raster, write_mask, write_raster
from .synth import make_synthetic_terrain

__version__ = "0.1.0"
