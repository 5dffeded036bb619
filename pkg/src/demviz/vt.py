"""Name-dispatched computation of the seven visualisation techniques."""

from __future__ import annotations

import numpy as np

from .focal import percentile_cut_stretch
from .grid import DemGrid, MultiBandImage, RasterError
from .params import VtName, VtParams
from . import terrain

# Fixed display normalisation ranges, independent of tile content.
SLOPE_MAX_DEG = 51.0
OPENNESS_RANGE_DEG = (60.0, 120.0)
SVF_RANGE = (0.64, 1.0)


def _nodata_mask(grid: DemGrid) -> np.ndarray | None:
    return None if grid.nodata is None else ~grid.valid_mask()


def _norm_band(values: np.ndarray, lo: float, hi: float,
               mask: np.ndarray | None) -> np.ndarray:
    band = np.clip((values.astype(np.float64) - lo) / (hi - lo), 0.0, 1.0)
    band = band.astype(np.float32)
    if mask is not None:
        band[mask] = 0.0
    return band


def compute_vt(name: VtName, tile: DemGrid, params: VtParams | None = None,
               threads: int = 1) -> MultiBandImage:
    """Compute one visualisation technique for a DEM tile.

    Band layouts:
      DEM_C      1 band: percentile-stretched elevation
      DEM_S      3 identical DEM_C bands
      SLRM       1 band: percentile-stretched local relief
      DSS        (DEM_C, slope/51 deg, stretched local relief)
      E2MSTP     relief-modulated topographic position composite
      E2MSTP_1B  1 band: mean of the E2MSTP bands
      VAT        (slope/51 deg, openness over 60-120 deg, SVF over 0.64-1)
    """
    params = params or VtParams()
    if not isinstance(name, VtName):
        raise RasterError(f"unknown visualisation {name!r}")
    try:
        return _DISPATCH[name](tile, params, threads)
    except RasterError as exc:
        raise RasterError(f"{name.value}: {exc}") from exc


def _dem_c(tile, params, threads):
    return percentile_cut_stretch(tile, params.cut_low_pct, params.cut_high_pct)


def _dem_s(tile, params, threads):
    base = _dem_c(tile, params, threads)
    b = base.bands[0]
    return MultiBandImage(bands=[b.copy(), b.copy(), b.copy()],
                          nodata_mask=base.nodata_mask)


def _slrm_vt(tile, params, threads):
    return percentile_cut_stretch(terrain.slrm(tile, params),
                                  params.cut_low_pct, params.cut_high_pct)


def _dss(tile, params, threads):
    mask = _nodata_mask(tile)
    demc = _dem_c(tile, params, threads).bands[0]
    slope_band = _norm_band(terrain.slope(tile).values, 0.0, SLOPE_MAX_DEG, mask)
    relief = _slrm_vt(tile, params, threads).bands[0]
    return MultiBandImage(bands=[demc, slope_band, relief], nodata_mask=mask)


def _e2mstp_vt(tile, params, threads):
    return terrain.e2mstp(tile, params)


def _e2mstp_1b(tile, params, threads):
    comp = terrain.e2mstp(tile, params)
    flat = (comp.bands[0].astype(np.float64)
            + comp.bands[1] + comp.bands[2]) / 3.0
    return MultiBandImage(bands=[flat.astype(np.float32)],
                          nodata_mask=comp.nodata_mask)


def _vat(tile, params, threads):
    mask = _nodata_mask(tile)
    slope_band = _norm_band(terrain.slope(tile).values, 0.0, SLOPE_MAX_DEG, mask)
    open_band = _norm_band(terrain.positive_openness(tile, params, threads).values,
                           *OPENNESS_RANGE_DEG, mask=mask)
    svf_band = _norm_band(terrain.sky_view_factor(tile, params, threads).values,
                          *SVF_RANGE, mask=mask)
    return MultiBandImage(bands=[slope_band, open_band, svf_band], nodata_mask=mask)


_DISPATCH = {
    VtName.DEM_C: _dem_c,
    VtName.DEM_S: _dem_s,
    VtName.SLRM: _slrm_vt,
    VtName.DSS: _dss,
    VtName.E2MSTP: _e2mstp_vt,
    VtName.E2MSTP_1B: _e2mstp_1b,
    VtName.VAT: _vat,
}
