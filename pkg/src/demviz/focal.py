"""Focal (moving-window) statistics and percentile contrast stretching.

Windows truncate at raster edges: a statistic is taken over whatever
member cells fall inside the raster, never over padded values.  Nodata
cells are skipped as neighbours and stay nodata in the output.

The heavy lifting is FFT convolution of the value / value-squared /
validity planes against the window kernel, which keeps large radii
(up to ~100 px for the broad topographic-position scales) tractable.
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve

from .grid import DemGrid, FocalWindow, MultiBandImage, RasterError


def _focal_sums(values: np.ndarray, valid: np.ndarray, kernel: np.ndarray,
                want_sq: bool) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Per-cell (count, sum, sum-of-squares) over the window, f64."""
    k = kernel.astype(np.float64)
    v = np.where(valid, values.astype(np.float64), 0.0)
    cnt = np.rint(fftconvolve(valid.astype(np.float64), k, mode="same"))
    s1 = fftconvolve(v, k, mode="same")
    s2 = fftconvolve(v * v, k, mode="same") if want_sq else None
    return cnt, s1, s2


def _check_radius(grid: DemGrid, window: FocalWindow) -> None:
    if window.radius >= min(grid.width, grid.height):
        raise RasterError(
            f"window radius {window.radius} too large for "
            f"{grid.width}x{grid.height} raster"
        )


def focal_mean(grid: DemGrid, window: FocalWindow) -> DemGrid:
    """Mean of non-nodata neighbours within the window, centre included."""
    _check_radius(grid, window)
    valid = grid.valid_mask()
    # shift values toward zero so the variance-style cancellation in
    # focal_std stays benign for large absolute elevations
    offset = float(np.mean(grid.values[valid])) if valid.any() else 0.0
    cnt, s1, _ = _focal_sums(grid.values - np.float32(offset), valid, window.kernel(), False)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = s1 / cnt + offset
    out = np.where(valid, mean, grid.nodata if grid.nodata is not None else 0.0)
    return grid.like(out)


def focal_std(grid: DemGrid, window: FocalWindow) -> DemGrid:
    """Population standard deviation over the window; constant windows give 0."""
    _check_radius(grid, window)
    valid = grid.valid_mask()
    offset = float(np.mean(grid.values[valid])) if valid.any() else 0.0
    cnt, s1, s2 = _focal_sums(grid.values - np.float32(offset), valid, window.kernel(), True)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = s1 / cnt
        var = s2 / cnt - mean * mean
    std = np.sqrt(np.maximum(var, 0.0))
    out = np.where(valid, std, grid.nodata if grid.nodata is not None else 0.0)
    return grid.like(out)


def focal_mean_std(grid: DemGrid, window: FocalWindow) -> tuple[np.ndarray, np.ndarray]:
    """Mean and std as float64 arrays in one pass (nodata cells hold NaN)."""
    _check_radius(grid, window)
    valid = grid.valid_mask()
    offset = float(np.mean(grid.values[valid])) if valid.any() else 0.0
    cnt, s1, s2 = _focal_sums(grid.values - np.float32(offset), valid, window.kernel(), True)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = s1 / cnt + offset
        var = s2 / cnt - (s1 / cnt) ** 2
    std = np.sqrt(np.maximum(var, 0.0))
    mean[~valid] = np.nan
    std[~valid] = np.nan
    return mean, std


def percentile_cut_stretch(grid: DemGrid, low_pct: float = 1.0,
                           high_pct: float = 99.0) -> MultiBandImage:
    """Linear stretch between the low/high percentiles of the valid values.

    Quantiles use linear interpolation between closest order statistics
    (numpy's default, "type 7").  Values outside [lo, hi] saturate at 0/1;
    a constant input maps every valid cell to neutral 0.5.
    """
    if not (0.0 <= low_pct < high_pct <= 100.0):
        raise RasterError(f"bad percentile cuts ({low_pct}, {high_pct})")
    valid = grid.valid_mask()
    vals = grid.values[valid].astype(np.float64)
    if vals.size == 0:
        raise RasterError("cannot stretch an all-nodata grid")
    lo, hi = np.percentile(vals, [low_pct, high_pct])
    if hi == lo:
        out = np.full(grid.values.shape, 0.5, dtype=np.float32)
    else:
        out = np.clip(
            (grid.values.astype(np.float64) - lo) / (hi - lo), 0.0, 1.0
        ).astype(np.float32)
    out[~valid] = 0.0
    mask = None if grid.nodata is None else ~valid
    return MultiBandImage(bands=[out], nodata_mask=mask)
