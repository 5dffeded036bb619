"""Terrain-analysis primitives behind the visualisation techniques.

Conventions shared by every routine (and by the test oracles):

* Row 0 is north; x grows with column index j, y shrinks with row index i.
* Horizon rays are sampled at 1-pixel steps with nearest-neighbour
  lookup, rounding ties to even (``np.rint``); azimuth 0 points east and
  direction k is rotated counter-clockwise by k * 360/n degrees.
* The distance used for the elevation angle of a sample is the true
  Euclidean distance of its rounded cell, times gsd; samples landing
  beyond the scan radius are dropped.
* Rays truncate at the raster edge; a ray with no in-bounds sample
  contributes a horizon angle of 0.
* Nodata cells are skipped as samples and stay nodata in outputs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .focal import focal_mean, focal_mean_std, percentile_cut_stretch
from .grid import DemGrid, FocalWindow, MultiBandImage, RasterError
from .params import VtParams, scale_radii

DEV_EPSILON = 1e-6  # focal std below this counts as zero variance
DEV_SPAN = 3.0      # deviations mapped to [0,1] across +/- 3 sigma


# ---------------------------------------------------------------------------
# Slope (truncated Horn stencil)
# ---------------------------------------------------------------------------

def slope(grid: DemGrid) -> DemGrid:
    """Slope angle in degrees from the 3x3 Horn gradient.

    Interior cells use the classic Horn weighting; border cells fall back
    to a one-sided difference of the same [1,2,1]-weighted column/row
    means, so a tilted plane yields its exact analytic slope everywhere.
    """
    if grid.width < 3 or grid.height < 3:
        raise RasterError("slope requires a raster of at least 3x3")
    valid = grid.valid_mask()
    z = np.where(valid, grid.values.astype(np.float64), 0.0)
    w = valid.astype(np.float64)

    p = _axis_gradient(z, w, grid.gsd, axis=1)
    q = _axis_gradient(z, w, grid.gsd, axis=0)
    deg = np.degrees(np.arctan(np.hypot(p, q)))
    fill = grid.nodata if grid.nodata is not None else 0.0
    return grid.like(np.where(valid, deg, fill))


def _axis_gradient(z: np.ndarray, w: np.ndarray, gsd: float, axis: int) -> np.ndarray:
    """Horn-style derivative along `axis` with edge/nodata truncation."""
    smooth_axis = 1 - axis
    s = 2.0 * z
    wt = 2.0 * w
    fwd = [slice(None)] * 2
    bwd = [slice(None)] * 2
    fwd[smooth_axis] = slice(1, None)
    bwd[smooth_axis] = slice(None, -1)
    fwd, bwd = tuple(fwd), tuple(bwd)
    s[fwd] += z[bwd]
    wt[fwd] += w[bwd]
    s[bwd] += z[fwd]
    wt[bwd] += w[fwd]
    ok = wt > 0
    mean = np.divide(s, wt, out=np.zeros_like(s), where=ok)

    def shifted(arr, delta):
        out = np.zeros_like(arr)
        src = [slice(None)] * 2
        dst = [slice(None)] * 2
        src[axis] = slice(delta, None) if delta > 0 else slice(None, delta)
        dst[axis] = slice(None, -delta) if delta > 0 else slice(-delta, None)
        out[tuple(dst)] = arr[tuple(src)]
        return out

    right, rv = shifted(mean, 1), shifted(ok, 1).astype(bool)
    left, lv = shifted(mean, -1), shifted(ok, -1).astype(bool)
    grad = np.zeros_like(mean)
    both = rv & lv
    grad[both] = (right[both] - left[both]) / (2.0 * gsd)
    one_r = rv & ~lv & ok
    grad[one_r] = (right[one_r] - mean[one_r]) / gsd
    one_l = lv & ~rv & ok
    grad[one_l] = (mean[one_l] - left[one_l]) / gsd
    return grad


# ---------------------------------------------------------------------------
# Horizon scans, sky-view factor, openness
# ---------------------------------------------------------------------------

def ray_offsets(n_directions: int, radius_px: int) -> list[list[tuple[int, int, float]]]:
    """Per-direction sample offsets [(di, dj, distance_px)] for the horizon scan.

    Steps of 1 pixel along each azimuth, rounded to the nearest cell
    (ties to even); the distance is the true Euclidean distance of the
    rounded cell, and samples farther than radius_px are dropped.
    """
    dirs = []
    for k in range(n_directions):
        theta = 2.0 * math.pi * k / n_directions
        samples = []
        for t in range(1, radius_px + 1):
            dj = int(np.rint(t * math.cos(theta)))
            di = int(-np.rint(t * math.sin(theta)))
            dist = math.hypot(di, dj)
            if 0 < dist <= radius_px and (di, dj) not in {s[:2] for s in samples}:
                samples.append((di, dj, dist))
        dirs.append(samples)
    return dirs


def _scan_direction(z: np.ndarray, samples, gsd: float) -> np.ndarray:
    """Max elevation-angle tangent toward one azimuth; -inf where the ray
    never saw an in-bounds, non-nodata sample."""
    h, w = z.shape
    tanmax = np.full(z.shape, -np.inf, dtype=np.float32)
    with np.errstate(invalid="ignore"):
        for di, dj, dist in samples:
            if abs(di) >= h or abs(dj) >= w:
                continue
            src_i = slice(max(di, 0), h + min(di, 0))
            src_j = slice(max(dj, 0), w + min(dj, 0))
            dst_i = slice(max(-di, 0), h + min(-di, 0))
            dst_j = slice(max(-dj, 0), w + min(-dj, 0))
            diff = z[src_i, src_j] - z[dst_i, dst_j]
            diff *= np.float32(1.0 / (dist * gsd))
            region = tanmax[dst_i, dst_j]
            np.maximum(region, diff, out=region)
    return tanmax


def _horizon_tangents(grid: DemGrid, params: VtParams, threads: int = 1) -> list[np.ndarray]:
    """Per-direction tangent grids, in direction order (deterministic)."""
    z = grid.values.copy()
    z[~grid.valid_mask()] = -np.inf  # nodata never wins the max
    dirs = ray_offsets(params.svf_directions, params.svf_radius_px)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda s: _scan_direction(z, s, grid.gsd), dirs))
    return [_scan_direction(z, s, grid.gsd) for s in dirs]


def horizon_angles(grid: DemGrid, cell: tuple[int, int], params: VtParams) -> np.ndarray:
    """Horizon elevation angles (radians) for one cell, one per azimuth."""
    i, j = cell
    if not (0 <= i < grid.height and 0 <= j < grid.width):
        raise RasterError(f"cell {cell} out of bounds")
    valid = grid.valid_mask()
    zc = grid.values[i, j]
    out = np.zeros(params.svf_directions, dtype=np.float64)
    for k, samples in enumerate(ray_offsets(params.svf_directions, params.svf_radius_px)):
        best = -math.inf
        for di, dj, dist in samples:
            ii, jj = i + di, j + dj
            if not (0 <= ii < grid.height and 0 <= jj < grid.width):
                continue
            if not valid[ii, jj]:
                continue
            # float32 arithmetic, matching the vectorised scan bit-for-bit
            tan = (grid.values[ii, jj] - zc) * np.float32(1.0 / (dist * grid.gsd))
            best = max(best, float(tan))
        out[k] = math.atan(best) if best > -math.inf else 0.0
    return out


def sky_view_factor(grid: DemGrid, params: VtParams, threads: int = 1) -> DemGrid:
    """Fraction of visible sky hemisphere: 1 - mean_d sin(max(gamma_d, 0))."""
    tangents = _horizon_tangents(grid, params, threads)
    acc = np.zeros(grid.values.shape, dtype=np.float64)
    t = np.empty_like(acc)
    buf = np.empty_like(acc)
    with np.errstate(invalid="ignore", over="ignore"):
        for tm in tangents:
            # max with 0 also maps the -inf empty-ray sentinel to 0
            np.maximum(tm, np.float32(0.0), dtype=np.float64,
                       casting="unsafe", out=t)
            # sin(atan(t)) = t / sqrt(1 + t^2)
            np.multiply(t, t, out=buf)
            buf += 1.0
            np.sqrt(buf, out=buf)
            t /= buf
            acc += t
    svf = 1.0 - acc / params.svf_directions
    valid = grid.valid_mask()
    fill = grid.nodata if grid.nodata is not None else 0.0
    return grid.like(np.where(valid, svf, fill))


def positive_openness(grid: DemGrid, params: VtParams, threads: int = 1) -> DemGrid:
    """Mean zenith angle to the horizon, degrees; 90 on flat ground."""
    tangents = _horizon_tangents(grid, params, threads)
    acc = np.zeros(grid.values.shape, dtype=np.float64)
    t = np.empty_like(acc)
    buf = np.empty_like(acc)
    with np.errstate(invalid="ignore"):
        for tm in tangents:
            np.copyto(t, tm, casting="unsafe")
            t[np.isneginf(t)] = 0.0  # empty-ray sentinel
            np.arctan(t, out=buf)
            np.degrees(buf, out=buf)
            np.subtract(90.0, buf, out=buf)
            acc += buf
    openness = acc / params.svf_directions
    valid = grid.valid_mask()
    fill = grid.nodata if grid.nodata is not None else 0.0
    return grid.like(np.where(valid, openness, fill))


# ---------------------------------------------------------------------------
# Local relief and multiscale topographic position
# ---------------------------------------------------------------------------

def slrm(grid: DemGrid, params: VtParams) -> DemGrid:
    """Local relief: elevation minus its circular focal mean (signed metres)."""
    trend = focal_mean(grid, FocalWindow(params.slrm_radius_px, "circle"))
    valid = grid.valid_mask()
    out = grid.values.astype(np.float64) - trend.values.astype(np.float64)
    fill = grid.nodata if grid.nodata is not None else 0.0
    return grid.like(np.where(valid, out, fill))


def _best_deviation(grid: DemGrid, radii: list[int]) -> np.ndarray:
    """Signed deviation-from-mean with max magnitude across the radii.

    DEV(r) = (z - mean_r) / std_r, zero where std_r < DEV_EPSILON; ties in
    magnitude keep the smaller radius.
    """
    z = grid.values.astype(np.float64)
    best = None
    for r in radii:
        mean, std = focal_mean_std(grid, FocalWindow(r, "circle"))
        with np.errstate(invalid="ignore", divide="ignore"):
            dev = (z - mean) / np.maximum(std, DEV_EPSILON)
        dev = np.where(std < DEV_EPSILON, 0.0, dev)
        if best is None:
            best = dev
        else:
            best = np.where(np.abs(dev) > np.abs(best), dev, best)
    return best


def mstp(grid: DemGrid, params: VtParams) -> MultiBandImage:
    """Three-band multiscale topographic position composite.

    Bands are (broad, meso, local) deviations as (R, G, B), each mapped
    to [0,1] by clamp((dev + 3) / 6) so +/- 3 sigma spans the range.
    """
    largest = max(scale_radii(params.mstp_broad))
    if largest >= min(grid.width, grid.height):
        raise RasterError(f"broad radius {largest} too large for raster")
    valid = grid.valid_mask()
    bands = []
    for rng in (params.mstp_broad, params.mstp_meso, params.mstp_local):
        dev = _best_deviation(grid, scale_radii(rng))
        band = np.clip((dev + DEV_SPAN) / (2.0 * DEV_SPAN), 0.0, 1.0)
        band = np.where(valid, band, 0.0).astype(np.float32)
        bands.append(band)
    mask = None if grid.nodata is None else ~valid
    return MultiBandImage(bands=bands, nodata_mask=mask)


def e2mstp(grid: DemGrid, params: VtParams) -> MultiBandImage:
    """Local-relief-modulated multiscale topographic position.

    A luminance channel L = percentile-stretched local relief brightens
    the composite: band = clamp(mstp_band * (1 + L), 0, 1).
    """
    base = mstp(grid, params)
    relief = slrm(grid, params)
    lum = percentile_cut_stretch(relief, params.cut_low_pct, params.cut_high_pct)
    l = lum.bands[0].astype(np.float64)
    bands = [
        np.clip(b.astype(np.float64) * (1.0 + l), 0.0, 1.0).astype(np.float32)
        for b in base.bands
    ]
    return MultiBandImage(bands=bands, nodata_mask=base.nodata_mask)
