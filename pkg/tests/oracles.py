"""Independent brute-force reference implementations used by the tests.

Everything here is written as directly as possible (explicit loops or
shifted-slice accumulation), deliberately avoiding the FFT / vectorised
code paths of the package so that agreement is meaningful.
"""

from __future__ import annotations

import math

import numpy as np


# ---------------------------------------------------------------------------
# focal statistics (explicit double loop)
# ---------------------------------------------------------------------------

def window_members(r: int, shape: str):
    for di in range(-r, r + 1):
        for dj in range(-r, r + 1):
            if shape == "square" or di * di + dj * dj <= r * r:
                yield di, dj


def focal_mean_loop(values, valid, r: int, shape: str) -> np.ndarray:
    h, w = values.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            acc, n = 0.0, 0
            for di, dj in window_members(r, shape):
                ii, jj = i + di, j + dj
                if 0 <= ii < h and 0 <= jj < w and valid[ii, jj]:
                    acc += float(values[ii, jj])
                    n += 1
            out[i, j] = acc / n if n else np.nan
    return out


def focal_std_loop(values, valid, r: int, shape: str) -> np.ndarray:
    h, w = values.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            vals = []
            for di, dj in window_members(r, shape):
                ii, jj = i + di, j + dj
                if 0 <= ii < h and 0 <= jj < w and valid[ii, jj]:
                    vals.append(float(values[ii, jj]))
            if not vals:
                out[i, j] = np.nan
                continue
            mu = sum(vals) / len(vals)
            out[i, j] = math.sqrt(sum((v - mu) ** 2 for v in vals) / len(vals))
    return out


def focal_stats_shift(values, valid, r: int, shape: str):
    """Mean/std via shifted-slice accumulation (fast, still FFT-free)."""
    h, w = values.shape
    v = np.where(valid, values.astype(np.float64), 0.0)
    ones = valid.astype(np.float64)
    cnt = np.zeros((h, w))
    s1 = np.zeros((h, w))
    s2 = np.zeros((h, w))
    for di, dj in window_members(r, shape):
        src_i = slice(max(di, 0), h + min(di, 0))
        src_j = slice(max(dj, 0), w + min(dj, 0))
        dst_i = slice(max(-di, 0), h + min(-di, 0))
        dst_j = slice(max(-dj, 0), w + min(-dj, 0))
        cnt[dst_i, dst_j] += ones[src_i, src_j]
        s1[dst_i, dst_j] += v[src_i, src_j]
        s2[dst_i, dst_j] += v[src_i, src_j] ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = s1 / cnt
        var = np.maximum(s2 / cnt - mean * mean, 0.0)
    return mean, np.sqrt(var)


# ---------------------------------------------------------------------------
# percentile stretch (sort-and-index quantile)
# ---------------------------------------------------------------------------

def quantile_type7(sorted_vals: np.ndarray, pct: float) -> float:
    n = len(sorted_vals)
    if n == 1:
        return float(sorted_vals[0])
    h = (n - 1) * pct / 100.0
    lo = int(math.floor(h))
    hi = min(lo + 1, n - 1)
    frac = h - lo
    return float(sorted_vals[lo]) * (1 - frac) + float(sorted_vals[hi]) * frac


def stretch_loop(values, valid, low_pct, high_pct) -> np.ndarray:
    vals = np.sort(values[valid].astype(np.float64))
    lo = quantile_type7(vals, low_pct)
    hi = quantile_type7(vals, high_pct)
    out = np.zeros(values.shape)
    h, w = values.shape
    for i in range(h):
        for j in range(w):
            if not valid[i, j]:
                continue
            if hi == lo:
                out[i, j] = 0.5
            else:
                out[i, j] = min(max((float(values[i, j]) - lo) / (hi - lo), 0.0), 1.0)
    return out


# ---------------------------------------------------------------------------
# slope (per-cell truncated Horn stencil)
# ---------------------------------------------------------------------------

def _col_mean(values, valid, i, j, h, w):
    acc, wt = 0.0, 0.0
    for di, weight in ((-1, 1.0), (0, 2.0), (1, 1.0)):
        ii = i + di
        if 0 <= ii < h and valid[ii, j]:
            acc += weight * float(values[ii, j])
            wt += weight
    return (acc / wt, True) if wt > 0 else (0.0, False)


def _row_mean(values, valid, i, j, h, w):
    acc, wt = 0.0, 0.0
    for dj, weight in ((-1, 1.0), (0, 2.0), (1, 1.0)):
        jj = j + dj
        if 0 <= jj < w and valid[i, jj]:
            acc += weight * float(values[i, jj])
            wt += weight
    return (acc / wt, True) if wt > 0 else (0.0, False)


def _one_axis_grad(means, gsd):
    (lm, lv), (cm, cv), (rm, rv) = means
    if lv and rv:
        return (rm - lm) / (2.0 * gsd)
    if rv and cv:
        return (rm - cm) / gsd
    if lv and cv:
        return (cm - lm) / gsd
    return 0.0


def slope_loop(values, valid, gsd) -> np.ndarray:
    h, w = values.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            cols = [
                _col_mean(values, valid, i, j - 1, h, w) if j - 1 >= 0 else (0.0, False),
                _col_mean(values, valid, i, j, h, w),
                _col_mean(values, valid, i, j + 1, h, w) if j + 1 < w else (0.0, False),
            ]
            rows = [
                _row_mean(values, valid, i - 1, j, h, w) if i - 1 >= 0 else (0.0, False),
                _row_mean(values, valid, i, j, h, w),
                _row_mean(values, valid, i + 1, j, h, w) if i + 1 < h else (0.0, False),
            ]
            p = _one_axis_grad(cols, gsd)
            q = _one_axis_grad(rows, gsd)
            out[i, j] = math.degrees(math.atan(math.hypot(p, q)))
    return out


# ---------------------------------------------------------------------------
# horizon scan / SVF / openness (per-cell ray walk)
# ---------------------------------------------------------------------------

def horizon_tangents_loop(values, valid, i, j, n_dirs, radius_px, gsd):
    """Max float32 tangent per direction, -inf when the ray is empty."""
    h, w = values.shape
    out = []
    for k in range(n_dirs):
        theta = 2.0 * math.pi * k / n_dirs
        best = -math.inf
        for t in range(1, radius_px + 1):
            di = -int(np.rint(t * math.sin(theta)))
            dj = int(np.rint(t * math.cos(theta)))
            dist = math.hypot(di, dj)
            if dist == 0 or dist > radius_px:
                continue
            ii, jj = i + di, j + dj
            if not (0 <= ii < h and 0 <= jj < w) or not valid[ii, jj]:
                continue
            tan = (np.float32(values[ii, jj]) - np.float32(values[i, j])) \
                * np.float32(1.0 / (dist * gsd))
            best = max(best, float(tan))
        out.append(best)
    return out


def svf_loop(values, valid, n_dirs, radius_px, gsd) -> np.ndarray:
    h, w = values.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            total = 0.0
            for best in horizon_tangents_loop(values, valid, i, j, n_dirs, radius_px, gsd):
                t = max(best, 0.0) if best > -math.inf else 0.0
                total += t / math.sqrt(1.0 + t * t)  # sin of the horizon angle
            out[i, j] = 1.0 - total / n_dirs
    return out


def openness_loop(values, valid, n_dirs, radius_px, gsd) -> np.ndarray:
    h, w = values.shape
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            total = 0.0
            for best in horizon_tangents_loop(values, valid, i, j, n_dirs, radius_px, gsd):
                gamma = math.atan(best) if best > -math.inf else 0.0
                total += 90.0 - math.degrees(gamma)
            out[i, j] = total / n_dirs
    return out


# ---------------------------------------------------------------------------
# topographic position (loop over radii on top of shift-based stats)
# ---------------------------------------------------------------------------

def best_dev_loop(values, valid, radii, eps=1e-6) -> np.ndarray:
    z = values.astype(np.float64)
    best = None
    for r in radii:
        mean, std = focal_stats_shift(values, valid, r, "circle")
        with np.errstate(invalid="ignore", divide="ignore"):
            dev = (z - mean) / np.maximum(std, eps)
        dev = np.where(std < eps, 0.0, dev)
        best = dev if best is None else np.where(np.abs(dev) > np.abs(best), dev, best)
    return best


def mstp_bands_loop(values, valid, ranges, span=3.0) -> list[np.ndarray]:
    """ranges in (broad, meso, local) order, each a list of radii."""
    bands = []
    for radii in ranges:
        dev = best_dev_loop(values, valid, radii)
        bands.append(np.clip((dev + span) / (2 * span), 0.0, 1.0))
    return bands


# ---------------------------------------------------------------------------
# confusion counts (pixel loop)
# ---------------------------------------------------------------------------

def confusion_loop(pred, gt, threshold):
    tp = fp = fn = tn = 0
    for p, g in zip(np.asarray(pred).ravel(), np.asarray(gt).ravel()):
        pos = p >= threshold
        if pos and g:
            tp += 1
        elif pos:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def tversky_loop(pred, gt, alpha, beta, eps=1e-7):
    tp = fn = fp = 0.0
    for p, g in zip(np.asarray(pred, dtype=np.float64).ravel(),
                    np.asarray(gt, dtype=np.float64).ravel()):
        tp += p * g
        fn += (1.0 - p) * g
        fp += p * (1.0 - g)
    return 1.0 - (tp + eps) / (tp + alpha * fn + beta * fp + eps)
