"""Deterministic synthetic terrain with implanted earthwork shapes.

Used by the end-to-end smoke pipeline and handy for demos: rolling
terrain plus gaussian mounds (class 1) and ring ditches (class 2), with a
matching ground-truth mask.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .grid import DemGrid

MOUND_CLASS = 1
DITCH_CLASS = 2


def make_synthetic_terrain(size: int = 512, gsd: float = 0.5,
                           seed: int = 0) -> tuple[DemGrid, np.ndarray]:
    """Rolling DEM with mounds and ring ditches, plus its class mask."""
    rng = np.random.default_rng(seed)
    base = gaussian_filter(rng.standard_normal((size, size)), sigma=size / 16.0)
    base = base / (np.std(base) or 1.0) * 3.0 + 100.0

    ii, jj = np.mgrid[0:size, 0:size].astype(np.float64)
    mask = np.zeros((size, size), dtype=np.uint8)

    n_shapes = max(2, size // 128)
    for s in range(n_shapes):
        # mound: gaussian bump ~1.5 m high
        ci, cj = rng.integers(size // 8, 7 * size // 8, size=2)
        r = float(rng.uniform(size / 40, size / 24))
        d2 = (ii - ci) ** 2 + (jj - cj) ** 2
        base += 1.5 * np.exp(-d2 / (2 * r * r))
        mask[d2 <= (1.5 * r) ** 2] = MOUND_CLASS

        # ring ditch: shallow annular depression with a central platform
        ci, cj = rng.integers(size // 8, 7 * size // 8, size=2)
        r = float(rng.uniform(size / 36, size / 22))
        d = np.sqrt((ii - ci) ** 2 + (jj - cj) ** 2)
        ring = np.exp(-((d - r) ** 2) / (2 * (r / 5.0) ** 2))
        base -= 0.8 * ring
        mask[np.abs(d - r) <= r / 3.0] = DITCH_CLASS

    dem = DemGrid(values=base.astype(np.float32), gsd=gsd)
    return dem, mask
