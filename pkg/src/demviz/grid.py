"""Core raster containers: elevation grids, normalised images, focal windows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class RasterError(ValueError):
    """Invalid raster contents, dimensions, or parameters."""


@dataclass
class DemGrid:
    """Single-band float32 elevation raster.

    values are metres, row 0 is the northernmost row.  Cells equal to the
    ``nodata`` sentinel are excluded from every statistic computed on the
    grid.  ``gsd`` is the ground sample distance in metres per pixel;
    ``origin`` is the (x, y) of the lower-left corner in map units when
    known.  ``gsd_defaulted`` flags a grid whose source file carried no
    pixel scale (gsd fell back to 1.0).
    """

    values: np.ndarray
    gsd: float = 1.0
    nodata: float | None = None
    origin: tuple[float, float] | None = None
    gsd_defaulted: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 2:
            raise RasterError(f"DemGrid values must be 2D, got shape {self.values.shape}")
        if self.height < 1 or self.width < 1:
            raise RasterError("DemGrid must have at least one row and one column")
        if not (self.gsd > 0):
            raise RasterError(f"gsd must be positive, got {self.gsd}")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def valid_mask(self) -> np.ndarray:
        """Boolean array, True where the cell carries real elevation."""
        if self.nodata is None:
            return np.ones(self.values.shape, dtype=bool)
        return self.values != np.float32(self.nodata)

    def valid_values(self) -> np.ndarray:
        return self.values[self.valid_mask()]

    def like(self, values: np.ndarray) -> "DemGrid":
        """New grid with the same georeferencing but different values."""
        return DemGrid(
            values=np.asarray(values, dtype=np.float32),
            gsd=self.gsd,
            nodata=self.nodata,
            origin=self.origin,
            gsd_defaulted=self.gsd_defaulted,
        )


@dataclass
class MultiBandImage:
    """1- or 3-band normalised raster, every valid value in [0, 1].

    ``nodata_mask`` is True where the source DEM had no data; those cells
    are carried through but hold no meaningful value.
    """

    bands: list[np.ndarray]
    nodata_mask: np.ndarray | None = None

    def __post_init__(self):
        if len(self.bands) not in (1, 3):
            raise RasterError(f"band count must be 1 or 3, got {len(self.bands)}")
        self.bands = [np.asarray(b, dtype=np.float32) for b in self.bands]
        shape = self.bands[0].shape
        for b in self.bands:
            if b.ndim != 2 or b.shape != shape:
                raise RasterError("all bands must share identical 2D dimensions")
        if self.nodata_mask is not None:
            self.nodata_mask = np.asarray(self.nodata_mask, dtype=bool)
            if self.nodata_mask.shape != shape:
                raise RasterError("nodata mask shape must match bands")
        valid = ~self.nodata_mask if self.nodata_mask is not None else slice(None)
        for b in self.bands:
            v = b[valid]
            if v.size and (np.nanmin(v) < -1e-6 or np.nanmax(v) > 1 + 1e-6):
                raise RasterError("band values outside [0, 1]")

    @property
    def height(self) -> int:
        return self.bands[0].shape[0]

    @property
    def width(self) -> int:
        return self.bands[0].shape[1]

    @property
    def band_count(self) -> int:
        return len(self.bands)


@dataclass(frozen=True)
class FocalWindow:
    """Neighbourhood for focal statistics: square or inscribed circle.

    Circle membership: di**2 + dj**2 <= radius**2 (centre included).
    """

    radius: int
    shape: str = "square"

    def __post_init__(self):
        if self.radius < 1:
            raise RasterError(f"window radius must be >= 1, got {self.radius}")
        if self.shape not in ("square", "circle"):
            raise RasterError(f"unknown window shape {self.shape!r}")

    def kernel(self) -> np.ndarray:
        """Boolean membership kernel of shape (2r+1, 2r+1)."""
        r = self.radius
        if self.shape == "square":
            return np.ones((2 * r + 1, 2 * r + 1), dtype=bool)
        di, dj = np.mgrid[-r : r + 1, -r : r + 1]
        return (di * di + dj * dj) <= r * r
