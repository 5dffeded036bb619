"""Raster file I/O.

Supported formats:

* ESRI ASCII grid (``.asc``/``.txt``) — plain-text, bit-exact for float32
  after the documented %.9g formatting (9 significant digits round-trip
  any float32 through decimal).
* Single-band float32 GeoTIFF (``.tif``/``.tiff``) — vanilla layouts via
  Pillow; pixel scale in tag 33550, nodata in GDAL's ASCII tag 42113.
  Three-band float images are written as three float32 pages.
* 8-bit PNG for visual exports and class-id masks.
"""

from __future__ import annotations

import json
import os

import numpy as np
from PIL import Image

from .grid import DemGrid, MultiBandImage, RasterError

TAG_PIXEL_SCALE = 33550
TAG_GDAL_NODATA = 42113

_ASCII_EXT = {".asc", ".txt"}
_TIFF_EXT = {".tif", ".tiff"}


def _ext(path: str) -> str:
    return os.path.splitext(path)[1].lower()


# ---------------------------------------------------------------------------
# ESRI ASCII grid
# ---------------------------------------------------------------------------

def _read_ascii(path: str) -> DemGrid:
    header: dict[str, float] = {}
    rows: list[np.ndarray] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            key = parts[0].lower()
            if not rows and key in (
                "ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value",
            ):
                header[key] = float(parts[1])
            else:
                try:
                    rows.append(np.array(parts, dtype=np.float64))
                except ValueError as exc:
                    raise RasterError(f"non-numeric data in {path}: {exc}") from exc
    for req in ("ncols", "nrows"):
        if req not in header:
            raise RasterError(f"{path}: missing ASCII grid header key {req}")
    ncols, nrows = int(header["ncols"]), int(header["nrows"])
    values = np.concatenate(rows) if rows else np.empty(0)
    if values.size != ncols * nrows:
        raise RasterError(
            f"{path}: expected {ncols * nrows} values, found {values.size}"
        )
    values = values.reshape(nrows, ncols).astype(np.float32)
    gsd = header.get("cellsize")
    origin = None
    if "xllcorner" in header and "yllcorner" in header:
        origin = (header["xllcorner"], header["yllcorner"])
    return DemGrid(
        values=values,
        gsd=gsd if gsd else 1.0,
        nodata=header.get("nodata_value"),
        origin=origin,
        gsd_defaulted=gsd is None,
    )


def _write_ascii(grid: DemGrid, path: str) -> None:
    nodata = grid.nodata if grid.nodata is not None else -9999.0
    ox, oy = grid.origin if grid.origin is not None else (0.0, 0.0)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"ncols {grid.width}\n")
        fh.write(f"nrows {grid.height}\n")
        fh.write(f"xllcorner {ox:.9g}\n")
        fh.write(f"yllcorner {oy:.9g}\n")
        fh.write(f"cellsize {grid.gsd:.9g}\n")
        fh.write(f"NODATA_value {nodata:.9g}\n")
        for row in grid.values:
            fh.write(" ".join(f"{float(v):.9g}" for v in row))
            fh.write("\n")


# ---------------------------------------------------------------------------
# GeoTIFF (float32, via Pillow)
# ---------------------------------------------------------------------------

def _tiffinfo(gsd: float, nodata: float | None) -> dict:
    info = {TAG_PIXEL_SCALE: (float(gsd), float(gsd), 0.0)}
    if nodata is not None:
        info[TAG_GDAL_NODATA] = f"{nodata:.9g}"
    return info


def _read_tiff(path: str) -> DemGrid:
    try:
        im = Image.open(path)
    except OSError as exc:
        raise RasterError(f"cannot read {path}: {exc}") from exc
    with im:
        if getattr(im, "n_frames", 1) > 1:
            raise RasterError(f"{path}: multi-band input where single band expected")
        if im.mode not in ("F", "I", "I;16", "L"):
            raise RasterError(f"{path}: unsupported pixel type {im.mode}")
        values = np.asarray(im, dtype=np.float32)
        scale = im.tag_v2.get(TAG_PIXEL_SCALE) if hasattr(im, "tag_v2") else None
        nodata_s = im.tag_v2.get(TAG_GDAL_NODATA) if hasattr(im, "tag_v2") else None
    nodata = float(nodata_s) if nodata_s is not None else None
    gsd = float(scale[0]) if scale else None
    return DemGrid(
        values=values,
        gsd=gsd if gsd else 1.0,
        nodata=nodata,
        gsd_defaulted=not bool(gsd),
    )


def _write_tiff_single(values: np.ndarray, gsd: float, nodata: float | None, path: str) -> None:
    im = Image.fromarray(np.ascontiguousarray(values, dtype=np.float32), mode="F")
    im.save(path, tiffinfo=_tiffinfo(gsd, nodata))


def _write_tiff_multiband(image: MultiBandImage, path: str, gsd: float = 1.0) -> None:
    pages = [
        Image.fromarray(np.ascontiguousarray(b, dtype=np.float32), mode="F")
        for b in image.bands
    ]
    pages[0].save(
        path, save_all=True, append_images=pages[1:], tiffinfo=_tiffinfo(gsd, None)
    )


# ---------------------------------------------------------------------------
# PNG export (8-bit, value*255 rounded half-up)
# ---------------------------------------------------------------------------

def _to_byte(band: np.ndarray, mask: np.ndarray | None) -> np.ndarray:
    b = np.floor(np.clip(band, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    if mask is not None:
        b[mask] = 0
    return b


def _write_png(image: MultiBandImage, path: str) -> None:
    mask = image.nodata_mask
    if image.band_count == 1:
        Image.fromarray(_to_byte(image.bands[0], mask), mode="L").save(path)
    else:
        rgb = np.stack([_to_byte(b, mask) for b in image.bands], axis=-1)
        Image.fromarray(rgb, mode="RGB").save(path)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def read_raster(path: str) -> DemGrid:
    """Read a single-band elevation raster (ASCII grid or float GeoTIFF).

    Missing pixel-scale metadata defaults gsd to 1.0 and sets the grid's
    ``gsd_defaulted`` flag.
    """
    if not os.path.isfile(path):
        raise RasterError(f"no such raster file: {path}")
    ext = _ext(path)
    if ext in _ASCII_EXT:
        return _read_ascii(path)
    if ext in _TIFF_EXT:
        return _read_tiff(path)
    raise RasterError(f"unsupported raster format {ext!r} for {path}")


def write_raster(data: DemGrid | MultiBandImage, path: str, gsd: float | None = None) -> None:
    """Write a grid or image; format chosen by extension.

    DemGrid: .asc or .tif, float32, bit-exact round-trip.
    MultiBandImage: .png (8-bit), .tif (float32 pages), or .asc for a
    single band.
    """
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent):
        raise RasterError(f"output directory does not exist: {parent}")
    ext = _ext(path)
    if isinstance(data, DemGrid):
        if ext in _ASCII_EXT:
            _write_ascii(data, path)
        elif ext in _TIFF_EXT:
            _write_tiff_single(data.values, data.gsd, data.nodata, path)
        elif ext == ".png":
            lo, hi = float(np.min(data.values)), float(np.max(data.values))
            span = (hi - lo) or 1.0
            img = MultiBandImage(bands=[(data.values - lo) / span])
            _write_png(img, path)
        else:
            raise RasterError(f"unsupported output format {ext!r}")
        return
    if isinstance(data, MultiBandImage):
        if ext == ".png":
            _write_png(data, path)
        elif ext in _TIFF_EXT:
            _write_tiff_multiband(data, path, gsd=gsd or 1.0)
        elif ext in _ASCII_EXT and data.band_count == 1:
            _write_ascii(DemGrid(values=data.bands[0], gsd=gsd or 1.0), path)
        else:
            raise RasterError(f"unsupported output format {ext!r} for {data.band_count}-band image")
        return
    raise RasterError(f"cannot write object of type {type(data).__name__}")


def read_image(path: str) -> MultiBandImage:
    """Read a 1- or 3-band image written by write_raster (float TIFF or PNG)."""
    ext = _ext(path)
    if ext in _TIFF_EXT:
        with Image.open(path) as im:
            bands = []
            for k in range(getattr(im, "n_frames", 1)):
                im.seek(k)
                bands.append(np.asarray(im, dtype=np.float32))
        return MultiBandImage(bands=bands)
    if ext == ".png":
        with Image.open(path) as im:
            arr = np.asarray(im, dtype=np.float32) / 255.0
        if arr.ndim == 2:
            return MultiBandImage(bands=[arr])
        return MultiBandImage(bands=[arr[..., k] for k in range(3)])
    raise RasterError(f"unsupported image format {ext!r}")


def read_mask(path: str) -> np.ndarray:
    """Read an 8-bit class-id mask (PNG or TIFF) as a 2D uint8 array."""
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim != 2:
        raise RasterError(f"{path}: mask must be single-band")
    return arr.astype(np.uint8)


def write_mask(mask: np.ndarray, path: str) -> None:
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise RasterError("mask must be 2D")
    Image.fromarray(mask.astype(np.uint8), mode="L").save(path)


def write_sidecar(raster_path: str, payload: dict) -> str:
    """Write the JSON metadata sidecar next to a raster output."""
    sidecar = raster_path + ".json"
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return sidecar
