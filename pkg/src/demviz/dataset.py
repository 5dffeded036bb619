"""Tiling, dataset manifests, deterministic folds, and augmentations.

All randomness flows through a SplitMix64 stream so that fold assignment
and augmentation draws are reproducible bit-for-bit from (inputs, seed)
in any implementation language.  The manifest records the stream name.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .grid import DemGrid, RasterError

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
RNG_NAME = "splitmix64"


def _mix64(z: int) -> int:
    """SplitMix64 output function."""
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _M64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _M64
    return z ^ (z >> 31)


class SplitMix64:
    """Tiny deterministic 64-bit stream (SplitMix64)."""

    def __init__(self, seed: int):
        self.state = seed & _M64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _M64
        return _mix64(self.state)

    def next_float(self) -> float:
        """Uniform in [0, 1)."""
        return self.next_u64() / 2.0 ** 64

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates driven by this stream."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_u64() % (i + 1)
            items[i], items[j] = items[j], items[i]


def fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & _M64
    return h


# ---------------------------------------------------------------------------
# Catalog / manifest data model
# ---------------------------------------------------------------------------

@dataclass
class ClassCatalog:
    """Ordered (id, name) pairs; ids contiguous from 1, 0 is background."""

    classes: list[tuple[int, str]]

    def __post_init__(self):
        ids = [c[0] for c in self.classes]
        names = [c[1] for c in self.classes]
        if ids != list(range(1, len(ids) + 1)):
            raise RasterError(f"class ids must be contiguous from 1, got {ids}")
        if len(set(names)) != len(names):
            raise RasterError("class names must be unique")

    def ids(self) -> list[int]:
        return [c[0] for c in self.classes]

    def name_of(self, cid: int) -> str:
        for i, n in self.classes:
            if i == cid:
                return n
        raise KeyError(cid)

    def to_json(self) -> list[dict]:
        return [{"id": i, "name": n} for i, n in self.classes]

    @classmethod
    def from_json(cls, data: list[dict]) -> "ClassCatalog":
        return cls([(int(d["id"]), str(d["name"])) for d in data])


@dataclass
class TilePair:
    tile_id: str
    dem: DemGrid
    mask: np.ndarray

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=np.uint8)
        if self.mask.shape != self.dem.values.shape:
            raise RasterError(f"{self.tile_id}: dem/mask dimensions differ")

    @property
    def classes_present(self) -> set[int]:
        return set(int(c) for c in np.unique(self.mask) if c != 0)


@dataclass
class ManifestEntry:
    tile_id: str
    dem_path: str
    mask_path: str
    classes_present: list[int]
    fold: int = -1  # -1 until assign_folds has run


@dataclass
class DatasetManifest:
    dataset_name: str
    gsd: float
    tile_size: int
    catalog: ClassCatalog
    entries: list[ManifestEntry] = field(default_factory=list)
    k: int = 0
    seed: int = 0

    def __post_init__(self):
        ids = [e.tile_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise RasterError("duplicate tile ids in manifest")

    def to_json(self) -> dict:
        return {
            "dataset_name": self.dataset_name,
            "gsd": self.gsd,
            "tile_size": self.tile_size,
            "k": self.k,
            "seed": self.seed,
            "rng": RNG_NAME,
            "catalog": self.catalog.to_json(),
            "entries": [
                {
                    "tile_id": e.tile_id,
                    "dem_path": e.dem_path,
                    "mask_path": e.mask_path,
                    "classes_present": sorted(e.classes_present),
                    "fold": e.fold,
                }
                for e in self.entries
            ],
        }

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path: str) -> "DatasetManifest":
        with open(path, "r", encoding="utf-8") as fh:
            d = json.load(fh)
        return cls(
            dataset_name=d["dataset_name"],
            gsd=float(d["gsd"]),
            tile_size=int(d["tile_size"]),
            catalog=ClassCatalog.from_json(d["catalog"]),
            entries=[
                ManifestEntry(
                    tile_id=e["tile_id"],
                    dem_path=e["dem_path"],
                    mask_path=e["mask_path"],
                    classes_present=[int(c) for c in e["classes_present"]],
                    fold=int(e.get("fold", -1)),
                )
                for e in d["entries"]
            ],
            k=int(d.get("k", 0)),
            seed=int(d.get("seed", 0)),
        )


# ---------------------------------------------------------------------------
# Tiling
# ---------------------------------------------------------------------------

def tile_grid(dem: DemGrid, mask: np.ndarray, tile_size: int = 256) -> list[TilePair]:
    """Non-overlapping row-major tiling with padded ragged edges.

    Ragged right/bottom tiles are padded to full size: the DEM by edge
    replication, the mask with background 0 (no fabricated labels).
    """
    mask = np.asarray(mask)
    if mask.shape != dem.values.shape:
        raise RasterError("dem and mask dimensions differ")
    if tile_size < 32:
        raise RasterError("tile_size must be >= 32")
    h, w = dem.values.shape
    if h == 0 or w == 0:
        raise RasterError("empty raster")
    n_rows = -(-h // tile_size)
    n_cols = -(-w // tile_size)
    pad_h, pad_w = n_rows * tile_size - h, n_cols * tile_size - w
    dem_p = np.pad(dem.values, ((0, pad_h), (0, pad_w)), mode="edge")
    mask_p = np.pad(mask, ((0, pad_h), (0, pad_w)), mode="constant")
    tiles = []
    for r in range(n_rows):
        for c in range(n_cols):
            sl = (slice(r * tile_size, (r + 1) * tile_size),
                  slice(c * tile_size, (c + 1) * tile_size))
            tiles.append(TilePair(
                tile_id=f"r{r}_c{c}",
                dem=dem.like(dem_p[sl]),
                mask=mask_p[sl],
            ))
    return tiles


# ---------------------------------------------------------------------------
# Fold assignment
# ---------------------------------------------------------------------------

def assign_folds(manifest: DatasetManifest, k: int, seed: int) -> DatasetManifest:
    """Deterministic stratified k-fold assignment.

    Entries are grouped by their class-presence signature, sorted by
    tile_id, shuffled by a per-stratum SplitMix64 stream, and dealt
    round-robin to folds, so fold sizes differ by at most one per stratum
    and the result depends only on (entry set, k, seed).
    """
    if k < 2:
        raise RasterError("k must be >= 2")
    if len(manifest.entries) < k:
        raise RasterError(f"need at least k={k} entries, have {len(manifest.entries)}")
    strata: dict[str, list[ManifestEntry]] = {}
    for e in manifest.entries:
        sig = ",".join(str(c) for c in sorted(e.classes_present))
        strata.setdefault(sig, []).append(e)
    for sig in sorted(strata):
        group = sorted(strata[sig], key=lambda e: e.tile_id)
        rng = SplitMix64(seed ^ fnv1a64("stratum:" + sig))
        rng.shuffle(group)
        for m, e in enumerate(group):
            e.fold = m % k
    manifest.k = k
    manifest.seed = seed
    return manifest


# ---------------------------------------------------------------------------
# Augmentation
# ---------------------------------------------------------------------------

AUG_OPS = ("vflip", "hflip", "rot45")


@dataclass
class AugmentationSpec:
    ops: tuple[str, ...] = AUG_OPS
    probability: float = 0.5
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.ops) - set(AUG_OPS)
        if unknown:
            raise RasterError(f"unknown augmentation ops: {sorted(unknown)}")
        if not (0.0 <= self.probability <= 1.0):
            raise RasterError("probability must be in [0, 1]")


def _aug_stream(spec: AugmentationSpec, tile_id: str, draw_index: int) -> SplitMix64:
    state = _mix64(spec.seed ^ fnv1a64(tile_id))
    return SplitMix64(_mix64(state ^ (draw_index & _M64)))


def _rot45(image: np.ndarray, order: int) -> np.ndarray:
    return ndimage.rotate(image, 45.0, axes=(1, 0), reshape=False,
                          order=order, mode="reflect")


def augment(image: np.ndarray, mask: np.ndarray, spec: AugmentationSpec,
            tile_id: str, draw_index: int) -> tuple[np.ndarray, np.ndarray]:
    """Apply the enabled ops, each firing independently with spec.probability.

    Decisions come from a stream keyed on (seed, tile_id, draw_index), one
    draw per op in the fixed order vflip, hflip, rot45.  Flips are exact
    axis reversals; rot45 rotates about the tile centre, bilinear with
    reflect padding for the image and nearest-neighbour for the mask.
    ``image`` may be (H, W) or (H, W, C).
    """
    rng = _aug_stream(spec, tile_id, draw_index)
    fire = {op: (op in spec.ops and rng.next_float() < spec.probability)
            for op in AUG_OPS}
    img, msk = image, mask
    if fire["vflip"]:
        img, msk = np.flip(img, axis=0), np.flip(msk, axis=0)
    if fire["hflip"]:
        img, msk = np.flip(img, axis=1), np.flip(msk, axis=1)
    if fire["rot45"]:
        if img.ndim == 3:
            img = np.stack([_rot45(img[..., c], 1) for c in range(img.shape[2])], axis=-1)
        else:
            img = _rot45(img, 1)
        msk = _rot45(msk, 0)
    return np.ascontiguousarray(img), np.ascontiguousarray(msk)


# ---------------------------------------------------------------------------
# Class bookkeeping
# ---------------------------------------------------------------------------

def class_stats(manifest: DatasetManifest, base_dir: str = ".") -> list[dict]:
    """Per-class tile and pixel counts over the manifest's masks."""
    from .raster_io import read_mask

    counts = {cid: {"class": cid, "name": manifest.catalog.name_of(cid),
                    "tile_count": 0, "pixel_count": 0}
              for cid in manifest.catalog.ids()}
    for e in manifest.entries:
        mask = read_mask(os.path.join(base_dir, e.mask_path))
        present, pix = np.unique(mask, return_counts=True)
        for cid, n in zip(present, pix):
            if int(cid) in counts:
                counts[int(cid)]["tile_count"] += 1
                counts[int(cid)]["pixel_count"] += int(n)
    return [counts[cid] for cid in manifest.catalog.ids()]
