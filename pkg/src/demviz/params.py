"""Visualisation names and tunable parameters with documented defaults."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from enum import Enum

from .grid import RasterError


class VtName(Enum):
    """The seven supported visualisation techniques."""

    DEM_C = "DEM_C"
    DEM_S = "DEM_S"
    SLRM = "SLRM"
    DSS = "DSS"
    E2MSTP = "E2MSTP"
    E2MSTP_1B = "E2MSTP_1B"
    VAT = "VAT"


ScaleRange = tuple[int, int, int]  # (min_radius, max_radius, step), pixels


@dataclass
class VtParams:
    """All VT knobs in one record.

    Defaults are display-oriented choices suitable for 0.5 m LiDAR DEMs;
    every CLI output records the params actually used in its sidecar.
    """

    svf_directions: int = 16
    svf_radius_px: int = 10
    slrm_radius_px: int = 20
    mstp_local: ScaleRange = (1, 10, 1)
    mstp_meso: ScaleRange = (10, 50, 5)
    mstp_broad: ScaleRange = (50, 100, 10)
    cut_low_pct: float = 1.0
    cut_high_pct: float = 99.0
    e2_flatten: str = "mean"

    def __post_init__(self):
        if self.svf_directions < 4 or self.svf_directions % 2:
            raise RasterError("svf_directions must be even and >= 4")
        if self.svf_radius_px < 1 or self.slrm_radius_px < 1:
            raise RasterError("radii must be >= 1")
        for name in ("mstp_local", "mstp_meso", "mstp_broad"):
            rng = tuple(int(x) for x in getattr(self, name))
            setattr(self, name, rng)
            lo, hi, step = rng
            if lo < 1 or lo >= hi or step < 1:
                raise RasterError(f"{name} must satisfy 1 <= min < max, step >= 1")
        if not (0.0 <= self.cut_low_pct < self.cut_high_pct <= 100.0):
            raise RasterError("cut percentiles must satisfy 0 <= low < high <= 100")
        if self.e2_flatten != "mean":
            raise RasterError(f"unsupported e2_flatten {self.e2_flatten!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("mstp_local", "mstp_meso", "mstp_broad"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VtParams":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise RasterError(f"unknown VtParams keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json_file(cls, path: str) -> "VtParams":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def scale_radii(rng: ScaleRange) -> list[int]:
    """Radii covered by a (min, max, step) range, max inclusive."""
    lo, hi, step = rng
    return list(range(lo, hi + 1, step))
