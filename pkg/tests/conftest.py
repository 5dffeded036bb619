import numpy as np
import pytest

from demviz import DemGrid


def random_grid(rng, size=32, gsd=1.0, nodata=None, nodata_frac=0.0,
                quantize=None) -> DemGrid:
    """Random elevation grid in [0, 1); optionally quantized or holed."""
    vals = rng.random((size, size)).astype(np.float32)
    if quantize:
        vals = (np.floor(vals * quantize) / quantize).astype(np.float32)
    if nodata is not None and nodata_frac > 0:
        holes = rng.random((size, size)) < nodata_frac
        vals[holes] = nodata
    return DemGrid(values=vals, gsd=gsd, nodata=nodata)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
