"""Segmentation training adapter for demviz datasets."""

from .configs import (
    Architecture,
    Encoder,
    Init,
    ModelConfig,
    config_id,
    enumerate_configs,
)
from .models import build_model
from .train import AdapterError, RunResult, train_and_predict, tversky_loss

__version__ = "0.1.0"
