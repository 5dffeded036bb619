"""Per-fold training and prediction against a demviz dataset.

Consumes a DatasetManifest plus per-tile visualisation rasters
(``<tile_id>.tif`` in vt_dir, produced by the demviz CLI), trains on the
non-held folds with the dataset's augmentation semantics, and writes the
held fold's per-class probability rasters in the evaluation contract
format ``<tile_id>_<class>.tif``.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from demviz import (
    AugmentationSpec,
    DatasetManifest,
    DemGrid,
    augment,
    read_image,
    read_mask,
    write_raster,
)

from .configs import ModelConfig
from .models import build_model

log = logging.getLogger(__name__)


class AdapterError(RuntimeError):
    pass


@dataclass
class RunResult:
    epoch_losses: list[float]
    prediction_paths: list[str]
    metadata_path: str


def _resolve_device(requested: str) -> torch.device:
    if requested != "cpu" and not torch.cuda.is_available():
        log.warning("device %r unavailable, falling back to cpu", requested)
        return torch.device("cpu")
    return torch.device(requested)


def _load_pair(manifest: DatasetManifest, entry, vt_dir: str, base_dir: str,
               replicate_channels: bool):
    vt_path = os.path.join(vt_dir, f"{entry.tile_id}.tif")
    if not os.path.isfile(vt_path):
        raise AdapterError(f"missing visualisation raster {vt_path}")
    image = read_image(vt_path)
    arr = np.stack(image.bands, axis=-1)  # HWC
    if replicate_channels and arr.shape[-1] == 1:
        log.info("replicating single-band input of %s to 3 channels",
                 entry.tile_id)
        arr = np.repeat(arr, 3, axis=-1)
    mask = read_mask(os.path.join(base_dir, entry.mask_path))
    return arr.astype(np.float32), mask


def _to_targets(mask: np.ndarray, class_ids: list[int]) -> np.ndarray:
    return np.stack([(mask == cid).astype(np.float32) for cid in class_ids])


def tversky_loss(logits: torch.Tensor, targets: torch.Tensor,
                 alpha: float, beta: float, eps: float = 1e-7) -> torch.Tensor:
    """Soft Tversky loss averaged over classes; matches the demviz formula."""
    probs = torch.sigmoid(logits)
    dims = (0, 2, 3)
    tp = (probs * targets).sum(dims)
    fn = ((1.0 - probs) * targets).sum(dims)
    fp = (probs * (1.0 - targets)).sum(dims)
    loss = 1.0 - (tp + eps) / (tp + alpha * fn + beta * fp + eps)
    return loss.mean()


def train_and_predict(manifest: DatasetManifest, vt_name: str, vt_dir: str,
                      config: ModelConfig, fold: int, out_dir: str, *,
                      base_dir: str = ".", epochs: int | None = None,
                      seed: int = 0, batch_size: int = 8,
                      replicate_channels: bool = False,
                      device: str = "cpu") -> RunResult:
    """Train config on the non-held folds and predict the held fold.

    Returns per-epoch mean training losses plus the written paths.  All
    randomness (weights, batch order, augmentation draws) derives from
    ``seed``, so runs repeat exactly.
    """
    if manifest.k < 2:
        raise AdapterError("manifest has no fold assignment")
    if not (0 <= fold < manifest.k):
        raise AdapterError(f"fold {fold} outside [0, {manifest.k})")
    dev = _resolve_device(device)
    n_epochs = config.epochs if epochs is None else epochs
    class_ids = manifest.catalog.ids()

    train_entries = sorted((e for e in manifest.entries if e.fold != fold),
                           key=lambda e: e.tile_id)
    held_entries = sorted((e for e in manifest.entries if e.fold == fold),
                          key=lambda e: e.tile_id)
    if not train_entries or not held_entries:
        raise AdapterError(f"fold {fold} leaves an empty train or held set")
    train_data = {e.tile_id: _load_pair(manifest, e, vt_dir, base_dir,
                                        replicate_channels)
                  for e in train_entries}

    torch.manual_seed(seed)
    in_channels = next(iter(train_data.values()))[0].shape[-1]
    model = build_model(config, in_channels, len(class_ids)).to(dev)
    optimiser = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    aug = AugmentationSpec(seed=seed)
    order_rng = np.random.default_rng(seed)

    t0 = time.perf_counter()
    epoch_losses = []
    model.train()
    ids = [e.tile_id for e in train_entries]
    for epoch in range(n_epochs):
        order = list(ids)
        order_rng.shuffle(order)
        losses = []
        for start in range(0, len(order), batch_size):
            batch_ids = order[start:start + batch_size]
            images, targets = [], []
            for tid in batch_ids:
                img, msk = train_data[tid]
                img, msk = augment(img, msk, aug, tid, epoch)
                images.append(np.moveaxis(img, -1, 0))
                targets.append(_to_targets(msk, class_ids))
            x = torch.from_numpy(np.stack(images)).to(dev)
            y = torch.from_numpy(np.stack(targets)).to(dev)
            optimiser.zero_grad()
            loss = tversky_loss(model(x), y, config.tversky_alpha,
                                config.tversky_beta)
            loss.backward()
            optimiser.step()
            losses.append(float(loss.detach()))
        epoch_losses.append(float(np.mean(losses)))
        log.info("epoch %d/%d loss %.4f", epoch + 1, n_epochs, epoch_losses[-1])

    os.makedirs(out_dir, exist_ok=True)
    model.eval()
    prediction_paths = []
    with torch.no_grad():
        for entry in held_entries:
            img, _ = _load_pair(manifest, entry, vt_dir, base_dir,
                                replicate_channels)
            x = torch.from_numpy(np.moveaxis(img, -1, 0)[None]).to(dev)
            probs = torch.sigmoid(model(x))[0].cpu().numpy()
            for ci, cid in enumerate(class_ids):
                path = os.path.join(out_dir, f"{entry.tile_id}_{cid}.tif")
                write_raster(DemGrid(np.clip(probs[ci], 0.0, 1.0)
                                     .astype(np.float32), gsd=manifest.gsd),
                             path)
                prediction_paths.append(path)

    metadata_path = os.path.join(out_dir, "run_metadata.json")
    with open(metadata_path, "w", encoding="utf-8") as fh:
        json.dump({
            "config": config.to_dict(),
            "vt": vt_name,
            "fold": fold,
            "seed": seed,
            "epochs": n_epochs,
            "batch_size": batch_size,
            "weight_decay": 0.0,
            "replicate_channels": replicate_channels,
            "epoch_losses": epoch_losses,
            "wall_time_s": time.perf_counter() - t0,
        }, fh, indent=2)
        fh.write("\n")
    return RunResult(epoch_losses=epoch_losses,
                     prediction_paths=prediction_paths,
                     metadata_path=metadata_path)
