"""UNet and DeepLabV3+ segmentation heads over torchvision encoders.

Encoders expose one feature map per stride (2, 4, 8, 16, 32), discovered
dynamically by probing the backbone with a dummy input, so the same
decoder code serves both ResNet-101 and EfficientNet-B6.
"""

from __future__ import annotations

import logging
import math

import torch
import torchvision
from torch import nn
from torch.nn import functional as F

from .configs import Architecture, Encoder, Init, ModelConfig

log = logging.getLogger(__name__)

_STRIDES = (2, 4, 8, 16, 32)


def _load_backbone(encoder: Encoder, init: Init) -> nn.Module:
    pretrained = init is Init.IMAGENET
    ctor = (torchvision.models.resnet101 if encoder is Encoder.RESNET101
            else torchvision.models.efficientnet_b6)
    if pretrained:
        try:
            return ctor(weights="DEFAULT")
        except Exception as exc:  # no weight cache / no network
            log.warning("pretrained weights unavailable (%s); "
                        "falling back to random initialisation", exc)
    return ctor(weights=None)


class _ResNetStages(nn.Module):
    def __init__(self, net):
        super().__init__()
        self.stem = nn.Sequential(net.conv1, net.bn1, net.relu)
        self.stages = nn.ModuleList([
            nn.Sequential(net.maxpool, net.layer1),
            net.layer2, net.layer3, net.layer4,
        ])

    def forward(self, x):
        feats = [self.stem(x)]
        for stage in self.stages:
            feats.append(stage(feats[-1]))
        return feats  # strides 2, 4, 8, 16, 32


class _EfficientNetStages(nn.Module):
    """Groups the sequential feature blocks by output stride."""

    def __init__(self, net):
        super().__init__()
        blocks = list(net.features.children())
        # probe block-by-block to find where the resolution halves
        groups, cur = [], []
        size = 64
        with torch.no_grad():
            x = torch.zeros(1, 3, size, size)
            prev = size
            for block in blocks:
                x = block(x)
                if x.shape[-1] < prev and cur:
                    groups.append(cur)
                    cur = []
                prev = x.shape[-1]
                cur.append(block)
            if cur:
                groups.append(cur)
        if len(groups) != len(_STRIDES):
            raise RuntimeError(f"expected {len(_STRIDES)} stride groups, "
                               f"found {len(groups)}")
        self.stages = nn.ModuleList(nn.Sequential(*g) for g in groups)

    def forward(self, x):
        feats = []
        for stage in self.stages:
            x = stage(x)
            feats.append(x)
        return feats


def _make_encoder(encoder: Encoder, init: Init, in_channels: int):
    net = _load_backbone(encoder, init)
    stages = (_ResNetStages(net) if encoder is Encoder.RESNET101
              else _EfficientNetStages(net))
    if in_channels != 3:
        _patch_first_conv(stages, in_channels)
    with torch.no_grad():
        feats = stages(torch.zeros(1, in_channels, 64, 64))
    channels = [f.shape[1] for f in feats]
    return stages, channels


def _patch_first_conv(module: nn.Module, in_channels: int) -> None:
    """Rebuild the first Conv2d for a different channel count.

    Pretrained RGB kernels are averaged over the input dimension and
    repeated, the standard adaptation for non-RGB inputs.
    """
    for name, child in module.named_modules():
        if isinstance(child, nn.Conv2d):
            new = nn.Conv2d(in_channels, child.out_channels,
                            child.kernel_size, child.stride, child.padding,
                            bias=child.bias is not None)
            with torch.no_grad():
                mean = child.weight.mean(dim=1, keepdim=True)
                new.weight.copy_(mean.repeat(1, in_channels, 1, 1))
                if child.bias is not None:
                    new.bias.copy_(child.bias)
            parent = module
            *path, leaf = name.split(".")
            for p in path:
                parent = getattr(parent, p)
            setattr(parent, leaf, new)
            return
    raise RuntimeError("no Conv2d found to patch")


def _conv_block(cin, cout):
    return nn.Sequential(
        nn.Conv2d(cin, cout, 3, padding=1, bias=False),
        nn.BatchNorm2d(cout), nn.ReLU(inplace=True),
        nn.Conv2d(cout, cout, 3, padding=1, bias=False),
        nn.BatchNorm2d(cout), nn.ReLU(inplace=True),
    )


class UNet(nn.Module):
    DECODER_CHANNELS = (256, 128, 64, 32)

    def __init__(self, encoder, enc_channels, n_classes):
        super().__init__()
        self.encoder = encoder
        skips = enc_channels[:-1][::-1]  # strides 16, 8, 4, 2
        cin = enc_channels[-1]
        self.blocks = nn.ModuleList()
        for skip, cout in zip(skips, self.DECODER_CHANNELS):
            self.blocks.append(_conv_block(cin + skip, cout))
            cin = cout
        self.head = nn.Conv2d(cin, n_classes, 1)

    def forward(self, x):
        size = x.shape[-2:]
        feats = self.encoder(x)
        y = feats[-1]
        for block, skip in zip(self.blocks, feats[:-1][::-1]):
            y = F.interpolate(y, size=skip.shape[-2:], mode="bilinear",
                              align_corners=False)
            y = block(torch.cat([y, skip], dim=1))
        y = self.head(y)
        return F.interpolate(y, size=size, mode="bilinear", align_corners=False)


class _ASPP(nn.Module):
    def __init__(self, cin, cout, rates=(1, 2, 4)):
        super().__init__()
        self.branches = nn.ModuleList()
        for r in rates:
            self.branches.append(nn.Sequential(
                nn.Conv2d(cin, cout, 3 if r > 1 else 1,
                          padding=r if r > 1 else 0, dilation=r, bias=False),
                nn.BatchNorm2d(cout), nn.ReLU(inplace=True)))
        self.pool = nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Conv2d(cin, cout, 1, bias=False), nn.ReLU(inplace=True))
        self.project = nn.Sequential(
            nn.Conv2d(cout * (len(rates) + 1), cout, 1, bias=False),
            nn.BatchNorm2d(cout), nn.ReLU(inplace=True))

    def forward(self, x):
        outs = [b(x) for b in self.branches]
        pooled = F.interpolate(self.pool(x), size=x.shape[-2:],
                               mode="bilinear", align_corners=False)
        return self.project(torch.cat(outs + [pooled], dim=1))


class DeepLabV3Plus(nn.Module):
    def __init__(self, encoder, enc_channels, n_classes):
        super().__init__()
        self.encoder = encoder
        self.aspp = _ASPP(enc_channels[-1], 256)
        self.low_project = nn.Sequential(
            nn.Conv2d(enc_channels[1], 48, 1, bias=False),
            nn.BatchNorm2d(48), nn.ReLU(inplace=True))
        self.fuse = _conv_block(256 + 48, 256)
        self.head = nn.Conv2d(256, n_classes, 1)

    def forward(self, x):
        size = x.shape[-2:]
        feats = self.encoder(x)
        low = self.low_project(feats[1])  # stride 4
        y = self.aspp(feats[-1])
        y = F.interpolate(y, size=low.shape[-2:], mode="bilinear",
                          align_corners=False)
        y = self.head(self.fuse(torch.cat([y, low], dim=1)))
        return F.interpolate(y, size=size, mode="bilinear", align_corners=False)


def _kaiming_reset(model: nn.Module) -> None:
    for m in model.modules():
        if isinstance(m, nn.Conv2d):
            nn.init.kaiming_normal_(m.weight, mode="fan_out",
                                    nonlinearity="relu")
            if m.bias is not None:
                nn.init.zeros_(m.bias)
        elif isinstance(m, (nn.BatchNorm2d, nn.GroupNorm)):
            nn.init.ones_(m.weight)
            nn.init.zeros_(m.bias)
        elif isinstance(m, nn.Linear):
            bound = 1.0 / math.sqrt(m.weight.shape[1])
            nn.init.uniform_(m.weight, -bound, bound)
            if m.bias is not None:
                nn.init.zeros_(m.bias)


def build_model(config: ModelConfig, in_channels: int, n_classes: int) -> nn.Module:
    """Segmentation network emitting per-class logits at input resolution."""
    encoder, channels = _make_encoder(config.encoder, config.init, in_channels)
    cls = UNet if config.architecture is Architecture.UNET else DeepLabV3Plus
    model = cls(encoder, channels, n_classes)
    if config.init is Init.KAIMING:
        _kaiming_reset(model)
    return model
