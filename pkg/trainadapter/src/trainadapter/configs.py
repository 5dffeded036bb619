"""The eight model configurations: 2 architectures x 2 encoders x 2 inits.

The id numbering is a fixed convention:
    id = 1 + 4*[arch == DeepLabV3Plus] + 2*[encoder == ResNet101]
           + 1*[init == Kaiming]
so id 1 is UNet + EfficientNetB6 + ImageNet and id 8 is
DeepLabV3Plus + ResNet101 + Kaiming.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from enum import Enum


class Architecture(str, Enum):
    UNET = "UNet"
    DEEPLABV3PLUS = "DeepLabV3Plus"


class Encoder(str, Enum):
    RESNET101 = "ResNet101"
    EFFICIENTNET_B6 = "EfficientNetB6"


class Init(str, Enum):
    IMAGENET = "ImageNet"
    KAIMING = "Kaiming"


@dataclass(frozen=True)
class ModelConfig:
    model_id: int
    architecture: Architecture
    encoder: Encoder
    init: Init
    epochs: int = 50
    learning_rate: float = 0.001
    tversky_alpha: float = 0.7
    tversky_beta: float = 0.3

    def __post_init__(self):
        if not (1 <= self.model_id <= 8):
            raise ValueError(f"model_id must be in [1, 8], got {self.model_id}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["architecture"] = self.architecture.value
        d["encoder"] = self.encoder.value
        d["init"] = self.init.value
        return d


def config_id(architecture: Architecture, encoder: Encoder, init: Init) -> int:
    return (1
            + 4 * (architecture is Architecture.DEEPLABV3PLUS)
            + 2 * (encoder is Encoder.RESNET101)
            + 1 * (init is Init.KAIMING))


def enumerate_configs(**overrides) -> list[ModelConfig]:
    """All eight configurations in id order.

    Keyword overrides (epochs, learning_rate, ...) apply to every config.
    """
    configs = []
    for arch in (Architecture.UNET, Architecture.DEEPLABV3PLUS):
        for enc in (Encoder.EFFICIENTNET_B6, Encoder.RESNET101):
            for init in (Init.IMAGENET, Init.KAIMING):
                configs.append(ModelConfig(
                    model_id=config_id(arch, enc, init),
                    architecture=arch, encoder=enc, init=init,
                    **overrides))
    return sorted(configs, key=lambda c: c.model_id)
