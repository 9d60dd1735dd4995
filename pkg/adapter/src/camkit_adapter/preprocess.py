"""Image loading matching the evaluation path of the training pipeline."""

from dataclasses import dataclass

import numpy as np
import torch
from PIL import Image

# Channel statistics of the standard pretrained backbones. These are
# configuration, not behaviour: override them per model family if its
# published constants differ.
IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


@dataclass(frozen=True)
class PreprocessConfig:
    size: tuple = (224, 224)  # (height, width)
    mean: tuple = IMAGENET_MEAN
    std: tuple = IMAGENET_STD


def load_image(path, config: PreprocessConfig = PreprocessConfig()):
    """Grayscale load, bilinear resize, pseudo-RGB replication, normalize.

    Radiographs are single-channel; the gray plane is duplicated three
    times so pretrained-backbone input shapes match. Returns
    (tensor, original_size) where tensor is (1, 3, H, W) float32 and
    original_size is the file's (height, width) before resizing.
    """
    with Image.open(path) as img:
        original = (img.height, img.width)
        gray = img.convert("L").resize(
            (config.size[1], config.size[0]), Image.Resampling.BILINEAR)
    plane = np.asarray(gray, dtype=np.float32) / 255.0
    stack = np.stack([plane, plane, plane])
    mean = np.asarray(config.mean, dtype=np.float32).reshape(3, 1, 1)
    std = np.asarray(config.std, dtype=np.float32).reshape(3, 1, 1)
    tensor = torch.from_numpy((stack - mean) / std)
    return tensor.unsqueeze(0), original
