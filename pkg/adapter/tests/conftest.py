import numpy as np
import pytest
import torch
from PIL import Image
from torch import nn


class TinyConvNet(nn.Module):
    """Two conv blocks, global average pooling, linear head.

    Weights come from a fixed seed so every test sees the same network.
    The capture layer is conv2 (the last convolutional layer); its output
    passes through ReLU and spatial mean before the head, which gives the
    gradient a closed form the tests can check against.
    """

    def __init__(self):
        super().__init__()
        torch.manual_seed(916)
        self.conv1 = nn.Conv2d(3, 4, 3, padding=1)
        self.conv2 = nn.Conv2d(4, 6, 3, padding=1)
        self.head = nn.Linear(6, 2)

    def forward(self, x):
        x = torch.relu(self.conv1(x))
        x = torch.max_pool2d(x, 4)
        x = torch.relu(self.conv2(x))
        x = x.mean(dim=(2, 3))
        return self.head(x)


class ToyTokenModel(nn.Module):
    """Minimal token encoder: 2x2 patch embedding, class token, one MLP
    block with residual, mean pool, linear head. N = 4 patch tokens."""

    def __init__(self):
        super().__init__()
        torch.manual_seed(917)
        self.embed = nn.Conv2d(3, 8, kernel_size=112, stride=112)
        self.cls_token = nn.Parameter(torch.randn(1, 1, 8) * 0.1)
        self.mlp = nn.Sequential(nn.Linear(8, 16), nn.GELU(), nn.Linear(16, 8))
        self.head = nn.Linear(8, 2)

    def forward(self, x):
        tokens = self.embed(x).flatten(2).transpose(1, 2)  # (1, 4, 8)
        tokens = torch.cat([self.cls_token.expand(x.shape[0], -1, -1), tokens], dim=1)
        tokens = tokens + self.mlp(tokens)
        return self.head(tokens.mean(dim=1))


@pytest.fixture
def conv_net():
    return TinyConvNet()


@pytest.fixture
def token_net():
    return ToyTokenModel()


def write_gray_png(path, height=96, width=128, seed=77):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(30, 200, size=(height, width), dtype=np.uint8)
    pixels[height // 4: height // 2, width // 3: 2 * width // 3] = 240
    Image.fromarray(pixels, "L").save(path)
    return path


@pytest.fixture
def xray_png(tmp_path):
    return write_gray_png(tmp_path / "case0001.png")
