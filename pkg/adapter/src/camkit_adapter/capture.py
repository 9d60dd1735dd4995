"""Layer resolution and activation/gradient capture hooks."""

from dataclasses import dataclass

import torch
from torch import nn


class AdapterError(ValueError):
    """Bad locator, kind, or a shape-contract violation."""


@dataclass(frozen=True)
class CapturePoint:
    """Where a model gets hooked.

    conv models hook the last convolutional layer; token models hook the
    final linear layer of the last encoder MLP block. The locator is a
    dotted path into ``model.named_modules()``.
    """

    model_name: str
    layer_kind: str
    locator: str

    def __post_init__(self):
        if self.layer_kind not in ("conv", "vit_tokens"):
            raise AdapterError("layer_kind must be conv or vit_tokens")


def resolve_layer(model: nn.Module, locator: str) -> nn.Module:
    for name, module in model.named_modules():
        if name == locator:
            return module
    raise AdapterError(f"layer locator not found: {locator!r}")


def default_locator(model: nn.Module, kind: str) -> str:
    """Infers the conventional capture layer.

    conv: the last Conv2d in module order. vit_tokens: the last Linear
    living inside a module named mlp (the final linear of the last MLP
    block in every standard encoder layout). Models that deviate need an
    explicit locator.
    """
    best = None
    for name, module in model.named_modules():
        if kind == "conv" and isinstance(module, nn.Conv2d):
            best = name
        elif kind == "vit_tokens" and isinstance(module, nn.Linear):
            parents = name.split(".")[:-1]
            if any(part == "mlp" or part.startswith("mlp") for part in parents):
                best = name
    if best is None:
        raise AdapterError(
            f"no default {kind} capture layer found; pass an explicit locator")
    return best


class Capture:
    """Records one module's forward output and its gradient.

    Single-image batches only; the gradient hook fires during backward from
    the class score.
    """

    def __init__(self, module: nn.Module):
        self.activations = None
        self.gradients = None
        self._handle = module.register_forward_hook(self._on_forward)

    def _on_forward(self, module, args, output):
        if not isinstance(output, torch.Tensor):
            raise AdapterError("hooked layer must output a single tensor")
        self.activations = output.detach().clone()
        output.register_hook(self._on_grad)

    def _on_grad(self, grad):
        self.gradients = grad.detach().clone()

    def remove(self):
        self._handle.remove()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.remove()
        return False
