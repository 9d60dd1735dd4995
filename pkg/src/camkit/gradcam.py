"""Gradient-weighted class activation maps for conv and patch-token bundles.

Channel (or token-feature) importance weights are the spatial mean of the
class-score gradients; the map is the ReLU of the weighted activation sum.
Accumulations run in float64 regardless of the float32 interchange format.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensorio import KIND_CONV, KIND_VIT, CamBundle


class GradCamError(ValueError):
    """Bundle of the wrong kind/rank or incompatible grid."""


@dataclass(frozen=True)
class Cam:
    """A 2-D nonnegative activation map."""

    values: np.ndarray  # float64, shape (height, width), all >= 0

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise GradCamError(f"Cam values must be 2-D, got shape {arr.shape}")
        if np.any(arr < 0):
            raise GradCamError("Cam values must be nonnegative")
        object.__setattr__(self, "values", arr)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def importance_weights(bundle: CamBundle) -> np.ndarray:
    """Per-channel importance weights: gradients averaged over space (conv)
    or over tokens (vit_tokens). Returns a float64 vector of length C."""
    grads = bundle.gradients.array.astype(np.float64)
    if bundle.kind == KIND_CONV:
        return grads.mean(axis=(1, 2))
    return grads.mean(axis=0)


def cam_cnn(bundle: CamBundle) -> Cam:
    """CAM for a conv bundle: weights from globally average-pooled gradients,
    map = ReLU(sum_k alpha_k * A_k). Pre-normalization, native (H, W) size."""
    if bundle.kind != KIND_CONV:
        raise GradCamError(f"cam_cnn needs a conv bundle, got kind {bundle.kind!r}")
    acts = bundle.activations.array.astype(np.float64)
    grads = bundle.gradients.array.astype(np.float64)
    alpha = grads.mean(axis=(1, 2))
    pre = np.tensordot(alpha, acts, axes=1)
    return Cam(np.maximum(pre, 0.0))


def cam_vit(bundle: CamBundle, grid: tuple[int, int] | None = None) -> Cam:
    """CAM for a patch-token bundle: weights from token-averaged gradients,
    per-token ReLU score laid into the (H_p, W_p) grid row-major (token 0
    top-left, advancing along the width). Pre-normalization."""
    if bundle.kind != KIND_VIT:
        raise GradCamError(f"cam_vit needs a vit_tokens bundle, got kind {bundle.kind!r}")
    if grid is None:
        grid = bundle.patch_grid
    if grid is None:
        raise GradCamError("vit_tokens bundle has no patch_grid and none was given")
    hp, wp = grid
    n = bundle.activations.shape[0]
    if hp * wp != n:
        raise GradCamError(f"grid {hp}x{wp} = {hp * wp} tokens does not match N = {n}")
    acts = bundle.activations.array.astype(np.float64)
    grads = bundle.gradients.array.astype(np.float64)
    alpha = grads.mean(axis=0)
    per_token = acts @ alpha
    return Cam(np.maximum(per_token, 0.0).reshape(hp, wp))


def cam_for_bundle(bundle: CamBundle) -> Cam:
    """Dispatch on bundle kind."""
    if bundle.kind == KIND_CONV:
        return cam_cnn(bundle)
    return cam_vit(bundle)


def normalize_cam(cam: Cam) -> Cam:
    """Min-max rescale to [0, 1]; a constant map becomes all zeros."""
    v = cam.values
    vmin = v.min()
    vmax = v.max()
    if vmax == vmin:
        return Cam(np.zeros_like(v))
    return Cam((v - vmin) / (vmax - vmin))


def upsample_bilinear(cam: Cam, target_h: int, target_w: int) -> Cam:
    """Bilinear resample with half-pixel centers and edge clamping.

    Source coordinate per axis: s = (d + 0.5) * (src / dst) - 0.5, clamped to
    [0, src - 1]. Equal source/target size reproduces the input exactly.
    """
    if target_h < 1 or target_w < 1:
        raise GradCamError(f"target size must be >= 1, got {target_h}x{target_w}")
    src = cam.values
    sh, sw = src.shape

    sy = np.clip((np.arange(target_h) + 0.5) * (sh / target_h) - 0.5, 0.0, sh - 1.0)
    sx = np.clip((np.arange(target_w) + 0.5) * (sw / target_w) - 0.5, 0.0, sw - 1.0)
    y0 = np.floor(sy).astype(np.intp)
    x0 = np.floor(sx).astype(np.intp)
    y1 = np.minimum(y0 + 1, sh - 1)
    x1 = np.minimum(x0 + 1, sw - 1)
    wy = (sy - y0)[:, None]
    wx = (sx - x0)[None, :]

    top = src[np.ix_(y0, x0)] * (1.0 - wx) + src[np.ix_(y0, x1)] * wx
    bottom = src[np.ix_(y1, x0)] * (1.0 - wx) + src[np.ix_(y1, x1)] * wx
    out = top * (1.0 - wy) + bottom * wy
    return Cam(np.maximum(out, 0.0))
