"""Heatmap colorization and alpha-blended overlays, written as 8-bit RGB PNG.

The jet-style colormap is a closed-form piecewise-linear ramp (not a lookup
table) so independent implementations agree bit-for-bit after quantization:

    r = clamp(1.5 - |4v - 3|, 0, 1)
    g = clamp(1.5 - |4v - 2|, 0, 1)
    b = clamp(1.5 - |4v - 1|, 0, 1)      channel byte = floor(255 * x + 0.5)
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from ._util import atomic_write_bytes
from .gradcam import Cam

DEFAULT_ALPHA = 0.4


class RenderError(ValueError):
    """Out-of-range values, bad alpha, or mismatched dimensions."""


@dataclass(frozen=True)
class RGBImage:
    pixels: np.ndarray  # uint8, shape (height, width, 3)

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise RenderError(f"RGBImage needs uint8 (H, W, 3) pixels, got {arr.dtype} {arr.shape}")
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def _quantize(x: np.ndarray) -> np.ndarray:
    # round-half-up, the same in every language
    return np.floor(x * 255.0 + 0.5).astype(np.uint8)


def colorize(cam: Cam) -> RGBImage:
    """Map a normalized CAM (values in [0, 1]) through the jet ramp."""
    v = cam.values
    if v.min() < 0.0 or v.max() > 1.0:
        raise RenderError(
            f"colorize needs values in [0, 1], got range [{v.min()}, {v.max()}];"
            " normalize the CAM first"
        )
    r = np.clip(1.5 - np.abs(4.0 * v - 3.0), 0.0, 1.0)
    g = np.clip(1.5 - np.abs(4.0 * v - 2.0), 0.0, 1.0)
    b = np.clip(1.5 - np.abs(4.0 * v - 1.0), 0.0, 1.0)
    return RGBImage(_quantize(np.stack([r, g, b], axis=-1)))


def _as_rgb_array(base) -> np.ndarray:
    """uint8 (H, W, 3) view of a grayscale or RGB base image."""
    if isinstance(base, RGBImage):
        return base.pixels
    arr = np.asarray(base)
    if arr.dtype != np.uint8:
        raise RenderError(f"base image must be uint8, got {arr.dtype}")
    if arr.ndim == 2:
        return np.repeat(arr[:, :, None], 3, axis=2)
    if arr.ndim == 3 and arr.shape[2] == 3:
        return arr
    raise RenderError(f"base image must be (H, W) grayscale or (H, W, 3) RGB, got {arr.shape}")


def overlay(base, cam: Cam, alpha: float = DEFAULT_ALPHA) -> RGBImage:
    """Per-channel blend round((1 - alpha) * base + alpha * colorize(cam)).

    The CAM must already be sized to the base image; this never resizes.
    """
    if not 0.0 <= alpha <= 1.0:
        raise RenderError(f"alpha must be in [0, 1], got {alpha}")
    base_arr = _as_rgb_array(base)
    if base_arr.shape[:2] != cam.values.shape:
        raise RenderError(
            f"overlay dimension mismatch: base {base_arr.shape[:2]} vs cam"
            f" {cam.values.shape}; upsample the CAM first"
        )
    heat = colorize(cam).pixels.astype(np.float64)
    blended = (1.0 - alpha) * base_arr.astype(np.float64) + alpha * heat
    return RGBImage(np.floor(blended + 0.5).astype(np.uint8))


def load_image(path) -> np.ndarray:
    """Grayscale or RGB PNG (or anything Pillow reads) as a uint8 array."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            return np.asarray(im.convert("L"), dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_png(image: RGBImage, destination) -> None:
    """8-bit RGB PNG, no interlacing. Atomic: temp file + rename."""
    buf = io.BytesIO()
    Image.fromarray(image.pixels, "RGB").save(buf, format="PNG")
    atomic_write_bytes(Path(destination), buf.getvalue())
