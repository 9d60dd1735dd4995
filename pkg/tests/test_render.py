"""Colormap endpoints, overlay blending arithmetic, and PNG output."""

import numpy as np
import pytest
from PIL import Image

from camkit import render
from camkit.gradcam import Cam
from camkit.render import RenderError, RGBImage


def solid_cam(value, h=2, w=2):
    return Cam(np.full((h, w), float(value)))


def test_colorize_endpoint_zero():
    img = render.colorize(solid_cam(0.0))
    assert tuple(img.pixels[0, 0]) == (0, 0, 128)


def test_colorize_endpoint_one():
    img = render.colorize(solid_cam(1.0))
    assert tuple(img.pixels[0, 0]) == (128, 0, 0)


def test_colorize_quarter():
    img = render.colorize(solid_cam(0.25))
    assert tuple(img.pixels[0, 0]) == (0, 128, 255)


def test_colorize_formula_pointwise(rng):
    # quantization is floor(255 x + 0.5), never bankers' rounding
    values = rng.uniform(0, 1, size=(5, 5))
    img = render.colorize(Cam(values))
    r = np.clip(1.5 - np.abs(4 * values - 3), 0, 1)
    g = np.clip(1.5 - np.abs(4 * values - 2), 0, 1)
    b = np.clip(1.5 - np.abs(4 * values - 1), 0, 1)
    for i in range(5):
        for j in range(5):
            expected = tuple(int(np.floor(255 * c + 0.5)) for c in (r[i, j], g[i, j], b[i, j]))
            assert tuple(img.pixels[i, j]) == expected


def test_colorize_rejects_out_of_range():
    with pytest.raises(RenderError, match="\\[0, 1\\]"):
        render.colorize(solid_cam(1.5))


def test_overlay_alpha_zero_identity(rng):
    base = rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8)
    out = render.overlay(base, Cam(rng.uniform(0, 1, size=(4, 4))), alpha=0.0)
    assert np.array_equal(out.pixels, base)


def test_overlay_alpha_one_is_colorize(rng):
    base = rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8)
    cam = Cam(rng.uniform(0, 1, size=(4, 4)))
    out = render.overlay(base, cam, alpha=1.0)
    assert np.array_equal(out.pixels, render.colorize(cam).pixels)


def test_overlay_blend_worked_example():
    # alpha 0.4, gray base 100, cam value 1 -> (111, 60, 60)
    base = np.full((2, 2), 100, dtype=np.uint8)
    out = render.overlay(base, solid_cam(1.0), alpha=0.4)
    assert tuple(out.pixels[0, 0]) == (111, 60, 60)


def test_overlay_grayscale_broadcast(rng):
    gray = rng.integers(0, 256, size=(3, 3), dtype=np.uint8)
    cam = Cam(rng.uniform(0, 1, size=(3, 3)))
    out_gray = render.overlay(gray, cam, alpha=0.3)
    out_rgb = render.overlay(np.repeat(gray[:, :, None], 3, axis=2), cam, alpha=0.3)
    assert np.array_equal(out_gray.pixels, out_rgb.pixels)


def test_overlay_monotone_in_alpha():
    base = np.zeros((1, 1, 3), dtype=np.uint8)
    cam = solid_cam(1.0, 1, 1)  # heat color (128, 0, 0)
    reds = [render.overlay(base, cam, alpha=a).pixels[0, 0, 0] for a in (0.0, 0.25, 0.5, 0.75, 1.0)]
    assert reds == sorted(reds)
    assert reds[0] == 0 and reds[-1] == 128


def test_overlay_dimension_mismatch():
    base = np.zeros((4, 4, 3), dtype=np.uint8)
    with pytest.raises(RenderError, match="mismatch"):
        render.overlay(base, solid_cam(0.5, 2, 2), alpha=0.4)


def test_overlay_alpha_range():
    base = np.zeros((2, 2, 3), dtype=np.uint8)
    with pytest.raises(RenderError, match="alpha"):
        render.overlay(base, solid_cam(0.5), alpha=1.2)
    with pytest.raises(RenderError, match="alpha"):
        render.overlay(base, solid_cam(0.5), alpha=-0.1)


def test_overlay_rejects_non_uint8_base():
    base = np.zeros((2, 2, 3), dtype=np.float32)
    with pytest.raises(RenderError, match="uint8"):
        render.overlay(base, solid_cam(0.5), alpha=0.4)


def test_rgbimage_validation():
    with pytest.raises(RenderError):
        RGBImage(np.zeros((2, 2), dtype=np.uint8))
    with pytest.raises(RenderError):
        RGBImage(np.zeros((2, 2, 4), dtype=np.uint8))
    img = RGBImage(np.zeros((3, 5, 3), dtype=np.uint8))
    assert img.height == 3 and img.width == 5


def test_save_and_load_png_round_trip(tmp_path, rng):
    pixels = rng.integers(0, 256, size=(6, 9, 3), dtype=np.uint8)
    path = tmp_path / "out.png"
    render.save_png(RGBImage(pixels), path)
    with Image.open(path) as im:
        assert im.mode == "RGB"
        back = np.asarray(im)
    assert np.array_equal(back, pixels)
    # and through our own loader
    assert np.array_equal(render.load_image(path), pixels)


def test_load_image_grayscale(tmp_path, rng):
    gray = rng.integers(0, 256, size=(5, 4), dtype=np.uint8)
    path = tmp_path / "g.png"
    Image.fromarray(gray, "L").save(path)
    loaded = render.load_image(path)
    assert loaded.ndim == 2
    assert np.array_equal(loaded, gray)
