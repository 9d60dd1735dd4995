import json

import numpy as np
import pytest

from camkit import tensorio


def make_conv_bundle(acts, grads, tmp_path=None, **meta):
    """CamBundle straight from arrays, skipping the file layer."""
    kwargs = dict(
        kind=tensorio.KIND_CONV,
        activations=tensorio.Tensor(np.asarray(acts, dtype=np.float32)),
        gradients=tensorio.Tensor(np.asarray(grads, dtype=np.float32)),
        class_index=1,
        image_path="unused.png",
        image_size=(8, 8),
    )
    kwargs.update(meta)
    return tensorio.CamBundle(**kwargs)


def make_vit_bundle(acts, grads, grid, **meta):
    kwargs = dict(
        kind=tensorio.KIND_VIT,
        activations=tensorio.Tensor(np.asarray(acts, dtype=np.float32)),
        gradients=tensorio.Tensor(np.asarray(grads, dtype=np.float32)),
        class_index=1,
        image_path="unused.png",
        image_size=(8, 8),
        patch_grid=grid,
    )
    kwargs.update(meta)
    return tensorio.CamBundle(**kwargs)


def write_bundle_files(directory, acts, grads, kind, name="bundle", **extra):
    """Write tensors + manifest JSON under directory; returns manifest path."""
    directory.mkdir(parents=True, exist_ok=True)
    a_path = directory / f"{name}_acts.camt"
    g_path = directory / f"{name}_grads.camt"
    tensorio.write_tensor(tensorio.Tensor(np.asarray(acts, dtype=np.float32)), a_path)
    tensorio.write_tensor(tensorio.Tensor(np.asarray(grads, dtype=np.float32)), g_path)
    doc = {
        "kind": kind,
        "activations": a_path.name,
        "gradients": g_path.name,
        "class_index": 1,
        "image_path": "unused.png",
        "image_size": [8, 8],
    }
    doc.update(extra)
    manifest = directory / f"{name}.json"
    manifest.write_text(json.dumps(doc), encoding="utf-8")
    return manifest


@pytest.fixture
def rng():
    return np.random.default_rng(20260817)
