"""Bundle export: one forward/backward pass, tensors and manifest on disk.

The backward pass starts from the raw class score (pre-softmax), batch size
1, evaluation mode. For token models the hook point is the final linear of
the last MLP block, so the captured tensors are the MLP branch output
before the residual addition; hooking the encoder block output post-residual
is a defensible alternative but changes the numbers.
"""

import json
from pathlib import Path

import torch

from .camt import write_tensor
from .capture import AdapterError, Capture, default_locator, resolve_layer
from .preprocess import PreprocessConfig, load_image


def _squeeze_batch(tensor, kind):
    if kind == "conv":
        if tensor.ndim != 4 or tensor.shape[0] != 1:
            raise AdapterError(
                f"conv capture expects shape (1, C, H, W), got {tuple(tensor.shape)}")
        return tensor[0]
    if tensor.ndim != 3 or tensor.shape[0] != 1:
        raise AdapterError(
            f"vit_tokens capture expects shape (1, tokens, C), got {tuple(tensor.shape)}")
    return tensor[0]


def _infer_grid(n_tokens: int):
    root = int(round(n_tokens ** 0.5))
    if root * root != n_tokens:
        raise AdapterError(
            f"cannot infer a square patch grid from {n_tokens} tokens; pass patch_grid")
    return root, root


def export_bundle(model, image_path, *, kind, out_dir, class_index=None,
                  layer=None, model_name=None, patch_grid=None,
                  config: PreprocessConfig = PreprocessConfig()) -> Path:
    """Hooks the capture layer, runs one image through the model, and writes
    ``<stem>_acts.camt``, ``<stem>_grads.camt`` and ``<stem>.json`` into
    out_dir. Returns the manifest path.

    class_index of None explains the argmax class. For vit_tokens the class
    token row (index 0) is dropped before writing and patch_grid recorded;
    when omitted it is inferred as the square grid.
    """
    if kind not in ("conv", "vit_tokens"):
        raise AdapterError("kind must be conv or vit_tokens")
    locator = layer if layer else default_locator(model, kind)
    module = resolve_layer(model, locator)

    tensor, original_size = load_image(image_path, config)
    model.eval()
    with Capture(module) as cap:
        logits = model(tensor)
        if logits.ndim != 2 or logits.shape[0] != 1:
            raise AdapterError(
                f"model output must be (1, n_classes), got {tuple(logits.shape)}")
        if class_index is None:
            class_index = int(logits[0].argmax())
        if not 0 <= class_index < logits.shape[1]:
            raise AdapterError(
                f"class_index {class_index} out of range for {logits.shape[1]} classes")
        model.zero_grad(set_to_none=True)
        logits[0, class_index].backward()
    if cap.activations is None or cap.gradients is None:
        raise AdapterError(f"layer {locator!r} saw no forward/backward traffic")

    acts = _squeeze_batch(cap.activations, kind)
    grads = _squeeze_batch(cap.gradients, kind)
    if kind == "vit_tokens":
        if acts.shape[0] < 2:
            raise AdapterError(
                "token capture needs the class token plus at least one patch token")
        acts, grads = acts[1:], grads[1:]
        grid = tuple(patch_grid) if patch_grid else _infer_grid(acts.shape[0])
        if grid[0] * grid[1] != acts.shape[0]:
            raise AdapterError(
                f"patch_grid {grid} does not cover {acts.shape[0]} patch tokens")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(image_path).stem
    write_tensor(out / f"{stem}_acts.camt", acts.numpy())
    write_tensor(out / f"{stem}_grads.camt", grads.numpy())
    manifest = {
        "kind": kind,
        "activations": f"{stem}_acts.camt",
        "gradients": f"{stem}_grads.camt",
        "class_index": class_index,
        "image_path": str(image_path),
        "image_size": list(original_size),
        "model_name": model_name if model_name else type(model).__name__,
    }
    if kind == "vit_tokens":
        manifest["patch_grid"] = list(grid)
    manifest_path = out / f"{stem}.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def framework_cam(activations, gradients, kind, patch_grid=None):
    """The class activation map computed with framework tensors.

    Same equations as the analysis package; used to cross-check its output
    on an exported bundle. Returns a float64 numpy array, (H, W) spatial.
    """
    acts = torch.as_tensor(activations).to(torch.float64)
    grads = torch.as_tensor(gradients).to(torch.float64)
    if acts.shape != grads.shape:
        raise AdapterError("activations and gradients must share a shape")
    if kind == "conv":
        if acts.ndim != 3:
            raise AdapterError("conv expects (C, H, W) tensors")
        weights = grads.mean(dim=(1, 2))
        cam = torch.relu((weights[:, None, None] * acts).sum(dim=0))
        return cam.numpy()
    if kind != "vit_tokens":
        raise AdapterError("kind must be conv or vit_tokens")
    if acts.ndim != 2:
        raise AdapterError("vit_tokens expects (N, C) tensors")
    weights = grads.mean(dim=0)
    cam = torch.relu((acts * weights).sum(dim=1))
    hp, wp = patch_grid if patch_grid else _infer_grid(cam.shape[0])
    if hp * wp != cam.shape[0]:
        raise AdapterError(f"patch_grid {(hp, wp)} does not cover {cam.shape[0]} tokens")
    return cam.reshape(hp, wp).numpy()
