"""Bit-exact tensor interchange (CAMT files) and explanation bundle manifests.

CAMT layout, all header integers little-endian:

    offset  size        field
    0       4           magic bytes b"CAMT"
    4       2           format version, u16 (currently 1)
    6       1           dtype code, u8 (0 = float32; the only supported code)
    7       1           rank, u8 (>= 1)
    8       8 * rank    shape extents, u64 each (every extent >= 1)
    ...     4 * n       payload: n = prod(shape) float32 values, C-order

Non-finite payload values are rejected on read and write, so everything
downstream may assume finite inputs.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import atomic_write_bytes

MAGIC = b"CAMT"
FORMAT_VERSION = 1
DTYPE_F32 = 0

KIND_CONV = "conv"
KIND_VIT = "vit_tokens"
BUNDLE_KINDS = (KIND_CONV, KIND_VIT)

_HEADER = struct.Struct("<4sHBB")


class TensorFormatError(ValueError):
    """Malformed CAMT file or tensor violating format invariants."""


class BundleError(ValueError):
    """Bundle manifest missing fields or violating cross-field invariants."""


class Tensor:
    """An n-dimensional float32 array with validated shape and finite values."""

    __slots__ = ("array",)

    def __init__(self, array):
        arr = np.asarray(array, dtype=np.float32)
        if arr.ndim == 0:  # before ascontiguousarray, which promotes 0-d to (1,)
            raise TensorFormatError("tensor shape must be non-empty (rank >= 1)")
        arr = np.ascontiguousarray(arr)
        if any(extent < 1 for extent in arr.shape):
            raise TensorFormatError(f"every shape extent must be >= 1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise TensorFormatError("tensor payload contains NaN or Inf")
        arr.setflags(write=False)
        self.array = arr

    @property
    def shape(self) -> tuple[int, ...]:
        return self.array.shape

    @property
    def rank(self) -> int:
        return self.array.ndim

    def tobytes(self) -> bytes:
        return self.array.tobytes(order="C")

    def bitwise_equal(self, other: "Tensor") -> bool:
        return self.shape == other.shape and self.tobytes() == other.tobytes()

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape})"


def write_tensor(t: Tensor, destination) -> None:
    """Serialize a Tensor to a CAMT file. Atomic: no partial file on error."""
    if not isinstance(t, Tensor):
        t = Tensor(t)
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, DTYPE_F32, t.rank)
    shape = struct.pack(f"<{t.rank}Q", *t.shape)
    payload = t.array.astype("<f4", copy=False).tobytes(order="C")
    atomic_write_bytes(destination, header + shape + payload)


def read_tensor(source) -> Tensor:
    """Read and fully validate a CAMT file."""
    with open(source, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise TensorFormatError(f"{source}: truncated header ({len(blob)} bytes)")
    magic, version, dtype, rank = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise TensorFormatError(f"{source}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise TensorFormatError(f"{source}: unsupported format version {version}")
    if dtype != DTYPE_F32:
        raise TensorFormatError(f"{source}: unsupported dtype code {dtype}")
    if rank < 1:
        raise TensorFormatError(f"{source}: rank must be >= 1, got {rank}")
    shape_end = _HEADER.size + 8 * rank
    if len(blob) < shape_end:
        raise TensorFormatError(f"{source}: truncated shape header")
    shape = struct.unpack(f"<{rank}Q", blob[_HEADER.size:shape_end])
    if any(extent < 1 for extent in shape):
        raise TensorFormatError(f"{source}: every extent must be >= 1, got {shape}")
    count = math.prod(shape)
    expected = count * 4
    actual = len(blob) - shape_end
    if actual != expected:
        raise TensorFormatError(
            f"{source}: payload length mismatch (header declares {count} elements"
            f" = {expected} bytes, file holds {actual})"
        )
    data = np.frombuffer(blob, dtype="<f4", count=count, offset=shape_end)
    if not np.all(np.isfinite(data)):
        raise TensorFormatError(f"{source}: payload contains NaN or Inf")
    return Tensor(data.reshape(shape))


@dataclass(frozen=True)
class CamBundle:
    """One explanation request: activations + gradients + target metadata."""

    kind: str
    activations: Tensor
    gradients: Tensor
    class_index: int
    image_path: str
    image_size: tuple[int, int]
    patch_grid: tuple[int, int] | None = None
    model_name: str = ""

    def __post_init__(self):
        if self.kind not in BUNDLE_KINDS:
            raise BundleError(f"unknown bundle kind {self.kind!r}, expected one of {BUNDLE_KINDS}")
        if self.activations.shape != self.gradients.shape:
            raise BundleError(
                f"activations shape {self.activations.shape} != gradients shape"
                f" {self.gradients.shape}"
            )
        if self.kind == KIND_CONV and self.activations.rank != 3:
            raise BundleError(
                f"conv bundles need rank-3 (C,H,W) tensors, got rank {self.activations.rank}"
            )
        if self.kind == KIND_VIT:
            if self.activations.rank != 2:
                raise BundleError(
                    f"vit_tokens bundles need rank-2 (N,C) tensors, got rank"
                    f" {self.activations.rank}"
                )
            if self.patch_grid is not None:
                hp, wp = self.patch_grid
                n = self.activations.shape[0]
                if hp * wp != n:
                    raise BundleError(
                        f"patch_grid {hp}x{wp} = {hp * wp} tokens does not match N = {n}"
                    )


_REQUIRED_MANIFEST_FIELDS = (
    "kind", "activations", "gradients", "class_index", "image_path", "image_size",
)


def load_bundle(manifest) -> CamBundle:
    """Load a bundle manifest (UTF-8 JSON) and its tensors, fully validated.

    Tensor paths in the manifest are resolved relative to the manifest file.
    """
    manifest = Path(manifest)
    try:
        doc = json.loads(manifest.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise BundleError(f"{manifest}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise BundleError(f"{manifest}: manifest must be a JSON object")
    missing = [f for f in _REQUIRED_MANIFEST_FIELDS if f not in doc]
    if missing:
        raise BundleError(f"{manifest}: missing manifest fields {missing}")

    base = manifest.parent
    activations = read_tensor(base / doc["activations"])
    gradients = read_tensor(base / doc["gradients"])

    image_size = doc["image_size"]
    if not (isinstance(image_size, (list, tuple)) and len(image_size) == 2):
        raise BundleError(f"{manifest}: image_size must be [height, width]")
    patch_grid = doc.get("patch_grid")
    if patch_grid is not None:
        if not (isinstance(patch_grid, (list, tuple)) and len(patch_grid) == 2):
            raise BundleError(f"{manifest}: patch_grid must be [hp, wp]")
        patch_grid = (int(patch_grid[0]), int(patch_grid[1]))

    return CamBundle(
        kind=doc["kind"],
        activations=activations,
        gradients=gradients,
        class_index=int(doc["class_index"]),
        image_path=str(doc["image_path"]),
        image_size=(int(image_size[0]), int(image_size[1])),
        patch_grid=patch_grid,
        model_name=str(doc.get("model_name", "")),
    )
