"""PyTorch export adapter for the camkit analysis toolkit.

Hooks a pretrained classifier, captures last-layer activations and
gradients, and emits CAMT bundles plus prediction CSVs. Couples to the
analysis package only through its file formats; does not import it.
"""

from .camt import CamtError, read_tensor, write_tensor
from .capture import AdapterError, Capture, CapturePoint, default_locator, resolve_layer
from .export import export_bundle, framework_cam
from .predictions import export_predictions, positive_probability
from .preprocess import IMAGENET_MEAN, IMAGENET_STD, PreprocessConfig, load_image

__version__ = "0.1.0"

__all__ = [
    "AdapterError",
    "CamtError",
    "Capture",
    "CapturePoint",
    "IMAGENET_MEAN",
    "IMAGENET_STD",
    "PreprocessConfig",
    "default_locator",
    "export_bundle",
    "export_predictions",
    "framework_cam",
    "load_image",
    "positive_probability",
    "read_tensor",
    "resolve_layer",
    "write_tensor",
]
