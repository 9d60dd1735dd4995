"""Weakly supervised Grad-CAM localization and evaluation toolkit.

camkit consumes activations/gradients exported by any training framework (as
CAMT tensor files plus a JSON bundle manifest), computes class activation
maps for convolutional and patch-token models, renders heatmap overlays, and
evaluates binary pneumonia classifiers with imbalance-aware metrics and
patient-level data splitting.
"""

__version__ = "0.1.0"

from .focal import FocalDomainError, FocalParams, focal_grad_logit, focal_loss, focal_loss_logit
from .gradcam import (
    Cam,
    GradCamError,
    cam_cnn,
    cam_for_bundle,
    cam_vit,
    importance_weights,
    normalize_cam,
    upsample_bilinear,
)
from .metrics import (
    ConfusionCounts,
    MetricError,
    MetricsReport,
    PredictionRecord,
    best_f1,
    confusion_at_threshold,
    evaluate,
    pr_auc,
    read_predictions,
    roc_auc,
    write_predictions,
)
from .render import RenderError, RGBImage, colorize, load_image, overlay, save_png
from .splitter import (
    DatasetRecord,
    SplitAssignment,
    SplitError,
    Violation,
    Xorshift64Star,
    audit_leakage,
    audit_manifests,
    oversample_plan,
    patient_split,
    read_manifest,
    write_split_manifest,
)
from .tensorio import BundleError, CamBundle, Tensor, TensorFormatError, load_bundle, read_tensor, write_tensor

__all__ = [
    "__version__",
    "BundleError",
    "Cam",
    "CamBundle",
    "ConfusionCounts",
    "DatasetRecord",
    "FocalDomainError",
    "FocalParams",
    "GradCamError",
    "MetricError",
    "MetricsReport",
    "PredictionRecord",
    "RGBImage",
    "RenderError",
    "SplitAssignment",
    "SplitError",
    "Tensor",
    "TensorFormatError",
    "Violation",
    "Xorshift64Star",
    "audit_leakage",
    "audit_manifests",
    "best_f1",
    "cam_cnn",
    "cam_for_bundle",
    "cam_vit",
    "colorize",
    "confusion_at_threshold",
    "evaluate",
    "focal_grad_logit",
    "focal_loss",
    "focal_loss_logit",
    "importance_weights",
    "load_bundle",
    "load_image",
    "normalize_cam",
    "overlay",
    "oversample_plan",
    "patient_split",
    "pr_auc",
    "read_manifest",
    "read_predictions",
    "read_tensor",
    "roc_auc",
    "save_png",
    "upsample_bilinear",
    "write_predictions",
    "write_split_manifest",
    "write_tensor",
]
