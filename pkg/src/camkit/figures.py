"""Report figures: ROC and precision-recall curves rendered to PNG files
next to the JSON/CSV report outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from . import metrics


def save_metric_figures(records, report, out_dir) -> list[str]:
    """Render roc_curve.png and pr_curve.png into out_dir; returns the paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fpr, tpr = metrics.roc_curve_points(records)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    ax.plot(fpr, tpr, drawstyle="steps-post", color="#b2182b", lw=1.8,
            label=f"ROC-AUC = {report.roc_auc:.4f}")
    ax.plot([0, 1], [0, 1], ls="--", lw=0.8, color="0.6")
    ax.set_xlabel("False positive rate")
    ax.set_ylabel("True positive rate")
    ax.set_title("ROC curve")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower right")
    fig.tight_layout()
    path = out_dir / "roc_curve.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(str(path))

    recall, precision = metrics.pr_curve_points(records)
    fig, ax = plt.subplots(figsize=(5, 4.5))
    ax.plot(recall, precision, drawstyle="steps-post", color="#2166ac", lw=1.8,
            label=f"PR-AUC = {report.pr_auc:.4f}")
    ax.set_xlabel("Recall")
    ax.set_ylabel("Precision")
    ax.set_title("Precision-recall curve")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="lower left")
    fig.tight_layout()
    path = out_dir / "pr_curve.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(str(path))

    return written
