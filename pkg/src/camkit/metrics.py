"""Imbalance-aware evaluation of binary prediction files.

Conventions, fixed for determinism:
  - decision rule: predict positive iff score >= threshold
  - any 0/0 metric ratio is defined as 0 and flagged in the report
  - ROC-AUC is the tie-corrected rank statistic (0.5 credit per tied pair)
  - PR-AUC is step-wise average precision over descending unique scores
  - best F1 is the exact optimum over all observed scores, smallest
    qualifying threshold on ties
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ._util import atomic_write_text

LABEL_NORMAL = 0
LABEL_PNEUMONIA = 1
CLASS_NAMES = {LABEL_NORMAL: "NORMAL", LABEL_PNEUMONIA: "PNEUMONIA"}

PREDICTIONS_HEADER = ["id", "patient_id", "label", "score"]


class MetricError(ValueError):
    """Empty/degenerate input for which the requested metric is undefined."""


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    patient_id: str
    label: int   # 0 = NORMAL, 1 = PNEUMONIA
    score: float  # positive-class probability

    def __post_init__(self):
        if self.label not in (0, 1):
            raise MetricError(f"record {self.id!r}: label must be 0 or 1, got {self.label!r}")
        if not 0.0 <= self.score <= 1.0:
            raise MetricError(f"record {self.id!r}: score must be in [0, 1], got {self.score!r}")


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass
class MetricsReport:
    accuracy: float
    roc_auc: float
    pr_auc: float
    best_f1: float
    best_threshold: float
    threshold: float
    counts: ConfusionCounts
    summary: dict
    per_class: dict
    degenerate: list = field(default_factory=list)


def read_predictions(path) -> list[PredictionRecord]:
    """Parse a predictions CSV with header id,patient_id,label,score."""
    records = []
    seen = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != PREDICTIONS_HEADER:
            raise MetricError(
                f"{path}: expected header {','.join(PREDICTIONS_HEADER)},"
                f" got {reader.fieldnames}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                rec = PredictionRecord(
                    id=row["id"],
                    patient_id=row["patient_id"],
                    label=int(row["label"]),
                    score=float(row["score"]),
                )
            except (TypeError, KeyError, ValueError) as exc:
                raise MetricError(f"{path}:{lineno}: bad prediction row: {exc}") from exc
            if rec.id in seen:
                raise MetricError(f"{path}:{lineno}: duplicate id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    if not records:
        raise MetricError(f"{path}: no prediction records")
    return records


def write_predictions(records, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PREDICTIONS_HEADER)
    for r in records:
        writer.writerow([r.id, r.patient_id, r.label, repr(r.score)])
    atomic_write_text(path, buf.getvalue())


def _labels_scores(records):
    labels = np.array([r.label for r in records], dtype=np.int64)
    scores = np.array([r.score for r in records], dtype=np.float64)
    return labels, scores


def confusion_at_threshold(records, threshold: float) -> ConfusionCounts:
    """Tally TP/FP/FN/TN with the score >= threshold decision rule."""
    if not records:
        raise MetricError("cannot compute a confusion matrix over zero records")
    labels, scores = _labels_scores(records)
    pred = scores >= threshold
    pos = labels == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
        tn=int(np.sum(~pred & ~pos)),
    )


def _ratio(num: int, den: int) -> float:
    # 0/0 convention: metrics with an empty denominator are 0, never NaN
    return num / den if den else 0.0


def summary_from_counts(c: ConfusionCounts) -> dict:
    """Accuracy, precision, recall, specificity, F1 from raw counts."""
    if c.total < 1:
        raise MetricError("confusion counts are all zero")
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    f1 = _ratio2(precision, recall)
    return {
        "accuracy": (c.tp + c.tn) / c.total,
        "precision": precision,
        "recall": recall,
        "specificity": _ratio(c.tn, c.tn + c.fp),
        "f1": f1,
    }


def _ratio2(precision: float, recall: float) -> float:
    s = precision + recall
    return 2.0 * precision * recall / s if s else 0.0


def roc_auc(records) -> float:
    """Probability that a random positive outscores a random negative, ties
    credited 0.5; computed via average ranks in O(n log n)."""
    labels, scores = _labels_scores(records)
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC-AUC is undefined without both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(sorted_scores):
        j = i
        while j + 1 < len(sorted_scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0  # average 1-based rank of the tie group
        i = j + 1
    pos_rank_sum = float(np.sum(ranks[labels == 1]))
    return (pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _descending_groups(labels, scores):
    """Unique scores in descending order with cumulative tp/fp after each
    whole tie group is admitted."""
    order = np.argsort(-scores, kind="mergesort")
    s = scores[order]
    l = labels[order]
    boundaries = np.nonzero(np.diff(s))[0]
    ends = np.append(boundaries, len(s) - 1)
    cum_tp = np.cumsum(l == 1)
    cum_fp = np.cumsum(l == 0)
    return s[ends], cum_tp[ends], cum_fp[ends]


def pr_auc(records) -> float:
    """Step-wise average precision: AP = sum (R_i - R_{i-1}) * P_i over the
    descending unique-score sweep, tied scores grouped.

    Accumulated sequentially in threshold order (not a pairwise reduction) so
    the result is bit-identical to a scalar reference sweep.
    """
    labels, scores = _labels_scores(records)
    n_pos = int(np.sum(labels == 1))
    if n_pos == 0:
        raise MetricError("PR-AUC is undefined without a positive record")
    _, cum_tp, cum_fp = _descending_groups(labels, scores)
    ap = 0.0
    prev = 0.0
    for k in range(len(cum_tp)):
        tp = int(cum_tp[k])
        precision = tp / (tp + int(cum_fp[k]))
        recall = tp / n_pos
        ap += (recall - prev) * precision
        prev = recall
    return ap


def best_f1(records) -> dict:
    """Max F1 over every candidate threshold (all unique scores plus a
    sentinel above the maximum); smallest qualifying threshold on ties."""
    labels, scores = _labels_scores(records)
    n_pos = int(np.sum(labels == 1))
    if n_pos == 0:
        raise MetricError("best F1 is undefined without a positive record")
    uniq, cum_tp, cum_fp = _descending_groups(labels, scores)
    # candidate thresholds ascending, sentinel (predicts nothing, F1 = 0) last,
    # so strict improvement keeps the smallest threshold on ties
    candidates = [(float(uniq[k]), int(cum_tp[k]), int(cum_fp[k])) for k in range(len(uniq) - 1, -1, -1)]
    candidates.append((float(uniq[0]) + 1.0, 0, 0))
    best = {"f1": -1.0, "threshold": 0.0}
    for t, tp, fp in candidates:
        precision = _ratio(tp, tp + fp)
        recall = tp / n_pos
        f1 = _ratio2(precision, recall)
        if f1 > best["f1"]:
            best = {"f1": f1, "threshold": t}
    return best


def per_class_report(records, threshold: float) -> dict:
    """Two-row per-class table: the PNEUMONIA row scores label 1 as the
    positive class, the NORMAL row relabels class 0 as positive."""
    c = confusion_at_threshold(records, threshold)
    pneumonia = {
        "precision": _ratio(c.tp, c.tp + c.fp),
        "recall": _ratio(c.tp, c.tp + c.fn),
        "specificity": _ratio(c.tn, c.tn + c.fp),
    }
    # swap the roles of the classes: tn becomes tp, fn becomes fp, ...
    normal = {
        "precision": _ratio(c.tn, c.tn + c.fn),
        "recall": _ratio(c.tn, c.tn + c.fp),
        "specificity": _ratio(c.tp, c.tp + c.fn),
    }
    return {"NORMAL": normal, "PNEUMONIA": pneumonia}


def _degenerate_flags(c: ConfusionCounts) -> list:
    flags = []
    if c.tp + c.fp == 0:
        flags.append("precision[PNEUMONIA]")
    if c.tp + c.fn == 0:
        flags.append("recall[PNEUMONIA]")
        flags.append("specificity[NORMAL]")
    if c.tn + c.fn == 0:
        flags.append("precision[NORMAL]")
    if c.tn + c.fp == 0:
        flags.append("recall[NORMAL]")
        flags.append("specificity[PNEUMONIA]")
    return flags


def evaluate(records, threshold: float = 0.5) -> MetricsReport:
    """Full report: threshold metrics plus the threshold-free areas."""
    counts = confusion_at_threshold(records, threshold)
    summary = summary_from_counts(counts)
    best = best_f1(records)
    return MetricsReport(
        accuracy=summary["accuracy"],
        roc_auc=roc_auc(records),
        pr_auc=pr_auc(records),
        best_f1=best["f1"],
        best_threshold=best["threshold"],
        threshold=threshold,
        counts=counts,
        summary=summary,
        per_class=per_class_report(records, threshold),
        degenerate=_degenerate_flags(counts),
    )


def report_to_dict(report: MetricsReport) -> dict:
    return {
        "threshold": report.threshold,
        "accuracy": report.accuracy,
        "roc_auc": report.roc_auc,
        "pr_auc": report.pr_auc,
        "best_f1": report.best_f1,
        "best_threshold": report.best_threshold,
        "confusion": {
            "tp": report.counts.tp,
            "fp": report.counts.fp,
            "fn": report.counts.fn,
            "tn": report.counts.tn,
        },
        "summary": report.summary,
        "per_class": report.per_class,
        "degenerate_metrics": report.degenerate,
    }


def report_to_json(report: MetricsReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def format_report_tables(report: MetricsReport, model_name: str = "model") -> str:
    """Aligned text tables: one overall row (accuracy and the three areas),
    then the two per-class rows of precision/recall/specificity."""
    lines = []
    head = f"{'Model':<16}{'Accuracy':>10}{'ROC-AUC':>10}{'PR-AUC':>10}{'Best F1':>10}{'Best t':>10}"
    lines.append(head)
    lines.append("-" * len(head))
    lines.append(
        f"{model_name:<16}{report.accuracy:>10.4f}{report.roc_auc:>10.4f}"
        f"{report.pr_auc:>10.4f}{report.best_f1:>10.4f}{report.best_threshold:>10.4f}"
    )
    lines.append("")
    head2 = f"{'Class':<16}{'Precision':>10}{'Recall':>10}{'Specificity':>12}"
    lines.append(head2)
    lines.append("-" * len(head2))
    for name in ("NORMAL", "PNEUMONIA"):
        row = report.per_class[name]
        lines.append(
            f"{name:<16}{row['precision']:>10.4f}{row['recall']:>10.4f}"
            f"{row['specificity']:>12.4f}"
        )
    if report.degenerate:
        lines.append("")
        lines.append("0/0 metrics reported as 0: " + ", ".join(report.degenerate))
    return "\n".join(lines) + "\n"


def roc_curve_points(records):
    """(fpr, tpr) step points for plotting, descending-threshold sweep
    starting at (0, 0)."""
    labels, scores = _labels_scores(records)
    n_pos = int(np.sum(labels == 1))
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC curve is undefined without both classes present")
    _, cum_tp, cum_fp = _descending_groups(labels, scores)
    fpr = np.concatenate([[0.0], cum_fp / n_neg])
    tpr = np.concatenate([[0.0], cum_tp / n_pos])
    return fpr, tpr


def pr_curve_points(records):
    """(recall, precision) step points for plotting, starting at recall 0
    with the first group's precision."""
    labels, scores = _labels_scores(records)
    n_pos = int(np.sum(labels == 1))
    if n_pos == 0:
        raise MetricError("PR curve is undefined without a positive record")
    _, cum_tp, cum_fp = _descending_groups(labels, scores)
    precision = cum_tp / (cum_tp + cum_fp)
    recall = cum_tp / n_pos
    return (
        np.concatenate([[0.0], recall]),
        np.concatenate([[precision[0]], precision]),
    )
