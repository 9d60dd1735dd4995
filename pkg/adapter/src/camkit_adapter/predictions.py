"""Prediction CSV export, consumable verbatim by the analysis metrics tool."""

import csv
import sys
from pathlib import Path

import torch

from .capture import AdapterError
from .preprocess import PreprocessConfig, load_image

_LABELS = {"0": 0, "1": 1, "NORMAL": 0, "PNEUMONIA": 1}


def read_manifest(path):
    """Rows of (image_path, patient_id, label) from a dataset manifest."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        needed = {"image_path", "patient_id", "label"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise AdapterError(
                "manifest needs columns image_path, patient_id, label")
        for line, row in enumerate(reader, start=2):
            label = _LABELS.get(str(row["label"]).strip().upper())
            if label is None:
                raise AdapterError(f"line {line}: bad label {row['label']!r}")
            rows.append((row["image_path"], row["patient_id"], label))
    if not rows:
        raise AdapterError("manifest has no data rows")
    return rows


def positive_probability(logits) -> float:
    # single-logit heads are sigmoid; two-or-more are softmax over classes
    if logits.shape[1] == 1:
        return torch.sigmoid(logits[0, 0]).item()
    return torch.softmax(logits[0], dim=0)[1].item()


def export_predictions(model, manifest_path, out_path, *,
                       config: PreprocessConfig = PreprocessConfig()):
    """One prediction row per readable manifest image.

    Relative image paths resolve against the manifest's directory. Rows
    whose image cannot be read are reported on stderr and skipped; the
    caller decides the exit code from the returned (written, skipped)
    counts. Ids are image stems, suffixed -1, -2, ... on collision.
    """
    rows = read_manifest(manifest_path)
    model.eval()
    base = Path(manifest_path).parent
    written = []
    skipped = 0
    seen: dict = {}
    for image_path, patient_id, label in rows:
        resolved = Path(image_path)
        if not resolved.is_absolute():
            resolved = base / resolved
        try:
            tensor, _ = load_image(resolved, config)
        except (OSError, ValueError) as exc:
            print(f"camkit-export: skipping unreadable image {image_path}: {exc}",
                  file=sys.stderr)
            skipped += 1
            continue
        with torch.no_grad():
            logits = model(tensor)
        score = positive_probability(logits)
        stem = Path(image_path).stem
        count = seen.get(stem, 0)
        seen[stem] = count + 1
        ident = stem if count == 0 else f"{stem}-{count}"
        written.append((ident, patient_id, label, score))

    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "patient_id", "label", "score"])
        for ident, patient_id, label, score in written:
            writer.writerow([ident, patient_id, label, f"{score:.10g}"])
    return len(written), skipped
