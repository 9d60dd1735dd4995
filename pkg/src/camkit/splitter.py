"""Patient-level grouped splitting, leakage auditing, and minority-class
oversampling plans.

All randomness flows through Xorshift64Star, a named 64-bit generator whose
exact update and rejection-sampling rules are documented in the README so any
implementation, in any language, reproduces identical splits from the same
(records, ratios, seed).
"""

from __future__ import annotations

import csv
import io
import re
from collections import Counter, defaultdict
from dataclasses import dataclass

from ._util import atomic_write_text
from .metrics import CLASS_NAMES

SUBSETS = ("train", "val", "test")
DEFAULT_RATIOS = (0.70, 0.15, 0.15)

_MASK64 = (1 << 64) - 1
_XS_MULT = 0x2545F4914F6CDD1D
_ZERO_SEED_STATE = 0x9E3779B97F4A7C15  # seed 0 has no xorshift orbit; remap to a fixed odd constant


class SplitError(ValueError):
    """Degenerate split request or malformed manifest."""


class Xorshift64Star:
    """xorshift64* (Vigna): shifts 12/25/27, multiplier 0x2545F4914F6CDD1D."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64
        if self.state == 0:
            self.state = _ZERO_SEED_STATE

    def next_u64(self) -> int:
        x = self.state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK64
        x ^= x >> 27
        self.state = x
        return (x * _XS_MULT) & _MASK64

    def below(self, n: int) -> int:
        """Unbiased draw from [0, n) by rejection: discard raw draws at or
        above the largest multiple of n that fits into 64 bits."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates, from the last index down to 1."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class DatasetRecord:
    image_path: str
    patient_id: str
    label: int  # 0 = NORMAL, 1 = PNEUMONIA

    def __post_init__(self):
        if not self.patient_id:
            raise SplitError(f"record {self.image_path!r} has an empty patient_id")
        if self.label not in (0, 1):
            raise SplitError(f"record {self.image_path!r}: label must be 0 or 1, got {self.label!r}")


@dataclass
class SplitAssignment:
    by_patient: dict  # patient_id -> "train" | "val" | "test"
    seed: int
    ratios: tuple
    stratified: bool = False

    def subset_patients(self) -> dict:
        out = {name: set() for name in SUBSETS}
        for patient, subset in self.by_patient.items():
            out[subset].add(patient)
        return out


@dataclass(frozen=True)
class Violation:
    patient_id: str
    subsets: tuple


def _parse_label(text) -> int:
    if isinstance(text, int):
        value = text
    else:
        t = str(text).strip().upper()
        if t in ("0", "NORMAL"):
            value = 0
        elif t in ("1", "PNEUMONIA"):
            value = 1
        else:
            raise SplitError(f"unrecognized label {text!r} (expected NORMAL/PNEUMONIA or 0/1)")
    return value


def read_manifest(path) -> list[DatasetRecord]:
    """Dataset manifest CSV: image_path,patient_id,label."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"image_path", "patient_id", "label"}
        if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
            raise SplitError(f"{path}: manifest needs columns image_path,patient_id,label")
        for lineno, row in enumerate(reader, start=2):
            try:
                records.append(
                    DatasetRecord(
                        image_path=row["image_path"],
                        patient_id=row["patient_id"],
                        label=_parse_label(row["label"]),
                    )
                )
            except SplitError as exc:
                raise SplitError(f"{path}:{lineno}: {exc}") from exc
    if not records:
        raise SplitError(f"{path}: empty manifest")
    return records


def _check_ratios(ratios) -> tuple:
    if len(ratios) != len(SUBSETS):
        raise SplitError(f"need {len(SUBSETS)} ratios, got {len(ratios)}")
    if any(r <= 0.0 for r in ratios):
        raise SplitError(f"every ratio must be positive, got {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise SplitError(f"ratios must sum to 1, got {ratios} (sum {sum(ratios)})")
    return tuple(float(r) for r in ratios)


def _boundaries(n: int, ratios) -> tuple[int, int]:
    # cumulative round-half-up keeps every subset within one patient of target
    b1 = int(ratios[0] * n + 0.5)
    b2 = int((ratios[0] + ratios[1]) * n + 0.5)
    return b1, b2


def _partition(patients: list, rng: Xorshift64Star, ratios) -> dict:
    rng.shuffle(patients)
    b1, b2 = _boundaries(len(patients), ratios)
    assignment = {}
    for i, patient in enumerate(patients):
        assignment[patient] = SUBSETS[0] if i < b1 else SUBSETS[1] if i < b2 else SUBSETS[2]
    return assignment


def patient_split(records, ratios=DEFAULT_RATIOS, seed: int = 0,
                  stratified: bool = False) -> SplitAssignment:
    """Assign every patient (and with it all their images) to exactly one of
    train/val/test.

    Patient ids are sorted, shuffled by a seeded Xorshift64Star, then cut at
    the cumulative-ratio boundaries. Stratified mode groups patients by their
    image-majority label first and partitions each group separately.
    """
    ratios = _check_ratios(ratios)
    patients = sorted({r.patient_id for r in records})
    if len(patients) < len(SUBSETS):
        raise SplitError(f"need at least {len(SUBSETS)} distinct patients, got {len(patients)}")

    rng = Xorshift64Star(seed)
    if not stratified:
        assignment = _partition(patients, rng, ratios)
    else:
        votes = defaultdict(Counter)
        for r in records:
            votes[r.patient_id][r.label] += 1
        assignment = {}
        for label in (0, 1):  # fixed group order keeps the draw sequence deterministic
            group = [p for p in patients if votes[p][1] >= votes[p][0]] if label == 1 else \
                    [p for p in patients if votes[p][1] < votes[p][0]]
            if group:
                assignment.update(_partition(group, rng, ratios))
    return SplitAssignment(by_patient=assignment, seed=seed, ratios=ratios, stratified=stratified)


def assign_records(records, assignment: SplitAssignment) -> list[tuple]:
    """(record, subset) pairs in input order."""
    return [(r, assignment.by_patient[r.patient_id]) for r in records]


def audit_leakage(memberships) -> list[Violation]:
    """Exhaustive cross-subset intersection of patient ids.

    `memberships` is an iterable of (patient_id, subset) pairs - one per image
    row, duplicates fine. Returns one Violation per patient seen in more than
    one subset; empty iff leak-free.
    """
    seen = defaultdict(set)
    for patient_id, subset in memberships:
        seen[patient_id].add(subset)
    return [
        Violation(patient_id=p, subsets=tuple(sorted(subs)))
        for p, subs in sorted(seen.items())
        if len(subs) > 1
    ]


def audit_assignment(records, assignment: SplitAssignment) -> list[Violation]:
    return audit_leakage(
        (r.patient_id, assignment.by_patient[r.patient_id]) for r in records
    )


def audit_manifests(paths_by_subset: dict) -> list[Violation]:
    """Audit a pair (or more) of per-subset manifests, e.g. train vs test."""
    memberships = []
    for subset, path in paths_by_subset.items():
        for r in read_manifest(path):
            memberships.append((r.patient_id, subset))
    return audit_leakage(memberships)


def oversample_plan(train_records, seed: int = 0) -> list[int]:
    """Seeded with-replacement duplication of minority indices until both
    classes count equal, then a full shuffle. Every original index appears at
    least once; plan length is twice the majority count."""
    by_label = defaultdict(list)
    for i, r in enumerate(train_records):
        by_label[r.label].append(i)
    if not by_label[0] or not by_label[1]:
        missing = CLASS_NAMES[0] if not by_label[0] else CLASS_NAMES[1]
        raise SplitError(f"oversampling needs both classes; no {missing} records")

    rng = Xorshift64Star(seed)
    if len(by_label[0]) <= len(by_label[1]):
        minority, majority = by_label[0], by_label[1]
    else:
        minority, majority = by_label[1], by_label[0]
    plan = list(range(len(train_records)))
    for _ in range(len(majority) - len(minority)):
        plan.append(minority[rng.below(len(minority))])
    rng.shuffle(plan)
    return plan


def write_split_manifest(records, assignment: SplitAssignment, path) -> None:
    """Input manifest rows plus a subset column, in input order.

    Byte-deterministic: fixed column order, LF line endings, labels written
    as class names.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["image_path", "patient_id", "label", "subset"])
    for r, subset in assign_records(records, assignment):
        writer.writerow([r.image_path, r.patient_id, CLASS_NAMES[r.label], subset])
    atomic_write_text(path, buf.getvalue())


def write_oversampled_manifest(train_records, plan, path) -> None:
    """Materialize an oversample plan as a manifest CSV: one row per plan
    entry, in plan order (duplicates intended)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["image_path", "patient_id", "label"])
    for i in plan:
        r = train_records[i]
        writer.writerow([r.image_path, r.patient_id, CLASS_NAMES[r.label]])
    atomic_write_text(path, buf.getvalue())


def read_split_manifest(path) -> list[tuple]:
    """Split manifest CSV (with subset column) as (record, subset) pairs."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"image_path", "patient_id", "label", "subset"}
        if reader.fieldnames is None or not required.issubset(set(reader.fieldnames)):
            raise SplitError(f"{path}: split manifest needs columns image_path,patient_id,label,subset")
        for lineno, row in enumerate(reader, start=2):
            subset = row["subset"].strip()
            if subset not in SUBSETS:
                raise SplitError(f"{path}:{lineno}: unknown subset {subset!r}")
            try:
                rec = DatasetRecord(
                    image_path=row["image_path"],
                    patient_id=row["patient_id"],
                    label=_parse_label(row["label"]),
                )
            except SplitError as exc:
                raise SplitError(f"{path}:{lineno}: {exc}") from exc
            out.append((rec, subset))
    if not out:
        raise SplitError(f"{path}: empty split manifest")
    return out


DEFAULT_PATIENT_PATTERN = r"(person\d+)"


def extract_patient_id(filename: str, pattern: str = DEFAULT_PATIENT_PATTERN) -> str:
    """Patient id from a filename via a configurable pattern (default:
    personNNN tokens); first capture group wins, else the whole match.
    Filenames that do not match (NORMAL images often carry no shared person
    id) fall back to the basename without extension, making each such image
    its own patient."""
    m = re.search(pattern, filename)
    if m:
        return m.group(1) if m.groups() else m.group(0)
    stem = filename.rsplit("/", 1)[-1].rsplit("\\", 1)[-1]
    return stem.rsplit(".", 1)[0]
