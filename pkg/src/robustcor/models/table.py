"""Per-instance prediction tables and their CSV form.

CSV layout: header ``instance_id,true_label,p_0,...,p_{K-1}``, one row per
instance, UTF-8, ``.`` as decimal separator.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Hashable, Sequence

import numpy as np

from ..errors import InvalidInputError, ValidationError
from ..metrics import SUM_TOL, ClassDistribution, check_prob_matrix, top_two_many


@dataclass(frozen=True)
class PredictionTable:
    """Class distributions from one model on one data slice, aligned by instance id."""

    model_id: str
    ids: tuple
    labels: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        ids = tuple(self.ids)
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 2 or (probs.shape[0] > 0 and probs.shape[1] < 2):
            raise InvalidInputError("probs must be an n x K matrix with K >= 2")
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        if len(ids) != probs.shape[0] or len(labels) != probs.shape[0]:
            raise InvalidInputError("ids, labels and probs must have the same length")
        if len(set(ids)) != len(ids):
            raise InvalidInputError("instance ids must be unique")
        if labels.size and (labels.min() < 0 or labels.max() >= probs.shape[1]):
            raise InvalidInputError("true labels must be class indices below K")
        check_prob_matrix(probs)
        probs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probs", probs)

    @property
    def class_count(self) -> int:
        return self.probs.shape[1]

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def rows(self):
        for i, label, p in zip(self.ids, self.labels, self.probs):
            yield i, int(label), ClassDistribution(tuple(p))

    def predicted(self) -> np.ndarray:
        return top_two_many(self.probs)[0]

    def correct(self) -> np.ndarray:
        return self.predicted() == self.labels

    def accuracy(self) -> float:
        if len(self) == 0:
            raise InvalidInputError("accuracy of an empty table is undefined")
        return float(self.correct().mean())

    def with_labels(self, labels) -> "PredictionTable":
        return PredictionTable(self.model_id, self.ids, labels, self.probs)


def check_aligned(a: PredictionTable, b: PredictionTable) -> None:
    if a.ids != b.ids:
        raise InvalidInputError(f"tables {a.model_id!r} and {b.model_id!r} are not aligned on instance ids")
    if a.class_count != b.class_count:
        raise InvalidInputError("tables disagree on the number of classes")
    if not np.array_equal(a.labels, b.labels):
        raise InvalidInputError("tables disagree on true labels")


def write_predictions(table: PredictionTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_id", "true_label"] + [f"p_{k}" for k in range(table.class_count)])
        for i, label, p in zip(table.ids, table.labels, table.probs):
            w.writerow([i, int(label)] + [repr(float(v)) for v in p])


def ingest_predictions(path, model_id: str | None = None) -> PredictionTable:
    """Read and validate a prediction CSV, reporting every bad row by line number."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    k = len(header) - 2
    expected = ["instance_id", "true_label"] + [f"p_{j}" for j in range(k)]
    if k < 2 or header != expected:
        raise ValidationError(
            f"{path}: header must be instance_id,true_label,p_0,...,p_(K-1) with K >= 2; got {','.join(header)}"
        )
    problems = []
    ids, labels, probs = [], [], []
    seen: dict[Hashable, int] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            problems.append(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            continue
        iid = row[0].strip()
        if iid in seen:
            problems.append(f"line {lineno}: duplicate instance_id {iid!r} (first on line {seen[iid]})")
            continue
        try:
            label = int(row[1])
            p = [float(v) for v in row[2:]]
        except ValueError as exc:
            problems.append(f"line {lineno}: unparseable value ({exc})")
            continue
        if not 0 <= label < k:
            problems.append(f"line {lineno}: true_label {label} outside 0..{k - 1}")
            continue
        if any(not (0.0 <= v <= 1.0) for v in p):
            problems.append(f"line {lineno}: probabilities must lie in [0, 1]")
            continue
        total = sum(p)
        if abs(total - 1.0) > SUM_TOL:
            problems.append(f"line {lineno}: probabilities sum to {total!r}, not 1 within {SUM_TOL:g}")
            continue
        seen[iid] = lineno
        ids.append(iid)
        labels.append(label)
        probs.append(p)
    if problems:
        raise ValidationError(f"{path}: {len(problems)} invalid row(s)", problems)
    return PredictionTable(
        model_id=model_id or path.stem,
        ids=tuple(ids),
        labels=np.array(labels, dtype=np.int64),
        probs=np.array(probs, dtype=float).reshape(len(ids), k),
    )


def table_from_predictions(model_id: str, ids: Sequence, labels, probs) -> PredictionTable:
    return PredictionTable(model_id, tuple(ids), np.asarray(labels), np.asarray(probs, dtype=float))
