"""Synthetic data where two built-in learners fail on different regions.

Rows with x0 < 0 follow y = [x1 > 0] but carry a huge-variance nuisance
feature x3, which wrecks Euclidean k-NN while naive Bayes ignores it.  Rows
with x0 >= 0 follow the checkerboard y = [x1 * x2 > 0], which naive Bayes
cannot represent but k-NN learns.  Each learner is unsure exactly where it
errs, so the robustness ratio separates the regions.
"""

from __future__ import annotations

import csv

import numpy as np

from .data import ColumnMeta, Dataset

COLUMNS = ("x0", "x1", "x2", "x3")


def disjoint_regions(n: int = 1500, seed: int = 0, nuisance_scale: float = 1000.0) -> Dataset:
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-1, 1, n)
    x1 = rng.normal(0, 1, n)
    x2 = rng.normal(0, 1, n)
    left = x0 < 0
    x3 = np.where(left, rng.normal(0, nuisance_scale, n), 0.0)
    y = np.where(left, x1 > 0, x1 * x2 > 0).astype(np.int64)
    return Dataset(
        name="disjoint_regions",
        features=np.column_stack([x0, x1, x2, x3]),
        labels=y,
        class_count=2,
        feature_meta=tuple(ColumnMeta(c, "continuous") for c in COLUMNS),
        class_names=("0", "1"),
    )


def write_dataset_csv(ds: Dataset, path, label_column: str = "y") -> None:
    names = [m.name for m in ds.feature_meta] or [f"f{j}" for j in range(ds.features.shape[1])]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [label_column])
        for row, y in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [ds.class_names[y] if ds.class_names else int(y)])
