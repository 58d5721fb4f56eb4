"""Dataset loading, seeded splits and label corruption."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, LoadError

MISSING = {"", "?", "na", "nan", "null", "none"}


@dataclass(frozen=True)
class ColumnMeta:
    name: str
    kind: str  # "continuous" | "categorical"
    categories: tuple = ()


@dataclass(frozen=True)
class Dataset:
    name: str
    features: np.ndarray
    labels: np.ndarray
    class_count: int
    feature_meta: tuple = ()
    class_names: tuple = ()
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels).astype(np.int64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise InvalidInputError(f"features must be n x d with n, d >= 1; got {X.shape}")
        if len(y) != len(X):
            raise InvalidInputError("labels and features differ in length")
        if not np.all(np.isfinite(X)):
            raise InvalidInputError("features must be finite")
        if y.min() < 0 or y.max() >= self.class_count:
            raise InvalidInputError("labels must be class indices below class_count")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return len(self.labels)

    def subset(self, idx, labels=None) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(
            name=self.name,
            features=self.features[idx],
            labels=self.labels[idx] if labels is None else labels,
            class_count=self.class_count,
            feature_meta=self.feature_meta,
            class_names=self.class_names,
            extra={k: np.asarray(v)[idx] for k, v in self.extra.items()},
        )


def _is_missing(v: str) -> bool:
    return v.strip().lower() in MISSING


def _parse_float(v: str):
    try:
        x = float(v)
    except ValueError:
        return None
    return x if math.isfinite(x) else None


def load_csv(
    path,
    label_column: str,
    categorical: Sequence[str] = (),
    continuous: Sequence[str] = (),
    drop: Sequence[str] = (),
    keep: Sequence[str] = (),
    name: str | None = None,
) -> Dataset:
    """Read a headered CSV into a numeric Dataset.

    Columns listed in ``categorical``, and any column with a non-numeric
    value that is not forced ``continuous``, are one-hot encoded with
    categories in first-appearance order.  Labels map to 0..K-1 in
    first-appearance order.  ``keep`` columns are excluded from the features
    but carried along (as floats) in ``Dataset.extra``; ``drop`` columns are
    ignored.  Missing values are an error, never imputed.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise LoadError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if label_column not in header:
        raise LoadError(f"{path}: label column {label_column!r} not in header")
    for col in (*categorical, *continuous, *drop, *keep):
        if col not in header:
            raise LoadError(f"{path}: column {col!r} not in header")
    body = [r for r in rows[1:] if r and any(c.strip() for c in r)]
    problems = []
    for i, r in enumerate(body):
        if len(r) != len(header):
            problems.append(f"line {i + 2}: expected {len(header)} fields, got {len(r)}")
    if problems:
        raise LoadError(f"{path}: malformed rows", problems)
    if not body:
        raise LoadError(f"{path}: no data rows")

    for i, r in enumerate(body):
        for j, v in enumerate(r):
            if header[j] not in drop and _is_missing(v):
                problems.append(f"line {i + 2}, column {header[j]!r}: missing value")
    if problems:
        raise LoadError(f"{path}: missing values are not imputed", problems)

    label_idx = header.index(label_column)
    class_names: dict[str, int] = {}
    labels = []
    for r in body:
        labels.append(class_names.setdefault(r[label_idx].strip(), len(class_names)))
    if len(class_names) < 2:
        raise LoadError(f"{path}: label column {label_column!r} has a single class")

    blocks, meta = [], []
    extra = {}
    for j, col in enumerate(header):
        if j == label_idx or col in drop:
            continue
        raw = [r[j].strip() for r in body]
        parsed = [_parse_float(v) for v in raw]
        if col in keep:
            bad = [i for i, v in enumerate(parsed) if v is None]
            if bad:
                raise LoadError(f"{path}: column {col!r} must be numeric", [f"line {i + 2}: {raw[i]!r}" for i in bad])
            extra[col] = np.array(parsed, dtype=float)
            continue
        numeric = all(v is not None for v in parsed)
        if col in continuous and not numeric:
            bad = [i for i, v in enumerate(parsed) if v is None]
            raise LoadError(f"{path}: unparseable numerics in {col!r}", [f"line {i + 2}: {raw[i]!r}" for i in bad])
        if col in categorical or not numeric:
            cats: dict[str, int] = {}
            codes = [cats.setdefault(v, len(cats)) for v in raw]
            onehot = np.zeros((len(raw), len(cats)))
            onehot[np.arange(len(raw)), codes] = 1.0
            blocks.append(onehot)
            meta.append(ColumnMeta(col, "categorical", tuple(cats)))
        else:
            blocks.append(np.array(parsed, dtype=float)[:, None])
            meta.append(ColumnMeta(col, "continuous"))
    if not blocks:
        raise LoadError(f"{path}: no feature columns")
    return Dataset(
        name=name or path.stem,
        features=np.hstack(blocks),
        labels=np.array(labels, dtype=np.int64),
        class_count=len(class_names),
        feature_meta=tuple(meta),
        class_names=tuple(class_names),
        extra=extra,
    )


@dataclass(frozen=True)
class SplitSpec:
    proportions: tuple = (0.7, 0.15, 0.15)
    seed: int = 0

    def __post_init__(self):
        props = tuple(float(p) for p in self.proportions)
        if len(props) != 3:
            raise InvalidInputError("proportions must be (train, validation, test)")
        if any(p <= 0 for p in props):
            raise InvalidInputError("every proportion must be > 0")
        if abs(sum(props) - 1.0) > 1e-9:
            raise InvalidInputError(f"proportions sum to {sum(props)!r}, not 1")
        object.__setattr__(self, "proportions", props)


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    spec: SplitSpec

    def to_manifest(self) -> dict:
        return {
            "seed": self.spec.seed,
            "proportions": list(self.spec.proportions),
            "train": self.train.tolist(),
            "validation": self.validation.tolist(),
            "test": self.test.tolist(),
        }

    @classmethod
    def from_manifest(cls, d: dict) -> "SplitIndices":
        return cls(
            np.array(d["train"], dtype=np.int64),
            np.array(d["validation"], dtype=np.int64),
            np.array(d["test"], dtype=np.int64),
            SplitSpec(tuple(d["proportions"]), int(d["seed"])),
        )


def split_sizes(n: int, proportions) -> tuple[int, int, int]:
    # The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
    n_train = math.floor(proportions[0] * n + 1e-9)
    n_val = math.floor(proportions[1] * n + 1e-9)
    return n_train, n_val, n - n_train - n_val


def split_indices(n: int, spec: SplitSpec, labels=None, stratified: bool = False) -> SplitIndices:
    """Seeded permutation cut into train / validation / test.

    With ``stratified`` each class is permuted and cut separately, then the
    parts are merged and shuffled; sizes then follow per-class floors.
    """
    sizes = split_sizes(n, spec.proportions)
    rng = np.random.default_rng(spec.seed)
    if not stratified:
        if min(sizes) < 1:
            raise InvalidInputError(f"split of n={n} with {spec.proportions} leaves an empty part {sizes}")
        perm = rng.permutation(n)
        a, b = sizes[0], sizes[0] + sizes[1]
        return SplitIndices(perm[:a], perm[a:b], perm[b:], spec)
    y = np.asarray(labels)
    parts = ([], [], [])
    for c in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == c))
        s = split_sizes(len(idx), spec.proportions)
        parts[0].append(idx[: s[0]])
        parts[1].append(idx[s[0] : s[0] + s[1]])
        parts[2].append(idx[s[0] + s[1] :])
    out = [rng.permutation(np.concatenate(p)) for p in parts]
    if min(len(p) for p in out) < 1:
        raise InvalidInputError("stratified split leaves an empty part")
    return SplitIndices(out[0], out[1], out[2], spec)


def split(ds: Dataset, spec: SplitSpec, stratified: bool = False):
    idx = split_indices(ds.n, spec, ds.labels, stratified)
    return ds.subset(idx.train), ds.subset(idx.validation), ds.subset(idx.test)


def corrupt_labels(
    labels,
    rho: float,
    class_count: int,
    seed: int,
    exact_count: bool = False,
    other_classes: bool = True,
) -> np.ndarray:
    """Uniform label noise on a proportion ``rho`` of the instances.

    By default each instance is selected independently with probability
    ``rho`` and a selected label is redrawn from the other K - 1 classes, so
    it always changes.  ``exact_count`` selects exactly floor(rho * n)
    instances instead; ``other_classes=False`` redraws from all K classes.
    """
    y = np.asarray(labels).astype(np.int64)
    if class_count < 2:
        raise InvalidInputError("class_count must be >= 2")
    if not 0.0 <= rho <= 1.0:
        raise InvalidInputError("rho must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n = len(y)
    if exact_count:
        chosen = np.zeros(n, dtype=bool)
        chosen[rng.permutation(n)[: math.floor(rho * n + 1e-9)]] = True
    else:
        chosen = rng.random(n) < rho
    out = y.copy()
    if other_classes:
        shift = rng.integers(1, class_count, size=n)
        out[chosen] = (y[chosen] + shift[chosen]) % class_count
    else:
        draw = rng.integers(0, class_count, size=n)
        out[chosen] = draw[chosen]
    return out


def write_manifest(idx: SplitIndices, path) -> None:
    Path(path).write_text(json.dumps(idx.to_manifest()) + "\n", encoding="utf-8")
