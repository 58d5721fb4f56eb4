"""Hyperparameter selection by stratified k-fold cross-validation."""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from ..errors import InvalidInputError, StratificationError
from .learners import ClassifierSpec, fit


def stratified_folds(labels, folds: int, seed: int) -> np.ndarray:
    """Fold index per row; each class is shuffled then dealt round-robin."""
    y = np.asarray(labels).astype(np.int64)
    if folds < 2:
        raise InvalidInputError("folds must be >= 2")
    assignment = np.empty(len(y), dtype=np.int64)
    rng = np.random.default_rng(seed)
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        if len(idx) < folds:
            raise StratificationError(f"class {int(c)} has {len(idx)} rows, fewer than {folds} folds")
        idx = rng.permutation(idx)
        assignment[idx] = np.arange(len(idx)) % folds
    return assignment


def cv_accuracy(spec: ClassifierSpec, X, y, assignment: np.ndarray, class_count: int) -> float:
    accs = []
    for f in range(assignment.max() + 1):
        test = assignment == f
        model = fit(spec, X[~test], y[~test], class_count=class_count)
        pred = model.predict_proba_matrix(X[test]).argmax(axis=1)
        accs.append(float((pred == y[test]).mean()))
    return float(np.mean(accs))


def grid_search_cv(
    specs: Sequence[ClassifierSpec], features, labels, folds: int = 5, seed: int = 0
) -> ClassifierSpec:
    """Spec with the best mean fold accuracy; the earliest wins ties."""
    specs = list(specs)
    if not specs:
        raise InvalidInputError("need at least one candidate spec")
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels).astype(np.int64)
    assignment = stratified_folds(y, folds, seed)
    if len(specs) == 1:
        return specs[0]
    K = int(y.max()) + 1
    best, best_acc = specs[0], -1.0
    for spec in specs:
        acc = cv_accuracy(spec, X, y, assignment, K)
        if acc > best_acc:
            best, best_acc = spec, acc
    return best


def expand_grid(kind: str, grid: dict, seed: int = 0, fixed: dict | None = None) -> list[ClassifierSpec]:
    """Cartesian product of hyperparameter lists, in key-then-value order."""
    fixed = dict(fixed or {})
    keys = list(grid)
    values = [v if isinstance(v, list) else [v] for v in grid.values()]
    return [
        ClassifierSpec(kind, {**fixed, **dict(zip(keys, combo))}, seed)
        for combo in itertools.product(*values)
    ] or [ClassifierSpec(kind, fixed, seed)]
