"""Built-in probabilistic classifiers: Gaussian naive Bayes, k-NN, random forest.

All three are small numpy implementations.  Count-based probabilities (k-NN
votes, tree leaves) use additive smoothing so finite samples never produce
an exact zero for a class.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..errors import InvalidInputError
from .table import PredictionTable

FORMAT_VERSION = 1

KINDS = ("gaussian_nb", "knn", "random_forest")

DEFAULTS: dict[str, dict[str, Any]] = {
    "gaussian_nb": {"variance_floor": 1e-9},
    "knn": {"k": 5, "alpha": 1.0},
    "random_forest": {
        "tree_count": 100,
        "max_depth": None,
        "min_leaf": 1,
        "max_features": "sqrt",
        "bootstrap": True,
        "alpha": 1.0,
    },
}


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInputError(f"unknown classifier kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.hyperparameters) - set(DEFAULTS[self.kind])
        if unknown:
            raise InvalidInputError(f"{self.kind}: unknown hyperparameters {sorted(unknown)}")
        hp = {**DEFAULTS[self.kind], **self.hyperparameters}
        _check_ranges(self.kind, hp)
        object.__setattr__(self, "hyperparameters", hp)

    def with_seed(self, seed: int) -> "ClassifierSpec":
        return ClassifierSpec(self.kind, dict(self.hyperparameters), seed)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "hyperparameters": dict(self.hyperparameters), "seed": self.seed}


def _check_ranges(kind: str, hp: dict) -> None:
    def bad(msg):
        raise InvalidInputError(f"{kind}: {msg}")

    if kind == "gaussian_nb":
        if not hp["variance_floor"] > 0:
            bad("variance_floor must be > 0")
    elif kind == "knn":
        if int(hp["k"]) != hp["k"] or hp["k"] < 1:
            bad("k must be a positive integer")
        if hp["alpha"] < 0:
            bad("alpha must be >= 0")
    else:
        if int(hp["tree_count"]) != hp["tree_count"] or hp["tree_count"] < 1:
            bad("tree_count must be a positive integer")
        if hp["max_depth"] is not None and (int(hp["max_depth"]) != hp["max_depth"] or hp["max_depth"] < 1):
            bad("max_depth must be None or a positive integer")
        if int(hp["min_leaf"]) != hp["min_leaf"] or hp["min_leaf"] < 1:
            bad("min_leaf must be a positive integer")
        mf = hp["max_features"]
        if mf not in ("sqrt", "all") and not (isinstance(mf, int) and mf >= 1):
            bad("max_features must be 'sqrt', 'all' or a positive integer")
        if hp["alpha"] < 0:
            bad("alpha must be >= 0")


def _check_features(X, d: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise InvalidInputError(f"features must be a 2-D matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("features must be finite")
    if d is not None and X.shape[1] != d:
        raise InvalidInputError(f"expected {d} features, got {X.shape[1]}")
    return X


# ---------------------------------------------------------------- naive Bayes


def _fit_nb(X, y, K, hp):
    means = np.zeros((K, X.shape[1]))
    variances = np.ones((K, X.shape[1]))
    counts = np.bincount(y, minlength=K).astype(float)
    for c in range(K):
        rows = X[y == c]
        if len(rows):
            means[c] = rows.mean(axis=0)
            variances[c] = rows.var(axis=0)
    variances = variances + hp["variance_floor"]
    return {"log_prior": np.log(np.maximum(counts, 1e-300) / counts.sum()), "means": means, "variances": variances,
            "present": counts > 0}


def _predict_nb(state, X):
    means, variances = state["means"], state["variances"]
    ll = -0.5 * (
        np.log(2 * np.pi * variances)[None, :, :] + (X[:, None, :] - means[None]) ** 2 / variances[None]
    ).sum(axis=2)
    ll = ll + state["log_prior"][None, :]
    ll[:, ~state["present"]] = -np.inf
    ll -= ll.max(axis=1, keepdims=True)
    p = np.exp(ll)
    return p / p.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------- k-NN


def _predict_knn(state, X, K, hp):
    train_X, train_y = state["X"], state["y"]
    k = min(int(hp["k"]), len(train_y))
    alpha = hp["alpha"]
    out = np.empty((len(X), K))
    # Chunked to bound the (chunk, n_train, d) difference tensor.
    step = max(1, int(2e7 // max(1, train_X.size)))
    for start in range(0, len(X), step):
        chunk = X[start : start + step]
        d2 = ((chunk[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2)
        # Distance ties resolve to the earlier training row.
        nn = np.argsort(d2, axis=1, kind="stable")[:, :k]
        votes = np.zeros((len(chunk), K))
        np.add.at(votes, (np.repeat(np.arange(len(chunk)), k), train_y[nn].ravel()), 1.0)
        out[start : start + len(chunk)] = (votes + alpha) / (k + K * alpha)
    return out


# ---------------------------------------------------------------- CART / forest


@dataclass
class _Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # class counts per node

    def leaf_of(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            n = node[idx]
            go_left = X[idx, self.feature[n]] <= self.threshold[n]
            node[idx] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return node

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "counts")}

    @classmethod
    def from_dict(cls, d):
        return cls(
            feature=np.array(d["feature"], dtype=np.int64),
            threshold=np.array(d["threshold"], dtype=float),
            left=np.array(d["left"], dtype=np.int64),
            right=np.array(d["right"], dtype=np.int64),
            counts=np.array(d["counts"], dtype=float).reshape(len(d["feature"]), -1),
        )


def _best_split(X, Y1h, features, min_leaf):
    """Lowest weighted Gini over the given features; None when nothing splits."""
    n = len(X)
    best = None
    total = Y1h.sum(axis=0)
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        left_counts = np.cumsum(Y1h[order], axis=0)[:-1]
        # candidate i splits after position i (left has i+1 rows)
        sizes_l = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (sizes_l >= min_leaf) & (n - sizes_l >= min_leaf)
        if not valid.any():
            continue
        right_counts = total[None, :] - left_counts
        sizes_r = n - sizes_l
        gini_l = 1.0 - ((left_counts / sizes_l[:, None]) ** 2).sum(axis=1)
        gini_r = 1.0 - ((right_counts / sizes_r[:, None]) ** 2).sum(axis=1)
        score = (sizes_l * gini_l + sizes_r * gini_r) / n
        score = np.where(valid, score, np.inf)
        i = int(np.argmin(score))
        if best is None or score[i] < best[0]:
            best = (float(score[i]), int(f), float(xs[i] + (xs[i + 1] - xs[i]) / 2.0))
    return best


def _grow_tree(X, y, K, hp, rng) -> _Tree:
    d = X.shape[1]
    mf = hp["max_features"]
    n_feat = d if mf == "all" else max(1, int(math.isqrt(d))) if mf == "sqrt" else min(int(mf), d)
    max_depth = hp["max_depth"]
    min_leaf = int(hp["min_leaf"])
    Y1h = np.eye(K)[y]

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(rows):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(Y1h[rows].sum(axis=0))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        node_counts = counts[node]
        if (max_depth is not None and depth >= max_depth) or (node_counts > 0).sum() <= 1 or len(rows) < 2 * min_leaf:
            continue
        Xn, Yn = X[rows], Y1h[rows]
        perm = rng.permutation(d)
        # Try the sampled subset first, then the rest, so a node only stays a
        # leaf when no feature can split it.
        split = _best_split(Xn, Yn, perm[:n_feat], min_leaf)
        if split is None and n_feat < d:
            split = _best_split(Xn, Yn, perm[n_feat:], min_leaf)
        if split is None:
            continue
        _, f, thr = split
        mask = Xn[:, f] <= thr
        lrows, rrows = rows[mask], rows[~mask]
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))
    return _Tree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        counts=np.array(counts, dtype=float).reshape(len(feature), K),
    )


def _fit_forest(X, y, K, hp, seed):
    trees = []
    n = len(y)
    for t in range(int(hp["tree_count"])):
        # Per-tree stream: trees could be grown in any order with the same result.
        rng = np.random.default_rng([seed, t])
        rows = rng.integers(0, n, size=n) if hp["bootstrap"] else np.arange(n)
        trees.append(_grow_tree(X[rows], y[rows], K, hp, rng))
    return {"trees": trees}


def _predict_forest(state, X, K, hp):
    alpha = hp["alpha"]
    total = np.zeros((len(X), K))
    for tree in state["trees"]:
        c = tree.counts[tree.leaf_of(X)]
        total += (c + alpha) / (c.sum(axis=1, keepdims=True) + K * alpha)
    return total / len(state["trees"])


# ---------------------------------------------------------------- public API


@dataclass(frozen=True)
class FittedModel:
    spec: ClassifierSpec
    class_count: int
    feature_count: int
    state: dict = field(repr=False, compare=False)

    def predict_proba_matrix(self, X) -> np.ndarray:
        X = _check_features(X, self.feature_count)
        if len(X) == 0:
            return np.zeros((0, self.class_count))
        hp = self.spec.hyperparameters
        if self.spec.kind == "gaussian_nb":
            return _predict_nb(self.state, X)
        if self.spec.kind == "knn":
            return _predict_knn(self.state, X, self.class_count, hp)
        return _predict_forest(self.state, X, self.class_count, hp)

    def to_json(self) -> str:
        if self.spec.kind == "random_forest":
            state = {"trees": [t.to_dict() for t in self.state["trees"]]}
        else:
            state = {k: np.asarray(v).tolist() for k, v in self.state.items()}
        return json.dumps(
            {
                "format_version": FORMAT_VERSION,
                "spec": self.spec.to_dict(),
                "class_count": self.class_count,
                "feature_count": self.feature_count,
                "state": state,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "FittedModel":
        d = json.loads(text)
        if d.get("format_version") != FORMAT_VERSION:
            raise InvalidInputError(f"unsupported model format version {d.get('format_version')!r}")
        spec = ClassifierSpec(d["spec"]["kind"], d["spec"]["hyperparameters"], d["spec"]["seed"])
        raw = d["state"]
        if spec.kind == "random_forest":
            state = {"trees": [_Tree.from_dict(t) for t in raw["trees"]]}
        elif spec.kind == "knn":
            state = {"X": np.array(raw["X"], dtype=float), "y": np.array(raw["y"], dtype=np.int64)}
        else:
            state = {k: np.array(v) for k, v in raw.items()}
        return cls(spec, d["class_count"], d["feature_count"], state)


def fit(spec: ClassifierSpec, features, labels, class_count: int | None = None) -> FittedModel:
    X = _check_features(features)
    y = np.asarray(labels).astype(np.int64).reshape(-1)
    if len(y) != len(X):
        raise InvalidInputError("features and labels must have the same number of rows")
    if len(y) == 0 or y.min() < 0:
        raise InvalidInputError("labels must be non-negative class indices")
    K = int(class_count if class_count is not None else y.max() + 1)
    if y.max() >= K:
        raise InvalidInputError("label outside class range")
    if len(np.unique(y)) < 2:
        raise InvalidInputError("training data must contain at least 2 classes")
    hp = spec.hyperparameters
    if spec.kind == "gaussian_nb":
        state = _fit_nb(X, y, K, hp)
    elif spec.kind == "knn":
        state = {"X": X.copy(), "y": y.copy()}
    else:
        state = _fit_forest(X, y, K, hp, spec.seed)
    return FittedModel(spec, K, X.shape[1], state)


def predict_proba(model: FittedModel, features, labels=None, ids=None, model_id: str | None = None) -> PredictionTable:
    """Class distributions for each query row, packaged as a PredictionTable.

    ``labels`` defaults to the model's predicted class when the truth is
    unknown; ``ids`` defaults to row positions.
    """
    probs = model.predict_proba_matrix(features)
    n = len(probs)
    ids = tuple(range(n)) if ids is None else tuple(ids)
    if labels is None:
        labels = probs.argmax(axis=1) if n else np.zeros(0, dtype=np.int64)
    return PredictionTable(model_id or model.spec.kind, ids, np.asarray(labels), probs)
