"""Closed-form COR robustness of a single prediction.

For a conditional class distribution p(.|x) with most likely class y1 and
runner-up y2, the prediction y1 survives every constant-odds-ratio
perturbation Q of the model with d*_COR(P, Q) < p(y1|x) / p(y2|x).  The
equivalent distance-scale value is (p(y1|x) - p(y2|x)) / p(y1|x).

Both quantities are computed from the same primitive, the runner-up odds
``q = p(y2|x) / p(y1|x)``: ``r_cor = 1 - q`` and ``r_star = 1 / q``.  Only a
runner-up of exactly zero gives r_cor = 1 and r_star = inf.  Sharing
the primitive keeps orderings by either metric identical on real data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

SUM_TOL = 1e-6


def _as_prob_matrix(probs) -> np.ndarray:
    arr = np.asarray(probs, dtype=float)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected a 2-D probability matrix, got shape {arr.shape}")
    return arr


def check_prob_matrix(probs, tol: float = SUM_TOL) -> np.ndarray:
    """Validate rows of a probability matrix; returns the float array.

    Rows must have at least two entries in [0, 1] summing to 1 within ``tol``.
    Nothing is renormalised.
    """
    arr = _as_prob_matrix(probs)
    if arr.shape[1] < 2:
        raise InvalidInputError("a class distribution needs at least 2 classes")
    if arr.size == 0:
        return arr
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("probabilities must be finite")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise InvalidInputError("probabilities must lie in [0, 1]")
    bad = np.flatnonzero(np.abs(arr.sum(axis=1) - 1.0) > tol)
    if bad.size:
        raise InvalidInputError(
            f"{bad.size} distribution(s) do not sum to 1 within {tol:g} (first bad row {bad[0]})"
        )
    return arr


@dataclass(frozen=True)
class ClassDistribution:
    """Conditional class probabilities p(.|x) for one instance."""

    probs: tuple

    def __post_init__(self):
        arr = check_prob_matrix([list(self.probs)])[0]
        object.__setattr__(self, "probs", tuple(float(v) for v in arr))

    @classmethod
    def of(cls, probs) -> "ClassDistribution":
        return cls(tuple(np.asarray(probs, dtype=float).ravel()))

    @property
    def class_count(self) -> int:
        return len(self.probs)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)


@dataclass(frozen=True)
class RobustnessScore:
    r_cor: float
    r_star: float
    top: int
    runner_up: int


def _coerce(dist) -> np.ndarray:
    if isinstance(dist, ClassDistribution):
        return dist.as_array()
    return check_prob_matrix([np.asarray(dist, dtype=float).ravel()])[0]


def top_two_many(probs) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise (top, runner_up) indices; ties go to the lowest class index."""
    arr = _as_prob_matrix(probs)
    if arr.shape[1] < 2:
        raise InvalidInputError("a class distribution needs at least 2 classes")
    order = np.argsort(-arr, axis=1, kind="stable")
    return order[:, 0], order[:, 1]


def top_two(dist) -> tuple[int, int]:
    p = _coerce(dist)
    top, runner = top_two_many(p[None, :])
    return int(top[0]), int(runner[0])


def runner_up_odds_many(probs) -> np.ndarray:
    """p(y2|x) / p(y1|x) per row, in [0, 1]."""
    arr = _as_prob_matrix(probs)
    top, runner = top_two_many(arr)
    rows = np.arange(arr.shape[0])
    p1 = arr[rows, top]
    p2 = arr[rows, runner]
    if np.any(p1 <= 0.0):
        raise InvalidInputError("top class probability is zero; distribution is invalid")
    return p2 / p1


_BELOW_ONE = np.nextafter(1.0, 0.0)


def _cor_from_odds(odds):
    # Tiny positive odds would round 1 - q up to 1.0, which is reserved for
    # a runner-up of exactly zero.
    return np.where(odds > 0.0, np.minimum(1.0 - odds, _BELOW_ONE), 1.0)


def robustness_cor_many(probs) -> np.ndarray:
    return _cor_from_odds(runner_up_odds_many(probs))


def robustness_star_many(probs) -> np.ndarray:
    odds = runner_up_odds_many(probs)
    with np.errstate(divide="ignore"):
        return np.where(odds > 0.0, 1.0 / np.where(odds > 0.0, odds, 1.0), math.inf)


def robustness(dist) -> RobustnessScore:
    p = _coerce(dist)
    top, runner = top_two(p)
    odds = p[runner] / p[top]
    r_star = math.inf if odds == 0.0 else 1.0 / odds
    return RobustnessScore(r_cor=float(_cor_from_odds(odds)), r_star=float(r_star), top=top, runner_up=runner)


def robustness_cor(dist) -> float:
    return robustness(dist).r_cor


def robustness_star(dist) -> float:
    return robustness(dist).r_star


def star_to_cor(r_star: float) -> float:
    """Map a ratio-scale robustness (>= 1, possibly inf) to [0, 1]."""
    r_star = float(r_star)
    if math.isnan(r_star) or r_star < 1.0:
        raise InvalidInputError(f"r_star must be >= 1, got {r_star}")
    if math.isinf(r_star):
        return 1.0
    return float(_cor_from_odds(1.0 / r_star))


def cor_to_star(r_cor: float) -> float:
    r_cor = float(r_cor)
    if math.isnan(r_cor) or not 0.0 <= r_cor <= 1.0:
        raise InvalidInputError(f"r_cor must lie in [0, 1], got {r_cor}")
    if r_cor == 1.0:
        return math.inf
    return 1.0 / (1.0 - r_cor)


def robustness_from_joint(joint_column) -> RobustnessScore:
    """Robustness from unnormalised joint values p(y, x) at a fixed x.

    The normalising constant p(x) cancels, so this agrees with the
    conditional form.
    """
    col = np.asarray(joint_column, dtype=float).ravel()
    if col.size < 2 or np.any(col < 0) or not np.all(np.isfinite(col)) or col.max() <= 0:
        raise InvalidInputError("joint column needs >= 2 finite non-negative entries, one positive")
    top, runner = top_two_many(col[None, :])
    top, runner = int(top[0]), int(runner[0])
    odds = col[runner] / col[top]
    return RobustnessScore(
        r_cor=float(_cor_from_odds(odds)),
        r_star=math.inf if odds == 0.0 else float(1.0 / odds),
        top=top,
        runner_up=runner,
    )
