"""Robustness-based dynamic selection between two classifiers.

M1 is the model with the better validation accuracy, M2 the runner-up.  For
each instance the ratio r2 / r1 of their COR robustness values decides who
answers: M2 when the ratio exceeds a threshold t, M1 otherwise.  RS-D picks t
to maximise combined validation accuracy; RS-I picks the t at which M2 has
the largest accuracy advantage over M1 on the routed tail, and falls back to
M1 alone when M2 never has an advantage.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Hashable

import numpy as np

from .errors import InvalidInputError
from .metrics import robustness_cor_many
from .models.table import PredictionTable, check_aligned

RS_D = "RS-D"
RS_I = "RS-I"
SINGLE_BEST = "SingleBest"
STRATEGIES = (SINGLE_BEST, RS_D, RS_I)
RATIO_METRIC = "r_cor"


@dataclass(frozen=True)
class SelectionPolicy:
    strategy: str
    m1_id: str
    m2_id: str
    threshold: float

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidInputError(f"unknown strategy {self.strategy!r}")
        if math.isnan(self.threshold):
            raise InvalidInputError("threshold must not be NaN")
        if self.strategy == SINGLE_BEST and self.threshold != math.inf:
            raise InvalidInputError("SingleBest policies must have threshold inf")

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "m1_id": self.m1_id,
            "m2_id": self.m2_id,
            "threshold": _encode(self.threshold),
            "ratio": RATIO_METRIC,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionPolicy":
        ratio = d.get("ratio", RATIO_METRIC)
        if ratio != RATIO_METRIC:
            raise InvalidInputError(f"policy built on ratio {ratio!r}; only {RATIO_METRIC!r} is supported")
        return cls(d["strategy"], d["m1_id"], d["m2_id"], _decode(d["threshold"]))

    @classmethod
    def from_json(cls, text: str) -> "SelectionPolicy":
        return cls.from_dict(json.loads(text))


def _encode(t: float):
    if t == math.inf:
        return "inf"
    if t == -math.inf:
        return "-inf"
    return t


def _decode(v) -> float:
    if isinstance(v, str):
        if v in ("inf", "-inf"):
            return float(v)
        raise InvalidInputError(f"bad threshold {v!r}")
    return float(v)


@dataclass(frozen=True)
class RoutedPrediction:
    instance_id: Hashable
    chosen_model: str
    predicted_class: int
    ratio: float


def robustness_ratio(r1: float, r2: float) -> float:
    """r2 / r1 with 0/0 -> 1 and x/0 -> inf."""
    return float(robustness_ratios(np.array([r1]), np.array([r2]))[0])


def robustness_ratios(r1, r2) -> np.ndarray:
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    for r in (r1, r2):
        if np.any(np.isnan(r)) or np.any(r < 0.0) or np.any(r > 1.0):
            raise InvalidInputError("robustness values must lie in [0, 1]")
    safe = np.where(r1 > 0, r1, 1.0)
    return np.where(r1 > 0, r2 / safe, np.where(r2 > 0, math.inf, 1.0))


def table_ratios(m1: PredictionTable, m2: PredictionTable) -> np.ndarray:
    return robustness_ratios(robustness_cor_many(m1.probs), robustness_cor_many(m2.probs))


def candidate_thresholds(ratios) -> np.ndarray:
    """-inf, a cut strictly between every pair of adjacent distinct ratios, and +inf.

    Each candidate induces a different partition {ratio <= t} / {ratio > t},
    and every achievable partition appears once.
    """
    u = np.unique(np.asarray(ratios, dtype=float))
    cuts = [-math.inf]
    for a, b in zip(u[:-1], u[1:]):
        if math.isinf(b):
            # no finite midpoint exists; any finite value above a works
            m = a + 1.0
        else:
            m = a + (b - a) / 2.0
            if not a <= m < b:
                m = a
        cuts.append(m)
    cuts.append(math.inf)
    return np.array(cuts)


def _inputs(val_m1: PredictionTable, val_m2: PredictionTable, labels):
    check_aligned(val_m1, val_m2)
    if len(val_m1) == 0:
        raise InvalidInputError("validation tables are empty")
    y = val_m1.labels if labels is None else np.asarray(labels).astype(np.int64)
    if len(y) != len(val_m1):
        raise InvalidInputError("labels do not align with the validation tables")
    c1 = val_m1.predicted() == y
    c2 = val_m2.predicted() == y
    return table_ratios(val_m1, val_m2), c1, c2


def _routing_counts(ratios, c1, c2, cuts):
    """For each cut: (#M1-correct among ratio <= t, #M2-correct among ratio > t, #routed)."""
    order = np.argsort(ratios, kind="stable")
    z = ratios[order]
    # number of instances with ratio <= t
    below = np.searchsorted(z, cuts, side="right")
    cum1 = np.concatenate([[0], np.cumsum(c1[order])])
    cum2 = np.concatenate([[0], np.cumsum(c2[order])])
    n = len(z)
    m1_ok = cum1[below]
    m2_ok_tail = cum2[n] - cum2[below]
    m1_ok_tail = cum1[n] - cum1[below]
    return m1_ok, m2_ok_tail, m1_ok_tail, n - below


def fit_rsd(val_m1: PredictionTable, val_m2: PredictionTable, labels=None) -> SelectionPolicy:
    ratios, c1, c2 = _inputs(val_m1, val_m2, labels)
    cuts = candidate_thresholds(ratios)
    m1_ok, m2_ok_tail, _, _ = _routing_counts(ratios, c1, c2, cuts)
    hits = m1_ok + m2_ok_tail  # integer counts, so ties are exact
    best = np.flatnonzero(hits == hits.max())[-1]  # largest t among maximisers
    return SelectionPolicy(RS_D, val_m1.model_id, val_m2.model_id, float(cuts[best]))


def rsi_gains(val_m1: PredictionTable, val_m2: PredictionTable, labels=None):
    """(cuts, gain) with gain = acc(M2) - acc(M1) on the tail ratio > t; the +inf cut is dropped."""
    ratios, c1, c2 = _inputs(val_m1, val_m2, labels)
    cuts = candidate_thresholds(ratios)[:-1]
    _, m2_ok_tail, m1_ok_tail, routed = _routing_counts(ratios, c1, c2, cuts)
    return cuts, (m2_ok_tail - m1_ok_tail) / routed


def fit_rsi(val_m1: PredictionTable, val_m2: PredictionTable, labels=None) -> SelectionPolicy:
    ratios, c1, c2 = _inputs(val_m1, val_m2, labels)
    cuts = candidate_thresholds(ratios)[:-1]
    _, m2_ok_tail, m1_ok_tail, routed = _routing_counts(ratios, c1, c2, cuts)
    diff = (m2_ok_tail - m1_ok_tail).astype(np.int64)
    # Gains are compared as exact rationals so ties are detected reliably.
    best_i, best_num, best_den = None, 0, 1
    for i in range(len(cuts)):
        # diff[i]/routed[i] >= best_num/best_den, ties to the later (larger) cut
        if diff[i] > 0 and diff[i] * best_den >= best_num * routed[i]:
            best_i, best_num, best_den = i, int(diff[i]), int(routed[i])
    t = math.inf if best_i is None else float(cuts[best_i])
    return SelectionPolicy(RS_I, val_m1.model_id, val_m2.model_id, t)


def single_best(m1_id: str, m2_id: str) -> SelectionPolicy:
    return SelectionPolicy(SINGLE_BEST, m1_id, m2_id, math.inf)


def fit_policy(strategy: str, val_m1: PredictionTable, val_m2: PredictionTable, labels=None) -> SelectionPolicy:
    if strategy == RS_D:
        return fit_rsd(val_m1, val_m2, labels)
    if strategy == RS_I:
        return fit_rsi(val_m1, val_m2, labels)
    if strategy == SINGLE_BEST:
        return single_best(val_m1.model_id, val_m2.model_id)
    raise InvalidInputError(f"unknown strategy {strategy!r}")


def route(policy: SelectionPolicy, test_m1: PredictionTable, test_m2: PredictionTable):
    """Vectorised routing: (use_m2 mask, predicted classes, ratios)."""
    if test_m1.ids != test_m2.ids:
        raise InvalidInputError("test tables are not aligned on instance ids")
    if test_m1.class_count != test_m2.class_count:
        raise InvalidInputError("test tables disagree on the number of classes")
    ratios = table_ratios(test_m1, test_m2)
    use_m2 = ratios > policy.threshold
    pred = np.where(use_m2, test_m2.predicted(), test_m1.predicted())
    return use_m2, pred, ratios


def apply_policy(policy: SelectionPolicy, test_m1: PredictionTable, test_m2: PredictionTable) -> list[RoutedPrediction]:
    use_m2, pred, ratios = route(policy, test_m1, test_m2)
    return [
        RoutedPrediction(i, policy.m2_id if m2 else policy.m1_id, int(c), float(r))
        for i, m2, c, r in zip(test_m1.ids, use_m2, pred, ratios)
    ]


def policy_accuracy(policy: SelectionPolicy, m1: PredictionTable, m2: PredictionTable, labels=None) -> float:
    _, pred, _ = route(policy, m1, m2)
    y = m1.labels if labels is None else np.asarray(labels)
    return float((pred == y).mean())
