"""Accuracy Rejection Curves.

Outcomes are ordered by ascending score and rejected from the front; point k
reports the accuracy on the n - k instances that remain.  The curve stops at
k = n - 1 so accuracy is never taken over an empty set.
"""

from __future__ import annotations

import csv
import html
import math
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import InvalidInputError

DEFAULT_GRID = 101


@dataclass(frozen=True)
class ScoredOutcome:
    instance_id: Hashable
    score: float
    correct: bool


@dataclass(frozen=True)
class ARCurve:
    rejection: np.ndarray
    accuracy: np.ndarray
    n: int
    # Exact counts behind each point; absent for averaged curves.
    kept: np.ndarray | None = field(default=None, compare=False)
    correct: np.ndarray | None = field(default=None, compare=False)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.rejection.tolist(), self.accuracy.tolist()))

    def value_at(self, fraction: float) -> float:
        """Left-continuous step lookup: accuracy of the first point at or after ``fraction``."""
        idx = np.searchsorted(self.rejection, fraction - 1e-12, side="left")
        return float(self.accuracy[min(idx, len(self.accuracy) - 1)])

    def identical_to(self, other: "ARCurve") -> bool:
        return (
            self.n == other.n
            and np.array_equal(self.rejection, other.rejection)
            and np.array_equal(self.accuracy, other.accuracy)
        )


def _order(scores: np.ndarray, ids: Sequence) -> np.ndarray:
    ids = list(ids)
    if len(set(ids)) != len(ids):
        raise InvalidInputError("instance ids must be unique")
    # Ties in score fall back to instance id.
    return np.array(sorted(range(len(ids)), key=lambda i: (scores[i], ids[i])), dtype=int)


def arc_from_arrays(scores, correct, ids=None) -> ARCurve:
    scores = np.asarray(scores, dtype=float)
    correct = np.asarray(correct, dtype=bool)
    n = len(scores)
    if n == 0:
        raise InvalidInputError("cannot build an ARC from zero outcomes")
    if correct.shape != scores.shape:
        raise InvalidInputError("scores and correctness flags must align")
    if np.any(np.isnan(scores)):
        raise InvalidInputError("scores must not be NaN")
    if ids is None:
        ids = range(n)
    order = _order(scores, ids)
    ordered = correct[order].astype(np.int64)
    # suffix[k] = correct among the last n - k instances
    suffix = np.cumsum(ordered[::-1])[::-1]
    kept = np.arange(n, 0, -1, dtype=np.int64)
    return ARCurve(
        rejection=np.arange(n) / n,
        accuracy=suffix / kept,
        n=n,
        kept=kept,
        correct=suffix,
    )


def build_arc(outcomes: Sequence[ScoredOutcome]) -> ARCurve:
    outcomes = list(outcomes)
    return arc_from_arrays(
        [o.score for o in outcomes],
        [o.correct for o in outcomes],
        [o.instance_id for o in outcomes],
    )


def average_arcs(curves: Sequence[ARCurve], grid_size: int = DEFAULT_GRID) -> ARCurve:
    """Pointwise mean of curves resampled onto a shared grid.

    The grid spans [0, 1 - 1/n_max] with ``grid_size`` equispaced points and
    each curve is read as a left-continuous step function (``value_at``);
    curves shorter than the grid hold their last value.
    """
    curves = list(curves)
    if not curves:
        raise InvalidInputError("need at least one curve to average")
    if grid_size < 2:
        raise InvalidInputError("grid_size must be >= 2")
    n_max = max(c.n for c in curves)
    end = 1.0 - 1.0 / n_max
    grid = np.linspace(0.0, end, grid_size) if end > 0 else np.array([0.0])
    values = np.array([[c.value_at(f) for f in grid] for c in curves])
    return ARCurve(rejection=grid, accuracy=values.mean(axis=0), n=n_max)


def write_arc_csv(curve: ARCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rejection_fraction", "accuracy"])
        for f, a in curve.points:
            w.writerow([repr(f), repr(a)])


_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def render_svg(curves: dict[str, ARCurve], title: str = "", width: int = 480, height: int = 320) -> str:
    """Minimal standalone SVG line plot of one or more ARCs."""
    pad = 48
    all_acc = np.concatenate([c.accuracy for c in curves.values()]) if curves else np.array([0.0, 1.0])
    lo = math.floor(min(all_acc.min(), 1.0) * 20) / 20
    lo = min(lo, 0.95)
    hi = 1.0

    def sx(f):
        return pad + f * (width - 2 * pad)

    def sy(a):
        return height - pad - (a - lo) / (hi - lo) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">rejection fraction</text>',
        f'<text x="14" y="{height / 2}" font-size="12" transform="rotate(-90 14 {height / 2})" '
        f'text-anchor="middle">accuracy</text>',
        f'<text x="{pad - 4}" y="{sy(lo) + 4:.1f}" font-size="10" text-anchor="end">{lo:.2f}</text>',
        f'<text x="{pad - 4}" y="{sy(hi) + 4:.1f}" font-size="10" text-anchor="end">{hi:.2f}</text>',
    ]
    if title:
        parts.append(f'<text x="{width / 2}" y="20" text-anchor="middle" font-size="13">{html.escape(title)}</text>')
    for i, (name, c) in enumerate(curves.items()):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(f):.2f},{sy(a):.2f}" for f, a in c.points)
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        parts.append(
            f'<text x="{width - pad - 4}" y="{pad + 14 * (i + 1)}" font-size="11" '
            f'text-anchor="end" fill="{color}">{html.escape(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
