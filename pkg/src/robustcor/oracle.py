"""Brute-force check of the closed-form robustness on finite spaces.

On a finite Y x X every measure is a K x M probability table, so the COR
dissimilarity d*(P, Q) = max(q/p) / min(q/p) over the support of P can be
evaluated directly.  Two independent routes then bracket the robustness of
the prediction at a column x:

* ``build_witness`` reweights the whole top row by lambda_minus and the whole
  runner-up row by lambda_plus; the result ties the prediction at x with
  d* equal to p(y1, x) / p(y2, x).
* ``min_flipping_dissimilarity`` searches at random (plus local refinement)
  for any Q that dethrones y1 at x and reports the smallest d* it saw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NoFlipPossibleError, NoWitnessError
from .metrics import top_two_many

PMF_TOL = 1e-9
DEFAULT_BUDGET = 10_000


@dataclass(frozen=True)
class FiniteJointModel:
    """Joint pmf p(y, x) as a (classes x features) table."""

    pmf: np.ndarray

    def __post_init__(self):
        pmf = np.array(self.pmf, dtype=float)
        if pmf.ndim != 2 or pmf.shape[0] < 2 or pmf.shape[1] < 1:
            raise InvalidInputError(f"pmf must be K x M with K >= 2, M >= 1; got {pmf.shape}")
        if not np.all(np.isfinite(pmf)) or np.any(pmf < 0):
            raise InvalidInputError("pmf entries must be finite and non-negative")
        if abs(pmf.sum() - 1.0) > PMF_TOL:
            raise InvalidInputError(f"pmf sums to {pmf.sum()!r}, not 1")
        if np.any(pmf.max(axis=0) <= 0):
            raise InvalidInputError("every feature column needs a positive entry")
        pmf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)

    @property
    def class_count(self) -> int:
        return self.pmf.shape[0]

    @property
    def feature_count(self) -> int:
        return self.pmf.shape[1]

    def conditional(self, x: int) -> np.ndarray:
        col = self.pmf[:, x]
        return col / col.sum()

    @classmethod
    def random(cls, classes: int, features: int, rng: np.random.Generator, zero_prob: float = 0.0):
        """Dirichlet(1) table; ``zero_prob`` blanks cells while keeping columns valid."""
        while True:
            pmf = rng.dirichlet(np.ones(classes * features)).reshape(classes, features)
            if zero_prob > 0:
                pmf = np.where(rng.random(pmf.shape) < zero_prob, 0.0, pmf)
            if np.all(pmf.max(axis=0) > 0):
                return cls(pmf / pmf.sum())


@dataclass(frozen=True)
class WitnessConstruction:
    pi1: float
    pi2: float
    lambda_minus: float
    lambda_plus: float
    ratio: float
    top: int
    runner_up: int

    def expected_likelihood_ratio(self) -> float:
        """E_P[L]; equals 1 when the reweighting preserves total mass."""
        return self.lambda_minus * self.pi1 + self.lambda_plus * self.pi2 + (1.0 - self.pi1 - self.pi2)


def _as_pmf(m) -> np.ndarray:
    return m.pmf if isinstance(m, FiniteJointModel) else np.asarray(m, dtype=float)


def dstar_many(p: np.ndarray, qs: np.ndarray) -> np.ndarray:
    """d*(P, Q_b) for a stack of candidate tables ``qs`` of shape (B, K, M)."""
    p = np.asarray(p, dtype=float)
    qs = np.asarray(qs, dtype=float)
    if qs.shape[1:] != p.shape:
        raise InvalidInputError(f"shape mismatch: {p.shape} vs {qs.shape[1:]}")
    support = p > 0
    flat_q = qs.reshape(qs.shape[0], -1)
    outside = flat_q[:, ~support.ravel()]
    escapes = outside.max(axis=1) > 0 if outside.shape[1] else np.zeros(len(qs), dtype=bool)
    lr = flat_q[:, support.ravel()] / p[support]
    hi = lr.max(axis=1)
    lo = lr.min(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(lo > 0, hi / np.where(lo > 0, lo, 1.0), math.inf)
    out = np.where(escapes, math.inf, out)
    # Q = 0 on the whole support (all of its mass outside) is already inf.
    return out


def dstar_finite(p, q) -> float:
    """COR dissimilarity max(L) / min(L) with L = q/p on the support of p.

    Returns inf when Q is not absolutely continuous w.r.t. P or when L
    vanishes somewhere on the support.
    """
    p_arr, q_arr = _as_pmf(p), _as_pmf(q)
    if p_arr.shape != q_arr.shape:
        raise InvalidInputError(f"shape mismatch: {p_arr.shape} vs {q_arr.shape}")
    return float(dstar_many(p_arr, q_arr[None])[0])


def _top_two_at(pmf: np.ndarray, x: int) -> tuple[int, int]:
    if not 0 <= x < pmf.shape[1]:
        raise InvalidInputError(f"feature index {x} out of range")
    top, runner = top_two_many(pmf[:, x][None, :])
    return int(top[0]), int(runner[0])


def witness_parameters(pi1: float, pi2: float, ratio: float) -> tuple[float, float]:
    denom = pi1 + ratio * pi2
    return (pi1 + pi2) / denom, (ratio * pi1 + ratio * pi2) / denom


def build_witness(p: FiniteJointModel, x: int) -> tuple[WitnessConstruction, FiniteJointModel]:
    """Minimal tie-forcing perturbation of ``p`` at column ``x``."""
    pmf = p.pmf
    top, runner = _top_two_at(pmf, x)
    p1, p2 = pmf[top, x], pmf[runner, x]
    if p2 <= 0:
        raise NoWitnessError(f"runner-up class {runner} has zero mass at x={x}")
    ratio = p1 / p2
    pi1, pi2 = pmf[top].sum(), pmf[runner].sum()
    lam_minus, lam_plus = witness_parameters(pi1, pi2, ratio)
    weights = np.ones_like(pmf)
    weights[top] = lam_minus
    weights[runner] = lam_plus
    q = pmf * weights
    # The reweighting is mass-preserving analytically; absorb rounding only.
    q = q / q.sum()
    info = WitnessConstruction(
        pi1=float(pi1),
        pi2=float(pi2),
        lambda_minus=float(lam_minus),
        lambda_plus=float(lam_plus),
        ratio=float(ratio),
        top=top,
        runner_up=runner,
    )
    return info, FiniteJointModel(q)


def _flips(qs: np.ndarray, x: int, top: int) -> np.ndarray:
    col = qs[:, :, x]
    others = np.delete(col, top, axis=1)
    return others.max(axis=1) >= col[:, top]


def _repair(weights: np.ndarray, pmf: np.ndarray, x: int, top: int, challengers: np.ndarray) -> np.ndarray:
    """Raise each candidate's challenger cell just enough to tie the top class at x."""
    w = weights.copy()
    rows = np.arange(len(w))
    top_mass = w[:, top, x] * pmf[top, x]
    ch_mass = w[rows, challengers, x] * pmf[challengers, x]
    need = top_mass > ch_mass
    factor = np.where(need, top_mass / np.where(ch_mass > 0, ch_mass, 1.0), 1.0)
    w[rows, challengers, x] *= factor * np.where(need, 1.0 + 4 * np.finfo(float).eps, 1.0)
    return w


def min_flipping_dissimilarity(
    p: FiniteJointModel,
    x: int,
    search_budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    include_witness: bool = True,
) -> float:
    """Smallest d*(P, Q) found over candidates Q that dethrone the top class at x.

    Candidates are positive likelihood-ratio tables on the support of P
    (anything else has infinite dissimilarity): the witness ray and its
    per-challenger analogues, log-normal random tables repaired to the flip
    boundary, then multiplicative coordinate descent from the best few.  The
    result is an upper bound on the true minimum.  ``include_witness=False``
    drops the witness candidates, leaving a purely blind search.
    """
    if search_budget < 1:
        raise InvalidInputError("search_budget must be >= 1")
    pmf = p.pmf
    K, M = pmf.shape
    top, _ = _top_two_at(pmf, x)
    col = pmf[:, x]
    contenders = np.flatnonzero((col > 0) & (np.arange(K) != top))
    if contenders.size == 0:
        raise NoFlipPossibleError(f"only class {top} has mass at x={x}")
    rng = np.random.default_rng(seed)
    support = pmf > 0

    best = math.inf
    used = 0

    def evaluate(weights: np.ndarray) -> np.ndarray:
        nonlocal best, used
        qs = weights * pmf
        qs = qs / qs.sum(axis=(1, 2), keepdims=True)
        d = dstar_many(pmf, qs)
        d = np.where(_flips(qs, x, top), d, math.inf)
        used += len(weights)
        if d.size:
            best = min(best, float(d.min()))
        return d

    # Structured candidates: identity plus the witness for every challenger.
    structured = [np.ones((K, M))]
    for y in contenders if include_witness else ():
        ratio = col[top] / col[y]
        lm, lp = witness_parameters(pmf[top].sum(), pmf[y].sum(), ratio)
        w = np.ones((K, M))
        w[top], w[y] = lm, lp
        structured.append(w)
    structured = np.stack(structured)
    if include_witness:
        # Rounding can leave the exact tie a hair short of flipping.
        structured[1:] = _repair(structured[1:], pmf, x, top, contenders)
    evaluate(structured[: max(1, search_budget)])

    remaining = search_budget - used
    random_budget = remaining // 2
    pool_w, pool_d = [], []
    batch = 512
    while random_budget > 0:
        b = min(batch, random_budget)
        sigma = rng.uniform(0.01, 2.0, size=(b, 1, 1))
        w = np.exp(sigma * rng.standard_normal((b, K, M)))
        # Half the batch perturbs column x only, the slice the prediction sees.
        local = rng.random(b) < 0.5
        w[local] = np.where(np.arange(M)[None, None, :] == x, w[local], 1.0)
        w = np.where(support[None], w, 1.0)
        challengers = rng.choice(contenders, size=b)
        w = _repair(w, pmf, x, top, challengers)
        d = evaluate(w)
        keep = np.argsort(d)[:8]
        pool_w.append(w[keep])
        pool_d.append(d[keep])
        random_budget -= b

    remaining = search_budget - used
    if remaining > 0 and pool_w:
        ws = np.concatenate(pool_w)
        ds = np.concatenate(pool_d)
        starts = ws[np.argsort(ds)[:4]]
        best = min(best, _refine(starts, pmf, x, top, support, remaining, evaluate))
    return best


def _refine(starts, pmf, x, top, support, budget, evaluate) -> float:
    """Multiplicative coordinate descent on the likelihood-ratio table."""
    K, M = pmf.shape
    cells = np.argwhere(support)
    best = math.inf
    per_start = max(1, budget // len(starts))
    for w0 in starts:
        w = w0.copy()
        cur = float(evaluate(w[None])[0])
        spent = 1
        step = 0.5
        while spent < per_start and step > 1e-6:
            n = min(2 * len(cells), per_start - spent)
            if n <= 0:
                break
            props = np.repeat(w[None], n, axis=0)
            for i in range(n):
                k, m = cells[i // 2]
                props[i, k, m] *= math.exp(step if i % 2 == 0 else -step)
            d = evaluate(props)
            spent += n
            j = int(np.argmin(d))
            if d[j] < cur:
                cur, w = float(d[j]), props[j]
            else:
                step /= 2
        best = min(best, cur)
    return best


@dataclass
class ColumnCheck:
    trial: int
    column: int
    r_star: float
    witness_dstar: float
    witness_gap: float
    search_min: float

    @property
    def witness_ok(self) -> bool:
        return abs(self.witness_dstar - self.r_star) <= 1e-9 * self.r_star and self.witness_gap <= 1e-9

    @property
    def search_ok(self) -> bool:
        return self.search_min >= self.r_star * (1 - 1e-9)


@dataclass
class VerificationReport:
    checks: list
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return all(c.witness_ok and c.search_ok for c in self.checks)

    def summary(self) -> str:
        bad_w = sum(not c.witness_ok for c in self.checks)
        bad_s = sum(not c.search_ok for c in self.checks)
        worst = max((c.search_min / c.r_star - 1 for c in self.checks), default=0.0)
        lines = [
            f"columns checked: {len(self.checks)} (skipped {self.skipped} with zero runner-up mass)",
            f"witness reaches r_star with a tie: {'PASS' if not bad_w else f'FAIL ({bad_w})'}",
            f"no cheaper flipping perturbation found: {'PASS' if not bad_s else f'FAIL ({bad_s})'}",
            f"search minimum / r_star - 1, worst case: {worst:.3e}",
            "overall: " + ("PASS" if self.passed else "FAIL"),
        ]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "skipped": self.skipped,
            "checks": [
                {**c.__dict__, "witness_ok": c.witness_ok, "search_ok": c.search_ok} for c in self.checks
            ],
        }


def verify_theorem(
    trials: int = 50, classes: int = 3, features: int = 4, seed: int = 0, budget: int = DEFAULT_BUDGET
) -> VerificationReport:
    """Witness and search checks on every column of ``trials`` random tables."""
    rng = np.random.default_rng(seed)
    checks, skipped = [], 0
    for trial in range(trials):
        p = FiniteJointModel.random(classes, features, rng)
        for x in range(features):
            col = p.pmf[:, x]
            top, runner = _top_two_at(p.pmf, x)
            if col[runner] <= 0:
                skipped += 1
                continue
            r_star = col[top] / col[runner]
            info, q = build_witness(p, x)
            qc = q.conditional(x)
            checks.append(
                ColumnCheck(
                    trial=trial,
                    column=x,
                    r_star=float(r_star),
                    witness_dstar=dstar_finite(p, q),
                    witness_gap=float(abs(qc[info.top] - qc[info.runner_up])),
                    search_min=min_flipping_dissimilarity(p, x, budget, seed=seed * 100_003 + trial * features + x),
                )
            )
    return VerificationReport(checks, skipped)
