import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustcor import metrics as m
from robustcor.errors import InvalidInputError

from conftest import distributions


@pytest.mark.parametrize(
    "probs, expected",
    [([0.6, 0.3, 0.1], (0, 1)), ([1 / 3, 1 / 3, 1 / 3], (0, 1)), ([0.1, 0.2, 0.7], (2, 1))],
)
def test_top_two(probs, expected):
    assert m.top_two(probs) == expected


@pytest.mark.parametrize(
    "probs, r_cor, r_star",
    [([0.6, 0.3, 0.1], 0.5, 2.0), ([1 / 3, 1 / 3, 1 / 3], 0.0, 1.0), ([1.0, 0.0], 1.0, math.inf)],
)
def test_closed_forms(probs, r_cor, r_star):
    assert m.robustness_cor(probs) == pytest.approx(r_cor, abs=1e-15)
    assert m.robustness_star(probs) == pytest.approx(r_star, rel=1e-15)


def test_star_to_cor_examples():
    assert m.star_to_cor(2.0) == 0.5
    assert m.star_to_cor(1.0) == 0.0
    assert m.star_to_cor(math.inf) == 1.0
    assert m.cor_to_star(1.0) == math.inf
    assert m.cor_to_star(0.5) == 2.0


@pytest.mark.parametrize("bad", [0.999, -1.0, float("nan")])
def test_star_to_cor_rejects_below_one(bad):
    with pytest.raises(InvalidInputError):
        m.star_to_cor(bad)


@pytest.mark.parametrize(
    "bad",
    [[1.0], [0.5, 0.49], [0.6, 0.6], [1.2, -0.2], [0.0, 0.0], [float("nan"), 1.0]],
)
def test_invalid_distributions_rejected(bad):
    with pytest.raises(InvalidInputError):
        m.robustness(bad)


def test_sum_tolerance_is_not_repaired():
    m.ClassDistribution.of([0.5, 0.5 + 5e-7])
    with pytest.raises(InvalidInputError):
        m.ClassDistribution.of([0.5, 0.5 + 2e-6])


def test_score_fields_consistent():
    s = m.robustness(m.ClassDistribution.of([0.2, 0.5, 0.3]))
    assert (s.top, s.runner_up) == (1, 2)
    assert s.r_cor == pytest.approx(1 - 1 / s.r_star)


@given(distributions())
def test_ranges(p):
    s = m.robustness(p)
    assert 0.0 <= s.r_cor <= 1.0
    assert s.r_star >= 1.0
    assert s.top != s.runner_up
    assert (s.r_cor == 0.0) == (p[s.top] == p[s.runner_up])
    assert (s.r_cor == 1.0) == math.isinf(s.r_star)


@given(distributions(), distributions())
def test_orderings_agree(a, b):
    ca, cb = m.robustness_cor(a), m.robustness_cor(b)
    sa, sb = m.robustness_star(a), m.robustness_star(b)
    assert not (ca < cb and sa > sb)
    assert not (ca > cb and sa < sb)


@given(distributions(), st.randoms(use_true_random=False))
def test_permutation_equivariance(p, rnd):
    perm = list(range(len(p)))
    rnd.shuffle(perm)
    q = p[perm]  # q[i] = p[perm[i]]
    s, t = m.robustness(p), m.robustness(q)
    assert t.r_cor == s.r_cor and t.r_star == s.r_star
    # Classes keep their probabilities; with no ties the labels follow the permutation.
    if len(set(p.tolist())) == len(p):
        assert (perm[t.top], perm[t.runner_up]) == (s.top, s.runner_up)


@given(distributions(), st.floats(1e-3, 1e3))
def test_joint_form_matches_conditional(p, scale):
    joint = p * scale
    s_joint, s_cond = m.robustness_from_joint(joint), m.robustness(p)
    assert s_joint.r_cor == pytest.approx(s_cond.r_cor, abs=1e-12)
    assert (s_joint.top, s_joint.runner_up) == (s_cond.top, s_cond.runner_up)


@given(st.floats(1.0, 1e6))
def test_round_trip_star(s):
    assert m.cor_to_star(m.star_to_cor(s)) == pytest.approx(s, rel=1e-12 * max(1.0, s))


@given(st.floats(0.0, 1.0))
def test_round_trip_cor(c):
    assert abs(m.star_to_cor(m.cor_to_star(c)) - c) <= 1e-15


@settings(max_examples=50)
@given(st.lists(distributions(min_classes=3, max_classes=3), min_size=1, max_size=20))
def test_batch_matches_scalar(rows):
    P = np.array(rows)
    assert np.array_equal(m.robustness_cor_many(P), [m.robustness_cor(r) for r in rows])
    assert np.array_equal(m.robustness_star_many(P), [m.robustness_star(r) for r in rows])
