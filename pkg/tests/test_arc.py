from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from robustcor.arc import (
    ARCurve,
    ScoredOutcome,
    arc_from_arrays,
    average_arcs,
    build_arc,
    render_svg,
    write_arc_csv,
)
from robustcor.errors import InvalidInputError


def brute_force_arc(scores, correct, ids):
    """Reject the k lowest (score, id) outcomes one k at a time, with exact fractions."""
    items = sorted(zip(scores, ids, correct))
    n = len(items)
    return [(Fraction(k, n), Fraction(sum(c for *_, c in items[k:]), n - k)) for k in range(n)]


def test_example():
    curve = build_arc(
        [ScoredOutcome("a", 0.1, False), ScoredOutcome("b", 0.9, True), ScoredOutcome("c", 0.5, True)]
    )
    assert curve.points == [(0.0, 2 / 3), (1 / 3, 1.0), (2 / 3, 1.0)]


@pytest.mark.parametrize("flag, value", [(True, 1.0), (False, 0.0)])
def test_constant_outcomes(flag, value):
    curve = arc_from_arrays(np.random.default_rng(0).random(9), [flag] * 9)
    assert np.all(curve.accuracy == value)


def test_empty_rejected():
    with pytest.raises(InvalidInputError):
        build_arc([])


def test_ties_broken_by_instance_id():
    a = arc_from_arrays([0.5, 0.5], [True, False], ids=["b", "a"])
    # "a" (incorrect) is rejected first
    assert a.accuracy.tolist() == [0.5, 1.0]


outcome_lists = st.lists(
    st.tuples(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]) | st.floats(0, 1), st.booleans()),
    min_size=1,
    max_size=40,
)


@given(outcome_lists)
def test_matches_brute_force(rows):
    scores = [s for s, _ in rows]
    correct = [c for _, c in rows]
    ids = list(range(len(rows)))
    curve = arc_from_arrays(scores, correct, ids)
    expected = brute_force_arc(scores, correct, ids)
    assert curve.rejection.tolist() == [float(f) for f, _ in expected]
    assert curve.accuracy.tolist() == [float(a) for _, a in expected]
    assert Fraction(int(curve.correct[0]), int(curve.kept[0])) == Fraction(sum(correct), len(correct))


@given(outcome_lists)
def test_monotone_transform_invariance(rows):
    s = np.array([r[0] for r in rows])
    c = [r[1] for r in rows]
    a = arc_from_arrays(s, c)
    # dense rank, cubed and shifted: strictly increasing in exact arithmetic and in floats
    ranks = np.unique(s, return_inverse=True)[1].astype(float)
    assert a.identical_to(arc_from_arrays(ranks**3 - 7.5, c))
    assert a.identical_to(arc_from_arrays(4.0 * s, c))


@given(st.integers(0, 20), st.integers(1, 20), st.integers(0, 2**31))
def test_perfect_separation(n_bad, n_good, seed):
    rng = np.random.default_rng(seed)
    scores = np.concatenate([rng.uniform(0, 1, n_bad), rng.uniform(2, 3, n_good)])
    correct = [False] * n_bad + [True] * n_good
    curve = arc_from_arrays(scores, correct)
    n = n_bad + n_good
    hit = curve.rejection >= n_bad / n
    assert np.all(curve.accuracy[hit] == 1.0)
    assert curve.rejection[np.argmax(curve.accuracy == 1.0)] == n_bad / n


def test_average_examples():
    c1 = ARCurve(np.array([0.0, 0.5]), np.array([0.5, 1.0]), 2)
    c2 = ARCurve(np.array([0.0, 0.5]), np.array([0.7, 0.9]), 2)
    avg = average_arcs([c1, c2], grid_size=2)
    assert avg.rejection.tolist() == [0.0, 0.5]
    assert avg.accuracy[0] == pytest.approx(0.6)
    assert avg.accuracy[1] == pytest.approx(0.95)


def test_average_single_curve_on_own_grid():
    curve = arc_from_arrays(np.arange(5.0), [False, True, False, True, True])
    avg = average_arcs([curve], grid_size=5)
    np.testing.assert_allclose(avg.rejection, curve.rejection)
    assert avg.accuracy.tolist() == curve.accuracy.tolist()


def test_average_identical_curves():
    curve = arc_from_arrays(np.arange(7.0), [1, 0, 1, 1, 0, 1, 1])
    avg = average_arcs([curve, curve, curve], grid_size=7)
    np.testing.assert_allclose(avg.accuracy, curve.accuracy, rtol=0, atol=1e-15)


def test_average_left_continuous_between_points():
    curve = ARCurve(np.array([0.0, 0.5]), np.array([0.5, 1.0]), 2)
    # halfway between the two points the step already reads the next value
    assert curve.value_at(0.25) == 1.0
    assert curve.value_at(0.0) == 0.5


def test_average_mixed_sizes_uses_longest_grid():
    short = arc_from_arrays([0, 1], [False, True])
    long = arc_from_arrays(np.arange(4.0), [False, True, True, True])
    avg = average_arcs([short, long], grid_size=4)
    assert avg.rejection[-1] == pytest.approx(0.75)
    assert avg.accuracy[0] == pytest.approx((0.5 + 0.75) / 2)
    assert avg.accuracy[-1] == pytest.approx(1.0)


def test_average_preconditions():
    with pytest.raises(InvalidInputError):
        average_arcs([])
    with pytest.raises(InvalidInputError):
        average_arcs([arc_from_arrays([0.0], [True])], grid_size=1)


def test_csv_and_svg(tmp_path):
    curve = arc_from_arrays([0.1, 0.9, 0.5], [False, True, True])
    write_arc_csv(curve, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "rejection_fraction,accuracy"
    assert len(lines) == 4
    svg = render_svg({"r_cor": curve, "random<": curve}, title="t&t")
    assert svg.startswith("<svg") and "polyline" in svg and "&amp;" in svg and "&lt;" in svg
