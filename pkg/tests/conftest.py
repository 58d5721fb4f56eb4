import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from robustcor.models import table_from_predictions

# Fixed example sequence: the suite gives the same verdict on every run.
settings.register_profile("repro", derandomize=True, deadline=None)
settings.load_profile("repro")


@st.composite
def distributions(draw, min_classes=2, max_classes=6):
    k = draw(st.integers(min_classes, max_classes))
    w = draw(arrays(np.float64, k, elements=st.floats(0.0, 1.0, allow_subnormal=False)))
    if w.sum() <= 1e-3:
        w = w.copy()
        w[draw(st.integers(0, k - 1))] = 1.0
    return w / w.sum()


def binary_table(model_id, r_cors, labels, predicted=None, ids=None):
    """Two-class table whose rows have the requested r_cor values.

    For p = (a, 1 - a) with a >= 1/2, r_cor = 1 - (1 - a)/a, so a = 1/(2 - r).
    ``predicted`` flips the winning class per row.
    """
    r = np.asarray(r_cors, dtype=float)
    a = 1.0 / (2.0 - r)
    probs = np.column_stack([a, 1.0 - a])
    if predicted is not None:
        flip = np.asarray(predicted) == 1
        probs[flip] = probs[flip][:, ::-1]
    n = len(r)
    return table_from_predictions(model_id, ids or range(n), labels, probs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------- acceptance report

_ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): exit criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[number] = (title, report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, outcome = _ACCEPTANCE[number]
        verdict = "PASS" if outcome == "passed" else "FAIL" if outcome == "failed" else outcome.upper()
        terminalreporter.write_line(f"[{verdict}] {number:>2}. {title}")
