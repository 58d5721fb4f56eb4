"""Exit criteria, one test per criterion, each at its fixed tolerance."""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from robustcor.arc import arc_from_arrays
from robustcor.cli import main
from robustcor.data import corrupt_labels
from robustcor.experiment import ExperimentConfig, arc_compare, run_experiment, split_arcs
from robustcor.metrics import cor_to_star, robustness_cor_many, robustness_star_many, star_to_cor
from robustcor.models import table_from_predictions
from robustcor.oracle import verify_theorem
from robustcor.selection import candidate_thresholds, fit_rsd, fit_rsi, route, table_ratios
from robustcor.synthetic import disjoint_regions, write_dataset_csv

ROOT = Path(__file__).resolve().parents[1]
WDBC = ROOT / "data" / "wdbc.csv"

acceptance = pytest.mark.acceptance


def random_table(rng, model_id, n, k, labels=None, concentration=None):
    labels = rng.integers(0, k, n) if labels is None else labels
    alpha = concentration if concentration is not None else rng.uniform(0.3, 3.0)
    return table_from_predictions(model_id, range(n), labels, rng.dirichlet(np.full(k, alpha), n))


def check_base_point(curve, correct):
    """accuracy at rejection 0 is the overall accuracy, compared as integer counts."""
    correct = np.asarray(correct, dtype=bool)
    assert int(curve.kept[0]) == len(correct)
    assert int(curve.correct[0]) == int(correct.sum())
    assert curve.accuracy[0] == int(correct.sum()) / len(correct)


@acceptance(1, "closed form sandwiched by witness and brute-force search (50 tables, K=3, M=4)")
def test_oracle_sandwich():
    start = time.perf_counter()
    report = verify_theorem(trials=50, classes=3, features=4, seed=2024, budget=10_000)
    elapsed = time.perf_counter() - start
    print(report.summary())
    assert len(report.checks) + report.skipped == 200
    assert report.skipped == 0
    for c in report.checks:
        assert abs(c.witness_dstar - c.r_star) <= 1e-9 * c.r_star
        assert c.witness_gap <= 1e-9
        assert c.search_min >= c.r_star * (1 - 1e-9)
    assert elapsed < 60


@acceptance(2, "metric conversions round-trip within 1e-12 with zero order inversions (10,000 dists)")
def test_metric_round_trip():
    rng = np.random.default_rng(7)
    rows = []
    for k in range(2, 11):
        rows.append(rng.dirichlet(np.full(k, rng.uniform(0.5, 5.0)), 10_000 // 9 + 1))
    cor_parts, star_parts = [], []
    for P in rows:
        cor_parts.append(robustness_cor_many(P))
        star_parts.append(robustness_star_many(P))
    cor = np.concatenate(cor_parts)[:10_000]
    star = np.concatenate(star_parts)[:10_000]
    assert len(cor) == 10_000
    assert np.all((cor >= 0) & (cor <= 1))
    assert np.all(star >= 1)
    for c, s in zip(cor, star):
        # ratio scale is compared relatively: its absolute spacing grows with s
        assert abs(cor_to_star(star_to_cor(s)) - s) <= 1e-12 * s
        assert abs(star_to_cor(cor_to_star(c)) - c) <= 1e-12
        assert abs(star_to_cor(s) - c) <= 1e-12
    order = np.lexsort((star, cor))
    inversions = int(np.sum(np.diff(star[order]) < 0))
    assert inversions == 0


@acceptance(3, "ARC at rejection 0 equals overall accuracy exactly")
def test_arc_base_point():
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 300))
        t = random_table(rng, "m", n, int(rng.integers(2, 6)))
        correct = t.correct()
        for scores in (robustness_cor_many(t.probs), robustness_star_many(t.probs), rng.random(n)):
            check_base_point(arc_from_arrays(scores, correct, t.ids), correct)


@acceptance(4, "ARCs ordered by r_cor and r_star are bit-identical (20 tables)")
def test_arc_monotone_invariance():
    rng = np.random.default_rng(4)
    for i in range(20):
        n = int(rng.integers(50, 500))
        k = int(rng.integers(2, 6))
        t = random_table(rng, "m", n, k)
        if i % 4 == 0:
            # exact ties and zero-robustness rows stress the tie rule
            probs = np.array(t.probs)
            probs[: n // 5] = np.full(k, 1.0 / k)
            t = table_from_predictions("m", t.ids, t.labels, probs)
        by_cor = arc_from_arrays(robustness_cor_many(t.probs), t.correct(), t.ids)
        by_star = arc_from_arrays(robustness_star_many(t.probs), t.correct(), t.ids)
        assert by_cor.identical_to(by_star)
        check_base_point(by_cor, t.correct())


@acceptance(5, "RS-D validation accuracy >= max(M1, M2) on 100 random tables")
def test_rsd_dominance():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n = int(rng.integers(5, 400))
        k = int(rng.integers(2, 5))
        labels = rng.integers(0, k, n)
        a = random_table(rng, "A", n, k, labels)
        b = random_table(rng, "B", n, k, labels)
        m1, m2 = (a, b) if a.accuracy() >= b.accuracy() else (b, a)
        policy = fit_rsd(m1, m2)
        _, pred, _ = route(policy, m1, m2)
        hits = int((pred == labels).sum())
        assert hits >= max(int(m1.correct().sum()), int(m2.correct().sum()))


def max_tail_gain(m1, m2):
    z = table_ratios(m1, m2)
    c1, c2 = m1.correct(), m2.correct()
    best = -math.inf
    for t in [-math.inf, *np.unique(z).tolist()]:
        tail = z > t
        if tail.any():
            best = max(best, (int(c2[tail].sum()) - int(c1[tail].sum())) / int(tail.sum()))
    return best


def dominated_pair(rng, n, k):
    """M2 is right only where M1 is right, so no tail favours M2."""
    labels = rng.integers(0, k, n)
    m1 = random_table(rng, "M1", n, k, labels)
    probs2 = rng.dirichlet(np.full(k, rng.uniform(0.3, 3.0)), n)
    wrong1 = ~m1.correct()
    # wherever M1 errs, force M2's top class off the true label
    for i in np.flatnonzero(wrong1):
        if probs2[i].argmax() == labels[i]:
            probs2[i] = np.roll(probs2[i], 1)
            if probs2[i].argmax() == labels[i]:
                probs2[i] = np.eye(k)[(labels[i] + 1) % k] * 0.9 + 0.1 / k
    return m1, table_from_predictions("M2", range(n), labels, probs2)


def adversarial_pairs():
    labels = np.array([0, 1, 0, 1, 1, 0])
    p = np.array([[0.6, 0.4], [0.3, 0.7], [0.5, 0.5], [0.2, 0.8], [0.9, 0.1], [1.0, 0.0]])
    same = table_from_predictions("M1", range(6), labels, p)
    yield same, table_from_predictions("M2", range(6), labels, p)  # identical models
    always_wrong = table_from_predictions("M2", range(6), labels, np.eye(2)[1 - labels] * 0.8 + 0.1)
    yield same, always_wrong  # M2 never right
    tied = table_from_predictions("M2", range(6), labels, np.full((6, 2), 0.5))
    yield same, tied  # M2 always at a prediction tie (r2 = 0)
    zero = table_from_predictions("M1", range(6), labels, np.full((6, 2), 0.5))
    yield zero, tied  # 0/0 everywhere, ratio 1
    m2_mirror = table_from_predictions("M2", range(6), labels, p[:, ::-1])
    yield same, m2_mirror  # gains exactly cancel in every tail? checked by max_tail_gain


@acceptance(6, "RS-I without positive gain reproduces M1 bit-identically")
def test_rsi_degenerate_reduction():
    rng = np.random.default_rng(6)
    cases = list(adversarial_pairs())
    cases += [dominated_pair(rng, int(rng.integers(3, 300)), int(rng.integers(2, 5))) for _ in range(100)]
    checked = 0
    for m1, m2 in cases:
        if max_tail_gain(m1, m2) > 0:
            continue
        checked += 1
        policy = fit_rsi(m1, m2)
        assert policy.threshold == math.inf
        n, k = len(m1), m1.class_count
        t1 = random_table(rng, "M1", n, k)
        t2 = random_table(rng, "M2", n, k, t1.labels)
        for a, b in ((t1, t2), (m1, m2)):
            _, pred, _ = route(policy, a, b)
            assert np.array_equal(pred, a.predicted())
    assert checked >= 100


@acceptance(7, "label corruption rate within 3 sigma of Binomial(n, rho) in >= 19/20 seeds")
@pytest.mark.parametrize("rho", [0.05, 0.1, 0.2])
def test_corruption_rate(rho):
    n = 10_000
    sigma = math.sqrt(n * rho * (1 - rho))
    rng = np.random.default_rng(int(rho * 1000))
    inside = 0
    for seed in range(20):
        labels = rng.integers(0, 3, n)
        changed = int((corrupt_labels(labels, rho, 3, seed) != labels).sum())
        inside += abs(changed - n * rho) <= 3 * sigma
    assert inside >= 19


@acceptance(8, "wdbc random forest: robustness-ordered ARC >= random-ordered ARC at 0.25 and 0.50 (15 splits)")
def test_qualitative_arc():
    start = time.perf_counter()
    cfg = ExperimentConfig.from_dict(
        {
            "datasets": [{"path": str(WDBC), "label_column": "diagnosis", "name": "wdbc"}],
            "classifiers": [{"id": "rf", "kind": "random_forest", "hyperparameters": {"tree_count": 100}}],
            "strategies": ["SingleBest"],
            "split_count": 15,
            "base_seed": 0,
        }
    )
    curves = arc_compare(cfg, ["robustness_cor", "random"])["wdbc"]
    robust, rand = curves["robustness_cor"], curves["random"]
    for f in (0.25, 0.50):
        print(f"rejection {f:.2f}: robustness {robust.value_at(f):.5f}  random {rand.value_at(f):.5f}")
        assert robust.value_at(f) >= rand.value_at(f)
    assert robust.accuracy[0] == rand.accuracy[0]
    assert time.perf_counter() - start < 300


@acceptance(9, "disjoint-error synthetic data: RS-D mean test accuracy > SingleBest (15 splits)")
def test_qualitative_ds(tmp_path):
    path = tmp_path / "synthetic.csv"
    write_dataset_csv(disjoint_regions(n=1500, seed=0), path)
    cfg = ExperimentConfig.from_dict(
        {
            "datasets": [{"path": str(path), "label_column": "y", "name": "disjoint"}],
            "classifiers": [
                {"id": "nb", "kind": "gaussian_nb"},
                {"id": "knn", "kind": "knn", "hyperparameters": {"k": 15}},
            ],
            "split_count": 15,
            "base_seed": 0,
        }
    )
    first = run_experiment(cfg)
    rsd = first.row("disjoint", 0.0, "RS-D").mean_accuracy
    sb = first.row("disjoint", 0.0, "SingleBest").mean_accuracy
    print(f"RS-D {rsd:.5f}  SingleBest {sb:.5f}")
    assert rsd > sb
    second = run_experiment(cfg)
    assert [r.per_split for r in second.rows] == [r.per_split for r in first.rows]


CONFIG = """
version = 1
split_count = 3
base_seed = 11
rhos = [0.0, 0.05]
strategies = ["SingleBest", "RS-D", "RS-I"]

[[datasets]]
path = "synthetic.csv"
label_column = "y"
name = "disjoint"

[[classifiers]]
id = "rf"
kind = "random_forest"
[classifiers.hyperparameters]
tree_count = 10
[classifiers.grid]
max_depth = [3, 6]

[[classifiers]]
id = "knn"
kind = "knn"
[classifiers.grid]
k = [5, 15]

[[classifiers]]
id = "nb"
kind = "gaussian_nb"
"""


@acceptance(10, "experiment run twice gives a byte-identical ResultTable CSV")
def test_end_to_end_determinism(tmp_path):
    write_dataset_csv(disjoint_regions(n=400, seed=3), tmp_path / "synthetic.csv")
    (tmp_path / "c.toml").write_text(CONFIG)
    outputs = []
    for run in ("a", "b"):
        assert main(["experiment", "run", "--config", str(tmp_path / "c.toml"), "--out", str(tmp_path / run)]) == 0
        outputs.append((tmp_path / run / "results.csv").read_bytes())
    assert outputs[0] == outputs[1]
    assert outputs[0].startswith(b"dataset,rho,method,mean_accuracy,wins_vs_sb\n")
