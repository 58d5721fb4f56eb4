"""Multi-split experiment protocol.

Per split: seeded 0.7/0.15/0.15 partition, optional label corruption of the
train and validation parts, per-classifier grid search on train, ranking by
validation accuracy (M1, M2), RS-D / RS-I thresholds fitted on validation,
and a final evaluation on the untouched test part.  Split ``i`` uses seed
``base_seed + i`` for everything random in it.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import arc as arc_mod
from .data import Dataset, SplitSpec, corrupt_labels, load_csv, split_indices
from .errors import ExperimentError, InvalidInputError, RobustcorError
from .metrics import robustness_cor_many, robustness_star_many
from .models import ClassifierSpec, expand_grid, fit, grid_search_cv, predict_proba
from .models.table import PredictionTable
from .selection import SINGLE_BEST, STRATEGIES, fit_policy, policy_accuracy

CONFIG_VERSION = 1
ARC_KEYS = ("robustness_cor", "robustness_star", "external_score_column", "random")


@dataclass(frozen=True)
class DatasetConfig:
    path: Path
    label_column: str
    name: str
    categorical: tuple = ()
    continuous: tuple = ()
    drop: tuple = ()
    score_column: str | None = None

    def load(self) -> Dataset:
        keep = (self.score_column,) if self.score_column else ()
        return load_csv(
            self.path,
            self.label_column,
            categorical=self.categorical,
            continuous=self.continuous,
            drop=self.drop,
            keep=keep,
            name=self.name,
        )


@dataclass(frozen=True)
class ClassifierConfig:
    id: str
    kind: str
    hyperparameters: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    seed: int = 0

    def candidates(self, seed: int) -> list[ClassifierSpec]:
        return expand_grid(self.kind, self.grid, seed=self.seed + seed, fixed=self.hyperparameters)


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: tuple
    classifiers: tuple
    split_count: int = 15
    proportions: tuple = (0.7, 0.15, 0.15)
    base_seed: int = 0
    strategies: tuple = STRATEGIES
    rhos: tuple = (0.0,)
    corrupt_parts: tuple = ("train", "validation")
    corruption_mode: str = "bernoulli"
    corrupt_other_classes: bool = True
    cv_folds: int = 5
    output_dir: Path | None = None
    arc_model: str | None = None
    arc_keys: tuple = ("robustness_cor", "random")
    arc_grid_size: int = arc_mod.DEFAULT_GRID

    def __post_init__(self):
        if self.split_count < 1:
            raise InvalidInputError("split_count must be >= 1")
        if not self.datasets:
            raise InvalidInputError("config needs at least one dataset")
        if not self.classifiers:
            raise InvalidInputError("config needs at least one classifier")
        ids = [c.id for c in self.classifiers]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("classifier ids must be unique")
        if any(s not in STRATEGIES for s in self.strategies):
            raise InvalidInputError(f"strategies must be drawn from {STRATEGIES}")
        if any(s != SINGLE_BEST for s in self.strategies) and len(self.classifiers) < 2:
            raise InvalidInputError("RS-D / RS-I need at least two classifiers")
        if any(not 0.0 <= r <= 1.0 for r in self.rhos):
            raise InvalidInputError("rho values must lie in [0, 1]")
        if any(p not in ("train", "validation") for p in self.corrupt_parts):
            raise InvalidInputError("corrupt_parts may only name 'train' and 'validation'")
        if self.corruption_mode not in ("bernoulli", "exact"):
            raise InvalidInputError("corruption_mode must be 'bernoulli' or 'exact'")
        if any(k not in ARC_KEYS for k in self.arc_keys):
            raise InvalidInputError(f"arc keys must be drawn from {ARC_KEYS}")
        SplitSpec(self.proportions, self.base_seed)

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        base_dir = Path(base_dir or ".")
        version = d.get("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise InvalidInputError(f"unsupported config version {version!r}")
        raw_ds = d.get("datasets") or ([d["dataset"]] if "dataset" in d else [])
        datasets = tuple(
            DatasetConfig(
                path=(base_dir / r["path"]).resolve() if not Path(r["path"]).is_absolute() else Path(r["path"]),
                label_column=r["label_column"],
                name=r.get("name") or Path(r["path"]).stem,
                categorical=tuple(r.get("categorical", ())),
                continuous=tuple(r.get("continuous", ())),
                drop=tuple(r.get("drop", ())),
                score_column=r.get("score_column") or None,
            )
            for r in raw_ds
        )
        classifiers = tuple(
            ClassifierConfig(
                id=c["id"],
                kind=c["kind"],
                hyperparameters=dict(c.get("hyperparameters", {})),
                grid=dict(c.get("grid", {})),
                seed=int(c.get("seed", 0)),
            )
            for c in d.get("classifiers", ())
        )
        arc_cfg = d.get("arc", {})
        out = d.get("output_dir")
        return cls(
            datasets=datasets,
            classifiers=classifiers,
            split_count=int(d.get("split_count", 15)),
            proportions=tuple(d.get("proportions", (0.7, 0.15, 0.15))),
            base_seed=int(d.get("base_seed", 0)),
            strategies=tuple(d.get("strategies", STRATEGIES)),
            rhos=tuple(float(r) for r in d.get("rhos", (0.0,))),
            corrupt_parts=tuple(d.get("corrupt_parts", ("train", "validation"))),
            corruption_mode=d.get("corruption_mode", "bernoulli"),
            corrupt_other_classes=bool(d.get("corrupt_other_classes", True)),
            cv_folds=int(d.get("cv_folds", 5)),
            output_dir=(base_dir / out).resolve() if out else None,
            arc_model=arc_cfg.get("model"),
            arc_keys=tuple(arc_cfg.get("keys", ("robustness_cor", "random"))),
            arc_grid_size=int(arc_cfg.get("grid_size", arc_mod.DEFAULT_GRID)),
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        import tomli

        path = Path(path)
        try:
            with open(path, "rb") as fh:
                raw = tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise InvalidInputError(f"{path}: {exc}") from exc
        try:
            return cls.from_dict(raw, base_dir=path.parent)
        except KeyError as exc:
            raise InvalidInputError(f"{path}: missing key {exc}") from exc


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    rho: float
    method: str
    per_split: tuple
    wins_vs_sb: int

    @property
    def mean_accuracy(self) -> float:
        return math.fsum(self.per_split) / len(self.per_split)


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    splits: list = field(default_factory=list)  # per-split artifact dicts

    def row(self, dataset: str, rho: float, method: str) -> ResultRow:
        for r in self.rows:
            if r.dataset == dataset and r.rho == rho and r.method == method:
                return r
        raise KeyError((dataset, rho, method))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset", "rho", "method", "mean_accuracy", "wins_vs_sb"])
            for r in self.rows:
                w.writerow([r.dataset, repr(r.rho), r.method, repr(r.mean_accuracy), r.wins_vs_sb])

    def write_per_split_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset", "rho", "method", "split", "accuracy"])
            for r in self.rows:
                for i, a in enumerate(r.per_split):
                    w.writerow([r.dataset, repr(r.rho), r.method, i, repr(a)])

    def summary(self) -> str:
        lines = [f"{'dataset':<16} {'rho':>5} {'method':<14} {'mean acc':>9}  beats SB"]
        for r in self.rows:
            lines.append(
                f"{r.dataset:<16} {r.rho:>5.2f} {r.method:<14} {r.mean_accuracy:>9.5f}  {'yes' if r.wins_vs_sb else ''}"
            )
        return "\n".join(lines)


def _stage(split_index, stage):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, et, ev, tb):
            if et is not None and issubclass(et, RobustcorError) and not isinstance(ev, ExperimentError):
                raise ExperimentError(str(ev), split_index=split_index, stage=stage) from ev
            return False

    return _Ctx()


def _fit_and_predict(cfg: ExperimentConfig, clf: ClassifierConfig, train: Dataset, parts, seed: int):
    candidates = clf.candidates(seed)
    spec = candidates[0]
    if len(candidates) > 1:
        spec = grid_search_cv(candidates, train.features, train.labels, folds=cfg.cv_folds, seed=seed)
    model = fit(spec, train.features, train.labels, class_count=train.class_count)
    tables = [
        predict_proba(model, ds.features, labels=ds.labels, ids=ids, model_id=clf.id) for ds, ids in parts
    ]
    return spec, tables


def run_split(cfg: ExperimentConfig, ds: Dataset, split_index: int, rho: float) -> dict:
    """One split of the protocol; returns a JSON-serialisable artifact dict."""
    seed = cfg.base_seed + split_index
    with _stage(split_index, "split"):
        idx = split_indices(ds.n, SplitSpec(cfg.proportions, seed))
    train_y = ds.labels[idx.train]
    val_y = ds.labels[idx.validation]
    changed = {"train": 0, "validation": 0}
    if rho > 0:
        with _stage(split_index, "corruption"):
            mode = cfg.corruption_mode == "exact"
            # distinct streams for the two parts
            if "train" in cfg.corrupt_parts:
                new = corrupt_labels(train_y, rho, ds.class_count, seed * 2, mode, cfg.corrupt_other_classes)
                changed["train"] = int((new != train_y).sum())
                train_y = new
            if "validation" in cfg.corrupt_parts:
                new = corrupt_labels(val_y, rho, ds.class_count, seed * 2 + 1, mode, cfg.corrupt_other_classes)
                changed["validation"] = int((new != val_y).sum())
                val_y = new
    train = ds.subset(idx.train, labels=train_y)
    val = ds.subset(idx.validation, labels=val_y)
    test = ds.subset(idx.test)

    val_tables: dict[str, PredictionTable] = {}
    test_tables: dict[str, PredictionTable] = {}
    chosen = {}
    for clf in cfg.classifiers:
        with _stage(split_index, f"fit {clf.id}"):
            spec, (vt, tt) = _fit_and_predict(
                cfg, clf, train, [(val, tuple(idx.validation.tolist())), (test, tuple(idx.test.tolist()))], seed
            )
        chosen[clf.id] = spec.to_dict()
        val_tables[clf.id] = vt
        test_tables[clf.id] = tt

    val_acc = {k: t.accuracy() for k, t in val_tables.items()}
    test_acc = {k: t.accuracy() for k, t in test_tables.items()}
    # Ties in validation accuracy keep config order.
    ranking = sorted(range(len(cfg.classifiers)), key=lambda i: -val_acc[cfg.classifiers[i].id])
    m1 = cfg.classifiers[ranking[0]].id
    m2 = cfg.classifiers[ranking[1]].id if len(ranking) > 1 else m1

    policies, val_policy_acc, strategy_test_acc = {}, {}, {}
    for strategy in cfg.strategies:
        with _stage(split_index, f"fit {strategy}"):
            policy = fit_policy(strategy, val_tables[m1], val_tables[m2])
            policies[strategy] = policy.to_dict()
            val_policy_acc[strategy] = policy_accuracy(policy, val_tables[m1], val_tables[m2])
            strategy_test_acc[strategy] = policy_accuracy(policy, test_tables[m1], test_tables[m2])

    return {
        "dataset": ds.name,
        "rho": rho,
        "split_index": split_index,
        "seed": seed,
        "split": idx.to_manifest(),
        "labels_changed": changed,
        "selected_specs": chosen,
        "validation_accuracy": val_acc,
        "m1": m1,
        "m2": m2,
        "policies": policies,
        "validation_policy_accuracy": val_policy_acc,
        "test_accuracy": {**test_acc, **strategy_test_acc},
    }


def run_experiment(cfg: ExperimentConfig, output_dir: Path | None = None) -> ResultTable:
    output_dir = Path(output_dir) if output_dir else cfg.output_dir
    table = ResultTable()
    for dcfg in cfg.datasets:
        ds = dcfg.load()
        for rho in cfg.rhos:
            artifacts = [run_split(cfg, ds, i, rho) for i in range(cfg.split_count)]
            table.splits.extend(artifacts)
            methods = [c.id for c in cfg.classifiers] + list(cfg.strategies)
            per_method = {m: tuple(a["test_accuracy"][m] for a in artifacts) for m in methods}
            sb = per_method.get(SINGLE_BEST) or tuple(a["test_accuracy"][a["m1"]] for a in artifacts)
            sb_mean = math.fsum(sb) / len(sb)
            for m in methods:
                mean = math.fsum(per_method[m]) / len(per_method[m])
                wins = int(m != SINGLE_BEST and mean > sb_mean)
                table.rows.append(ResultRow(ds.name, rho, m, per_method[m], wins))
    if output_dir is not None:
        write_outputs(table, output_dir)
    return table


def write_outputs(table: ResultTable, output_dir) -> None:
    out = Path(output_dir)
    (out / "splits").mkdir(parents=True, exist_ok=True)
    table.write_csv(out / "results.csv")
    table.write_per_split_csv(out / "per_split.csv")
    for a in table.splits:
        name = f"{a['dataset']}_rho{a['rho']:g}_split{a['split_index']:02d}.json"
        (out / "splits" / name).write_text(json.dumps(a, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _arc_scores(key: str, table: PredictionTable, test: Dataset, score_column, seed: int) -> np.ndarray:
    if key == "robustness_cor":
        return robustness_cor_many(table.probs)
    if key == "robustness_star":
        return robustness_star_many(table.probs)
    if key == "random":
        return np.random.default_rng(seed).random(len(table))
    if key == "external_score_column":
        if not score_column:
            raise InvalidInputError("ordering key external_score_column needs datasets.score_column")
        return np.asarray(test.extra[score_column], dtype=float)
    raise InvalidInputError(f"unknown ordering key {key!r}")


def _arc_classifier(cfg: ExperimentConfig) -> ClassifierConfig:
    model_id = cfg.arc_model or cfg.classifiers[0].id
    clf = next((c for c in cfg.classifiers if c.id == model_id), None)
    if clf is None:
        raise InvalidInputError(f"arc model {model_id!r} is not a configured classifier")
    return clf


def split_arcs(cfg: ExperimentConfig, dcfg: DatasetConfig, keys: Sequence[str], ds: Dataset | None = None) -> dict:
    """Test-set ARC of the configured model for every split and ordering key."""
    for k in keys:
        if k not in ARC_KEYS:
            raise InvalidInputError(f"unknown ordering key {k!r}; expected one of {ARC_KEYS}")
    clf = _arc_classifier(cfg)
    ds = ds or dcfg.load()
    per_key = {k: [] for k in keys}
    for i in range(cfg.split_count):
        seed = cfg.base_seed + i
        with _stage(i, "split"):
            idx = split_indices(ds.n, SplitSpec(cfg.proportions, seed))
        train, test = ds.subset(idx.train), ds.subset(idx.test)
        with _stage(i, f"fit {clf.id}"):
            _, (tt,) = _fit_and_predict(cfg, clf, train, [(test, tuple(idx.test.tolist()))], seed)
        correct = tt.correct()
        for k in keys:
            with _stage(i, f"arc {k}"):
                scores = _arc_scores(k, tt, test, dcfg.score_column, seed)
                per_key[k].append(arc_mod.arc_from_arrays(scores, correct, tt.ids))
    return per_key


def arc_compare(
    cfg: ExperimentConfig, ordering_keys: Sequence[str] | None = None, output_dir: Path | None = None
) -> dict:
    """Average test-set ARC per ordering key over all splits, per dataset.

    No label corruption is applied here.  Returns
    ``{dataset: {key: averaged ARCurve}}`` and, when an output directory is
    known, writes one CSV per (dataset, key) and one SVG per dataset.
    """
    keys = tuple(ordering_keys or cfg.arc_keys)
    clf = _arc_classifier(cfg)
    output_dir = Path(output_dir) if output_dir else cfg.output_dir
    results = {}
    for dcfg in cfg.datasets:
        ds = dcfg.load()
        per_key = split_arcs(cfg, dcfg, keys, ds)
        averaged = {k: arc_mod.average_arcs(v, cfg.arc_grid_size) for k, v in per_key.items()}
        results[ds.name] = averaged
        if output_dir is not None:
            out = Path(output_dir) / "arc"
            out.mkdir(parents=True, exist_ok=True)
            for k, c in averaged.items():
                arc_mod.write_arc_csv(c, out / f"{ds.name}_{k}.csv")
            (out / f"{ds.name}_arc.svg").write_text(
                arc_mod.render_svg(averaged, title=f"{ds.name}: {clf.id}"), encoding="utf-8"
            )
    return results
