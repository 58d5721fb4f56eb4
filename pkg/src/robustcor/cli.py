"""Command-line entry point.

Exit codes: 0 success, 1 check failed (oracle), 2 usage error, 3 invalid data
or configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import arc as arc_mod
from .data import SplitSpec, corrupt_labels, load_csv, split_indices, write_manifest
from .errors import RobustcorError
from .experiment import ARC_KEYS, ExperimentConfig, arc_compare, run_experiment
from .metrics import robustness_cor_many, robustness_star_many, top_two_many
from .models import ingest_predictions
from .oracle import DEFAULT_BUDGET, verify_theorem
from .selection import RS_D, RS_I, SelectionPolicy, apply_policy, fit_policy, policy_accuracy

EXIT_FAILED = 1
EXIT_DATA = 3


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_score(args) -> int:
    table = ingest_predictions(args.preds)
    top, runner = top_two_many(table.probs)
    cor = robustness_cor_many(table.probs)
    star = robustness_star_many(table.probs)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_id", "predicted", "runner_up", "r_cor", "r_star"])
        for row in zip(table.ids, top, runner, cor, star):
            w.writerow([row[0], int(row[1]), int(row[2]), _fmt(row[3]), _fmt(row[4])])
    print(f"scored {len(table)} predictions; mean r_cor {cor.mean():.5f}" if len(table) else "no predictions")
    return 0


def cmd_arc(args) -> int:
    if args.config:
        cfg = ExperimentConfig.load(args.config)
        keys = args.key or None
        results = arc_compare(cfg, keys, output_dir=args.out_dir)
        for name, curves in results.items():
            for k, c in curves.items():
                print(f"{name} {k:<22} acc@0 {c.value_at(0):.5f}  acc@0.25 {c.value_at(0.25):.5f}  "
                      f"acc@0.50 {c.value_at(0.5):.5f}")
        return 0
    if not args.preds or not args.out:
        print("arc: need --preds and --out, or --config", file=sys.stderr)
        return 2
    table = ingest_predictions(args.preds)
    curves = {}
    for key in args.key or ["robustness_cor"]:
        if key == "robustness_cor":
            scores = robustness_cor_many(table.probs)
        elif key == "robustness_star":
            scores = robustness_star_many(table.probs)
        elif key == "random":
            scores = np.random.default_rng(args.seed).random(len(table))
        else:
            print(f"arc: key {key!r} needs --config", file=sys.stderr)
            return 2
        curves[key] = arc_mod.arc_from_arrays(scores, table.correct(), table.ids)
    if len(curves) == 1:
        arc_mod.write_arc_csv(next(iter(curves.values())), args.out)
    else:
        out = Path(args.out)
        for k, c in curves.items():
            arc_mod.write_arc_csv(c, out.with_name(f"{out.stem}_{k}{out.suffix}"))
    if args.svg:
        Path(args.svg).write_text(arc_mod.render_svg(curves, title=table.model_id), encoding="utf-8")
    for k, c in curves.items():
        print(f"{k:<16} n={c.n} acc@0 {c.accuracy[0]:.5f}")
    return 0


def cmd_ds_fit(args) -> int:
    m1 = ingest_predictions(args.val_m1, model_id=args.m1_id)
    m2 = ingest_predictions(args.val_m2, model_id=args.m2_id)
    policy = fit_policy(args.strategy, m1, m2)
    Path(args.out).write_text(policy.to_json(), encoding="utf-8")
    print(f"{policy.strategy}: t = {policy.threshold}  validation accuracy "
          f"{policy_accuracy(policy, m1, m2):.5f} (M1 {m1.accuracy():.5f}, M2 {m2.accuracy():.5f})")
    return 0


def cmd_ds_apply(args) -> int:
    policy = SelectionPolicy.from_json(Path(args.policy).read_text(encoding="utf-8"))
    m1 = ingest_predictions(args.test_m1, model_id=policy.m1_id)
    m2 = ingest_predictions(args.test_m2, model_id=policy.m2_id)
    routed = apply_policy(policy, m1, m2)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_id", "chosen_model", "predicted_class", "ratio"])
        for r in routed:
            w.writerow([r.instance_id, r.chosen_model, r.predicted_class, _fmt(r.ratio)])
    n_m2 = sum(r.chosen_model == policy.m2_id for r in routed) if policy.m1_id != policy.m2_id else 0
    print(f"routed {len(routed)} instances, {n_m2} to {policy.m2_id}; "
          f"accuracy {policy_accuracy(policy, m1, m2):.5f}")
    return 0


def cmd_data_split(args) -> int:
    ds = load_csv(args.data, args.label)
    idx = split_indices(ds.n, SplitSpec(tuple(args.proportions), args.seed), ds.labels, args.stratified)
    write_manifest(idx, args.out)
    print(f"split n={ds.n} into {len(idx.train)}/{len(idx.validation)}/{len(idx.test)}")
    return 0


def cmd_data_corrupt(args) -> int:
    ds = load_csv(args.data, args.label)
    new = corrupt_labels(ds.labels, args.rho, ds.class_count, args.seed, args.exact, not args.any_class)
    with open(args.data, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    j = header.index(args.label)
    body = [r for r in rows[1:] if r and any(c.strip() for c in r)]
    for r, y in zip(body, new):
        r[j] = ds.class_names[y]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(rows[0])
        w.writerows(body)
    print(f"changed {int((new != ds.labels).sum())} of {ds.n} labels (rho={args.rho})")
    return 0


def cmd_oracle_verify(args) -> int:
    report = verify_theorem(
        trials=args.trials, classes=args.classes, features=args.features, seed=args.seed, budget=args.budget
    )
    print(report.summary())
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=1) + "\n", encoding="utf-8")
    return 0 if report.passed else EXIT_FAILED


def cmd_experiment_run(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    out = args.out or cfg.output_dir
    table = run_experiment(cfg, output_dir=out)
    print(table.summary())
    if out:
        print(f"results written to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robustcor", description="COR robustness of classifier predictions")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("score", help="robustness per prediction")
    s.add_argument("--preds", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("arc", help="accuracy rejection curves")
    s.add_argument("--preds")
    s.add_argument("--out")
    s.add_argument("--svg")
    s.add_argument("--key", action="append", choices=ARC_KEYS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--config", help="run the multi-split comparison from an experiment config")
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_arc)

    ds = sub.add_parser("ds", help="dynamic selection").add_subparsers(dest="ds_command", required=True)
    s = ds.add_parser("fit")
    s.add_argument("--val-m1", required=True)
    s.add_argument("--val-m2", required=True)
    s.add_argument("--m1-id", default="M1")
    s.add_argument("--m2-id", default="M2")
    s.add_argument("--strategy", choices=[RS_D, RS_I], default=RS_D)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ds_fit)
    s = ds.add_parser("apply")
    s.add_argument("--policy", required=True)
    s.add_argument("--test-m1", required=True)
    s.add_argument("--test-m2", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ds_apply)

    data = sub.add_parser("data", help="dataset utilities").add_subparsers(dest="data_command", required=True)
    s = data.add_parser("split")
    s.add_argument("--data", required=True)
    s.add_argument("--label", required=True)
    s.add_argument("--proportions", type=float, nargs=3, default=[0.7, 0.15, 0.15])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stratified", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_data_split)
    s = data.add_parser("corrupt")
    s.add_argument("--data", required=True)
    s.add_argument("--label", required=True)
    s.add_argument("--rho", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--exact", action="store_true", help="corrupt exactly floor(rho*n) rows")
    s.add_argument("--any-class", action="store_true", help="redraw from all K classes")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_data_corrupt)

    oracle = sub.add_parser("oracle", help="brute-force checks").add_subparsers(dest="oracle_command", required=True)
    s = oracle.add_parser("verify")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=50)
    s.add_argument("--classes", type=int, default=3)
    s.add_argument("--features", type=int, default=4)
    s.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    s.add_argument("--out")
    s.set_defaults(func=cmd_oracle_verify)

    exp = sub.add_parser("experiment", help="multi-split protocol").add_subparsers(dest="exp_command", required=True)
    s = exp.add_parser("run")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_experiment_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RobustcorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
