"""Run the split protocol for a config and print the result table."""

import argparse
from pathlib import Path

from robustcor.experiment import ExperimentConfig, run_experiment

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "configs" / "synthetic_ds.toml"))
    ap.add_argument("--out-dir")
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config)
    out = args.out_dir or cfg.output_dir
    table = run_experiment(cfg, out)
    print(table.summary())
    if out:
        print(f"results written under {out}")


if __name__ == "__main__":
    main()
