"""Average ARCs over splits and print accuracy at a few rejection levels."""

import argparse
from pathlib import Path

from robustcor.experiment import ExperimentConfig, arc_compare

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default=str(ROOT / "configs" / "wdbc_arc.toml"))
    ap.add_argument("--out-dir")
    args = ap.parse_args()
    cfg = ExperimentConfig.load(args.config)
    out = args.out_dir or cfg.output_dir
    curves = arc_compare(cfg, list(cfg.arc_keys), out)
    for ds, by_key in curves.items():
        print(ds)
        for key, curve in by_key.items():
            row = "  ".join(f"{f:.2f}:{curve.value_at(f):.4f}" for f in (0.0, 0.25, 0.5, 0.75))
            print(f"  {key:<16} {row}")
    if out:
        print(f"curves written under {out}")


if __name__ == "__main__":
    main()
