"""Write the disjoint-regions table used by configs/synthetic_ds.toml."""

import argparse
from pathlib import Path

from robustcor.synthetic import disjoint_regions, write_dataset_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data" / "disjoint.csv"))
    args = ap.parse_args()
    write_dataset_csv(disjoint_regions(n=args.n, seed=args.seed), args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
