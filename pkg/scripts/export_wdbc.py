"""Write the Wisconsin diagnostic breast cancer data (wdbc) to CSV.

The copy bundled with scikit-learn is used because the sandbox has no
access to OpenML.  Run once; the CSV is committed under data/.
"""

import csv
import sys
from pathlib import Path

from sklearn.datasets import load_breast_cancer


def main(out="data/wdbc.csv"):
    bunch = load_breast_cancer()
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    names = [n.replace(" ", "_") for n in bunch.feature_names]
    with open(out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["diagnosis"])
        for row, y in zip(bunch.data, bunch.target):
            w.writerow([repr(float(v)) for v in row] + [bunch.target_names[y]])
    print(f"wrote {len(bunch.target)} rows to {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
