"""Three-class iris with one-vs-one voting on a 60/40 split."""
import argparse
import sys
from dataclasses import replace
from pathlib import Path

from probqsvm import load_csv, metrics, split
from probqsvm import benchmark as bench
from probqsvm.data import format_table
from probqsvm.pipeline import fit

DEFAULT_CSV = Path(__file__).resolve().parents[1] / "tests" / "data" / "iris.csv"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", nargs="?", default=str(DEFAULT_CSV))
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--test-fraction", type=float, default=0.4)
    args = parser.parse_args()

    train, test = split(load_csv(args.csv), args.test_fraction, args.seed)
    rows = {}
    for mode in ("prob", "best"):
        cfg = replace(bench.IRIS, aggregation=mode)
        model = fit(train, cfg)
        m = metrics(test.labels, model.predict(test.features), None, "macro")
        rows[mode] = {label: getattr(m, key) for label, key in bench.METRIC_ROWS.items()}
    print(format_table(rows, list(bench.METRIC_ROWS)), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
