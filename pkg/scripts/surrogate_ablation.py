"""Banknote-shaped stand-in run for machines without the banknote file.

Draws a 4-feature, two-class problem with scikit-learn (not a package
dependency; install it separately) and runs the banknote protocol on it.
The numbers say nothing about banknote itself; they only exercise the path.
"""
import sys

import numpy as np

from probqsvm import Dataset
from probqsvm import benchmark as bench


def main() -> int:
    from sklearn.datasets import make_classification

    x, y = make_classification(n_samples=1372, n_features=4, n_informative=3, n_redundant=1,
                               class_sep=1.2, random_state=0)
    data = Dataset(x, y.astype(np.int64))
    report, _ = bench.run_benchmark(bench.banknote_cells(data, range(5)))
    print(bench.summary_table(report), end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
