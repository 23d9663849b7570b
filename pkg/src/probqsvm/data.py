"""Dataset loading, seeded splits and classification metrics."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import CapacityError, ConfigError, InputError, ParseError


@dataclass(frozen=True, eq=False)
class Dataset:
    """Real-valued features with integer class labels."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.array(self.features, dtype=float)
        y = np.array(self.labels)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise InputError(f"features {x.shape} and labels {y.shape} do not align")
        if y.size and not np.all(y == np.round(y)):
            raise InputError("class labels must be integers")
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y.astype(np.int64))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def classes(self) -> list[int]:
        return sorted(int(c) for c in np.unique(self.labels))

    def take(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels))


def _number(cell: str) -> float:
    return float(cell.strip().replace("−", "-"))


def load_csv(path: Union[str, Path], has_header: Optional[bool] = None,
             label_column: Union[int, str, None] = -1, delimiter: str = ",") -> Dataset:
    """Read a rectangular CSV; ``has_header=None`` detects a non-numeric first row.

    With ``label_column=None`` every column is a feature and labels are zero.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}")
    rows = [r for r in csv.reader(io.StringIO(text), delimiter=delimiter) if any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: no data rows")
    if has_header is None:
        try:
            [_number(c) for c in rows[0]]
            has_header = False
        except ValueError:
            has_header = True
    header = rows[0] if has_header else None
    body = rows[1:] if has_header else rows
    if not body:
        raise ParseError(f"{path}: no data rows")
    width = len(body[0])
    if label_column is None:
        body = [row + ["0"] for row in body]
        width += 1
        label_column = width - 1
    elif isinstance(label_column, str):
        if header is None or label_column not in header:
            raise InputError(f"{path}: no column named {label_column!r}")
        label_column = header.index(label_column)
    if not -width <= label_column < width:
        raise InputError(f"{path}: label column {label_column} out of range for {width} columns")
    label_column %= width
    if width < 2:
        raise ParseError(f"{path}: need at least one feature column and a label column")
    first = 2 if has_header else 1
    x = np.empty((len(body), width - 1))
    y = np.empty(len(body), dtype=np.int64)
    for r, row in enumerate(body):
        lineno = r + first
        if len(row) != width:
            raise ParseError(f"{path}: line {lineno} has {len(row)} fields, expected {width}")
        cells = row[:label_column] + row[label_column + 1:]
        for c, cell in enumerate(cells):
            try:
                x[r, c] = _number(cell)
            except ValueError:
                col = c if c < label_column else c + 1
                raise ParseError(f"{path}: line {lineno}, column {col}: non-numeric value {cell!r}")
        try:
            lab = _number(row[label_column])
        except ValueError:
            raise ParseError(f"{path}: line {lineno}: non-numeric label {row[label_column]!r}")
        if lab != round(lab):
            raise ParseError(f"{path}: line {lineno}: label {lab} is not an integer")
        y[r] = int(lab)
    if not np.all(np.isfinite(x)):
        raise ParseError(f"{path}: non-finite feature values")
    return Dataset(x, y)


def format_csv(data: Dataset) -> str:
    lines = [",".join([*(repr(float(v)) for v in row), str(int(lab))])
             for row, lab in zip(data.features, data.labels)]
    return "\n".join(lines) + "\n"


def save_csv(data: Dataset, path: Union[str, Path]) -> None:
    Path(path).write_text(format_csv(data))


def split(data: Dataset, test_fraction: float, seed: int = 0,
          stratified: bool = False) -> tuple[Dataset, Dataset]:
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test fraction must lie in (0, 1), got {test_fraction}")
    n = len(data)
    n_test = int(math.floor(test_fraction * n + 0.5))
    if n_test < 1 or n_test > n - 1:
        raise ConfigError(f"test fraction {test_fraction} of {n} samples leaves an empty partition")
    rng = np.random.default_rng(seed)
    if not stratified:
        perm = rng.permutation(n)
        return data.take(np.sort(perm[n_test:])), data.take(np.sort(perm[:n_test]))
    classes = data.classes
    members = [rng.permutation(np.flatnonzero(data.labels == c)) for c in classes]
    quota = np.array([test_fraction * len(m) for m in members])
    take = np.floor(quota).astype(int)
    # largest remainders get the leftover test slots
    for k in np.argsort(-(quota - take), kind="stable")[:n_test - take.sum()]:
        take[k] += 1
    test_idx = np.concatenate([m[:t] for m, t in zip(members, take)])
    train_idx = np.concatenate([m[t:] for m, t in zip(members, take)])
    return data.take(np.sort(train_idx)), data.take(np.sort(test_idx))


def subsample(data: Dataset, n_train: int, n_test: int, seed: int = 0) -> tuple[Dataset, Dataset]:
    if n_train < 1 or n_test < 1:
        raise ConfigError("subsample sizes must be positive")
    if n_train + n_test > len(data):
        raise CapacityError(f"cannot draw {n_train} + {n_test} disjoint samples from {len(data)}")
    perm = np.random.default_rng(seed).permutation(len(data))
    return data.take(np.sort(perm[:n_train])), data.take(np.sort(perm[n_train:n_train + n_test]))


@dataclass(frozen=True)
class MinMaxScaling:
    """Per-feature affine map of the fitted range onto [0, 1]."""

    low: tuple
    high: tuple

    @classmethod
    def fit(cls, data: Dataset) -> "MinMaxScaling":
        return cls(tuple(data.features.min(axis=0).tolist()), tuple(data.features.max(axis=0).tolist()))

    def apply(self, data: Dataset) -> Dataset:
        lo, hi = np.asarray(self.low), np.asarray(self.high)
        span = np.where(hi > lo, hi - lo, 1.0)
        return Dataset((data.features - lo) / span, data.labels)


# -- metrics ------------------------------------------------------------------

@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    average: str = "binary"
    positive_class: Optional[int] = 1
    zero_division: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float, bool]:
    flagged = False
    if tp + fp:
        p = tp / (tp + fp)
    else:
        p, flagged = 0.0, True
    if tp + fn:
        r = tp / (tp + fn)
    else:
        r, flagged = 0.0, True
    if p + r:
        f = 2 * p * r / (p + r)
    else:
        f, flagged = 0.0, True
    return p, r, f, flagged


def metrics(y_true, y_pred, positive_class: Optional[int] = 1, average: str = "binary") -> Metrics:
    """Accuracy, precision, recall and F1; ``average='macro'`` for multiclass."""
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape or t.ndim != 1:
        raise InputError(f"label vectors must be 1-D and equally long, got {t.shape} and {p.shape}")
    if t.size == 0:
        raise InputError("cannot score an empty prediction")
    acc = float(np.mean(t == p))
    if average == "binary":
        tp = int(np.sum((p == positive_class) & (t == positive_class)))
        fp = int(np.sum((p == positive_class) & (t != positive_class)))
        fn = int(np.sum((p != positive_class) & (t == positive_class)))
        prec, rec, f1, flag = _prf(tp, fp, fn)
        return Metrics(acc, prec, rec, f1, "binary", positive_class, flag)
    if average != "macro":
        raise ConfigError(f"unknown averaging {average!r}")
    scores, flagged = [], False
    for c in np.union1d(t, p):
        tp = int(np.sum((p == c) & (t == c)))
        fp = int(np.sum((p == c) & (t != c)))
        fn = int(np.sum((p != c) & (t == c)))
        *prf, flag = _prf(tp, fp, fn)
        scores.append(prf)
        flagged |= flag
    prec, rec, f1 = (float(v) for v in np.mean(scores, axis=0))
    return Metrics(acc, prec, rec, f1, "macro", None, flagged)


def format_table(columns: dict[str, dict[str, object]], rows: list[str], digits: int = 4) -> str:
    """Plain-text table: one column per entry of ``columns``, one line per row key."""
    def cell(v):
        if isinstance(v, float):
            return f"{v:.{digits}f}"
        return "" if v is None else str(v)

    names = list(columns)
    body = [[r, *(cell(columns[c].get(r)) for c in names)] for r in rows]
    head = ["Metric", *names]
    widths = [max(len(str(x)) for x in col) for col in zip(head, *body)]
    fmt = lambda cells: "  ".join(s.ljust(w) if k == 0 else s.rjust(w)
                                  for k, (s, w) in enumerate(zip(cells, widths)))
    lines = [fmt(head), "  ".join("-" * w for w in widths)] + [fmt(b) for b in body]
    return "\n".join(lines) + "\n"
