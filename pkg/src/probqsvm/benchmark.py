"""Reproduction runs on banknote (binary) and iris (three-class) data.

Each cell samples every QUBO once and scores both aggregation modes on the
same samples, so the PROB vs best-only comparison is paired.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .data import Dataset, format_table, metrics, split, subsample
from .errors import QsvmError
from .pipeline import PipelineConfig, fit

BANKNOTE = PipelineConfig(base=2, bits=2, penalty=0.001, gamma=16.0, box="auto", scale="minmax")
# "all parameters set to 1": gamma = penalty = 1; base and bits stay at 2 (C = 3)
IRIS = PipelineConfig(base=2, bits=2, penalty=1.0, gamma=1.0, box="auto", scale="none", seed=42)
METRIC_ROWS = {"Accuracy": "accuracy", "Precision": "precision",
               "Recall": "recall", "F1 Score": "f1"}


class CachingSampler:
    """Memoizes an inner sampler per (problem digest, stream key)."""

    def __init__(self, inner):
        self.inner = inner
        self.cache = {}

    def sample(self, problem, key=()):
        k = (problem.digest, tuple(key))
        if k not in self.cache:
            self.cache[k] = self.inner.sample(problem, key)
        return self.cache[k]


@dataclass(frozen=True)
class Cell:
    dataset: str
    sampler: str
    seed: int
    train: Dataset
    test: Dataset
    config: PipelineConfig
    average: str = "binary"
    positive_class: Optional[int] = 1


def run_cell(cell: Cell) -> tuple[list[dict], dict]:
    """Score both aggregation modes; returns (result rows, timings)."""
    cfg = replace(cell.config, sampler=cell.sampler, seed=cell.seed)
    base = {"dataset": cell.dataset, "sampler": cell.sampler, "seed": cell.seed}
    sampler = CachingSampler(cfg.make_sampler())
    rows, timings = [], {}
    for mode in ("prob", "best"):
        start = time.perf_counter()
        try:
            model = fit(cell.train, replace(cfg, aggregation=mode), sampler)
        except QsvmError as exc:
            rows.append({**base, "mode": mode, "error": f"{type(exc).__name__}: {exc}"})
            continue
        finally:
            timings[mode] = time.perf_counter() - start
        pred = model.predict(cell.test.features)
        m = metrics(cell.test.labels, pred, cell.positive_class, cell.average)
        rows.append({**base, "mode": mode, "metrics": m.to_dict()})
    return rows, {**base, "seconds": timings}


def banknote_cells(data: Dataset, seeds, samplers=("sa",), n_train: int = 250,
                   n_test: int = 100, config: PipelineConfig = BANKNOTE,
                   positive_class: int = 1, batch_sizes=(None,)) -> list[Cell]:
    """One cell per (seed, batch size, sampler).

    ``None`` keeps the budget-filling default, which holds 250 samples in one
    QUBO; other sizes appear as ``banknote-b<size>`` in the report.
    """
    cells = []
    for seed in seeds:
        train, test = subsample(data, n_train, n_test, seed)
        for size in batch_sizes:
            name = "banknote" if size is None else f"banknote-b{size}"
            cfg = replace(config, batch_size=size)
            cells += [Cell(name, s, seed, train, test, cfg, "binary", positive_class)
                      for s in samplers]
    return cells


def iris_cells(data: Dataset, samplers=("sa",), test_fraction: float = 0.4,
               seed: int = 42, config: PipelineConfig = IRIS) -> list[Cell]:
    train, test = split(data, test_fraction, seed)
    return [Cell("iris", s, seed, train, test, config, "macro", None) for s in samplers]


def summarize(rows: list[dict]) -> dict:
    """Mean metrics per (dataset, sampler, mode) over successful seeds."""
    groups: dict = {}
    for r in rows:
        groups.setdefault(f"{r['dataset']}/{r['sampler']}/{r['mode']}", []).append(r)
    out = {}
    for name, rs in groups.items():
        ok = [r["metrics"] for r in rs if "metrics" in r]
        entry = {"cells": len(rs), "failed": len(rs) - len(ok)}
        if ok:
            entry.update({k: float(np.mean([m[k] for m in ok])) for k in METRIC_ROWS.values()})
        out[name] = entry
    return out


def run_benchmark(cells: list[Cell], workers: int = 1) -> tuple[dict, list[dict]]:
    """Run cells (in parallel when ``workers > 1``); output order follows ``cells``."""
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(c) for c in cells]
    rows = [r for rs, _ in results for r in rs]
    report = {
        "configs": {c.dataset: c.config.to_dict() for c in cells},
        "seeds": sorted({c.seed for c in cells}),
        "rows": rows,
        "summary": summarize(rows),
    }
    return report, [t for _, t in results]


def summary_table(report: dict) -> str:
    summary = report["summary"]
    columns = {}
    for name, entry in summary.items():
        col = {label: entry.get(key) for label, key in METRIC_ROWS.items()}
        col["Failed cells"] = entry["failed"]
        columns[name] = col
    return format_table(columns, [*METRIC_ROWS, "Failed cells"])
