"""Command-line interface.

Exit codes: 0 success, 2 usage or input error, 3 data integrity or
provenance error, 4 capacity error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import benchmark as bench
from .boltzmann import BoltzmannConfig, aggregate
from .data import format_table, load_csv, metrics, split, subsample
from .errors import ConfigError, InputError, QsvmError
from .pipeline import (FittedModel, PipelineConfig, fit, iter_problems,
                       load_model, save_model)
from .qubo import format_qubo_text, problem_from_export, qubo_metadata
from .sampler import AnnealConfig, anneal, deduplicate, import_samples, stream_seed


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def _write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}")
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})")


def _label_column(value: str):
    try:
        return int(value)
    except ValueError:
        return value


def _grid(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}")
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("grid dimensions must be positive")
    return w, h


def _box(text: str):
    return text if text == "auto" else float(text)


def add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="CSV file with features and a label column")
    p.add_argument("--label-column", type=_label_column, default=-1,
                   help="label column index or header name (default: last)")
    p.add_argument("--delimiter", default=",")


def add_training_args(p: argparse.ArgumentParser) -> None:
    add_data_args(p)
    p.add_argument("--test-fraction", type=float, help="hold out this fraction for testing")
    p.add_argument("--subsample", type=int, nargs=2, metavar=("N_TRAIN", "N_TEST"),
                   help="draw disjoint train/test subsets of these sizes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sampler", choices=("sa", "exact", "import"), default="sa")
    p.add_argument("--samples", nargs="*", default=[], help="sample-set documents for --sampler import")
    p.add_argument("--reads", type=int, default=100)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--t-initial", type=float, help="annealing start temperature (default: 10 x max|Q|)")
    p.add_argument("--t-final", type=float, default=0.01)
    p.add_argument("--temperature", type=float, help="Boltzmann temperature (default: energy std)")
    p.add_argument("--base", type=int, default=2)
    p.add_argument("--bits", type=int, default=2)
    p.add_argument("--penalty", type=float, default=0.001)
    p.add_argument("--kernel", choices=("gaussian", "linear", "polynomial"), default="gaussian")
    p.add_argument("--gamma", type=float, default=16.0)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--coef0", type=float, default=0.0)
    p.add_argument("--box", type=_box, default="auto", help="SVM box parameter C, or 'auto'")
    p.add_argument("--batch-size", type=int)
    p.add_argument("--budget", type=int, help="variable budget (default: $QSVM_VAR_BUDGET or 550)")
    p.add_argument("--aggregation", choices=("prob", "best"), default="prob")
    p.add_argument("--stratified", action="store_true", help="stratify batches and splits")
    p.add_argument("--scale", choices=("none", "minmax"), default="none")
    p.add_argument("--positive-class", type=int, default=1)


def config_from_args(args) -> PipelineConfig:
    return PipelineConfig(
        base=args.base, bits=args.bits, penalty=args.penalty, kernel=args.kernel,
        gamma=args.gamma, degree=args.degree, coef0=args.coef0, box=args.box,
        temperature=args.temperature, aggregation=args.aggregation, sampler=args.sampler,
        reads=args.reads, sweeps=args.sweeps, t_initial=args.t_initial, t_final=args.t_final,
        seed=args.seed, batch_size=args.batch_size, stratified=args.stratified,
        budget=args.budget, scale=args.scale)


def load_training_data(args):
    data = load_csv(args.data, label_column=args.label_column, delimiter=args.delimiter)
    if args.test_fraction is not None and args.subsample:
        raise ConfigError("--test-fraction and --subsample are mutually exclusive")
    if args.test_fraction is not None:
        return split(data, args.test_fraction, args.seed, args.stratified)
    if args.subsample:
        return subsample(data, *args.subsample, seed=args.seed)
    return data, None


def score(model: FittedModel, data, positive_class) -> dict:
    pred = model.predict(data.features)
    if len(getattr(model.model, "classes", (-1, 1))) == 2:
        return metrics(data.labels, pred, positive_class, "binary").to_dict()
    return metrics(data.labels, pred, None, "macro").to_dict()


def cmd_train(args) -> int:
    cfg = config_from_args(args)
    train, test = load_training_data(args)
    docs = [_read_json(p) for p in args.samples]
    if cfg.sampler == "import" and not docs:
        raise ConfigError("--sampler import needs --samples")
    log: list = []
    start = time.perf_counter()
    model = fit(train, cfg, cfg.make_sampler(docs), log=log)
    elapsed = time.perf_counter() - start
    out = Path(args.out)
    _write(out, model.to_json())
    report = {
        "config": cfg.to_dict(),
        "data": str(args.data),
        "n_train": len(train),
        "n_test": 0 if test is None else len(test),
        "model_type": model.model.to_dict()["type"],
        "batches": [{k: v for k, v in b.items() if k != "seconds"} for b in log],
        "train_metrics": score(model, train, args.positive_class),
    }
    if test is not None:
        report["test_metrics"] = score(model, test, args.positive_class)
    report_path = Path(args.report) if args.report else out.with_suffix(".report.json")
    _write(report_path, _dump(report))
    timings = {"total_seconds": elapsed, "batches": [{"key": b["key"], "seconds": b["seconds"]} for b in log]}
    _write(report_path.with_suffix(".timings.json"), _dump(timings))
    summary = {"train": report["train_metrics"]}
    if test is not None:
        summary["test"] = report["test_metrics"]
    print(format_table({k: {r: v[key] for r, key in bench.METRIC_ROWS.items()}
                        for k, v in summary.items()}, list(bench.METRIC_ROWS)), end="")
    print(f"model written to {out}; {len(log)} QUBO(s) sampled in {elapsed:.2f} s", file=sys.stderr)
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    data = load_csv(args.data, label_column=None if args.unlabeled else args.label_column,
                    delimiter=args.delimiter)
    pred = model.predict(data.features)
    text = "".join(f"{int(p)}\n" for p in pred)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def boundary_grid(model: FittedModel, data, width: int, height: int) -> str:
    if data.dim != 2:
        raise InputError(f"--boundary-grid needs 2-D features, data has {data.dim}")
    lo, hi = data.features.min(axis=0), data.features.max(axis=0)
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], width), np.linspace(lo[1], hi[1], height))
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    labels, scores = model.predict(pts), model.scores(pts)
    lines = ["x0,x1,label,score"]
    lines += [f"{x!r},{y!r},{int(l)},{float(s)!r}" for (x, y), l, s in zip(pts.tolist(), labels, scores)]
    return "\n".join(lines) + "\n"


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    data = load_csv(args.data, label_column=args.label_column, delimiter=args.delimiter)
    if data.dim != model.dim:
        raise InputError(f"model expects {model.dim} features, {args.data} has {data.dim}")
    result = score(model, data, args.positive_class)
    doc = {"data": str(args.data), "model": str(args.model), "n": len(data), "metrics": result}
    if args.out:
        _write(args.out, _dump(doc))
    print(format_table({"value": {r: result[k] for r, k in bench.METRIC_ROWS.items()}},
                       list(bench.METRIC_ROWS)), end="")
    if args.boundary_grid:
        grid_path = args.grid_out or str(Path(args.model).with_suffix(".grid.csv"))
        _write(grid_path, boundary_grid(model, data, *args.boundary_grid))
        print(f"decision grid written to {grid_path}", file=sys.stderr)
    return 0


def cmd_export_qubo(args) -> int:
    cfg = config_from_args(args)
    train, _ = load_training_data(args)
    out = Path(args.out)
    manifest = []
    for key, pair, part, problem in iter_problems(train, cfg):
        tag = "qubo_" + "_".join(str(k) for k in key)
        meta = qubo_metadata(problem, part, stream_key=list(key),
                             pair=None if pair is None else list(pair), config=cfg.to_dict())
        _write(out / f"{tag}.txt", format_qubo_text(problem))
        _write(out / f"{tag}.meta.json", _dump(meta))
        manifest.append({"qubo": f"{tag}.txt", "meta": f"{tag}.meta.json",
                         "problem_digest": problem.digest, "num_vars": problem.num_vars})
    _write(out / "manifest.json", _dump({"problems": manifest}))
    print(f"exported {len(manifest)} QUBO(s) to {out}", file=sys.stderr)
    return 0


def _load_export(args):
    try:
        text = Path(args.qubo).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {args.qubo}: {exc.strerror or exc}")
    meta = _read_json(args.meta)
    return (*problem_from_export(text, meta), meta)


def cmd_anneal(args) -> int:
    problem, _, meta = _load_export(args)
    seed = stream_seed(args.seed, meta.get("stream_key", []))
    cfg = AnnealConfig(args.reads, args.sweeps, args.t_initial, args.t_final, "geometric", seed)
    samples = anneal(problem, cfg)
    _write(args.out, samples.to_json() + "\n")
    print(f"{len(samples)} reads, min energy {samples.min_energy:.6g}", file=sys.stderr)
    return 0


def cmd_import_samples(args) -> int:
    problem, train, meta = _load_export(args)
    samples = import_samples(problem, _read_json(args.samples))
    boltz = BoltzmannConfig(args.temperature, args.box, args.aggregation)
    model = aggregate(deduplicate(samples), train, problem.encoding, boltz, gram=problem.gram)
    model.provenance["reads"] = int(samples.occurrences.sum())
    _write(args.out, model.to_json() + "\n")
    print(f"validated {len(samples)} records; model written to {args.out}", file=sys.stderr)
    return 0


def cmd_benchmark(args) -> int:
    seeds = list(range(args.seed, args.seed + args.seeds))
    samplers = tuple(args.samplers)
    cells = []
    overrides = {k: v for k, v in (("reads", args.reads), ("sweeps", args.sweeps),
                                    ("temperature", args.temperature)) if v is not None}
    if args.banknote:
        data = load_csv(args.banknote, label_column=args.label_column)
        cfg = replace(bench.BANKNOTE, **overrides)
        cells += bench.banknote_cells(data, seeds, samplers, *args.banknote_sizes, config=cfg,
                                      positive_class=args.positive_class,
                                      batch_sizes=(None, *args.banknote_batches))
    if args.iris:
        data = load_csv(args.iris, label_column=args.label_column)
        cells += bench.iris_cells(data, samplers, args.iris_test_fraction, args.iris_seed,
                                  replace(bench.IRIS, **overrides))
    if not cells:
        raise ConfigError("benchmark needs --banknote and/or --iris")
    report, timings = bench.run_benchmark(cells, args.workers)
    table = bench.summary_table(report)
    out = Path(args.out)
    _write(out / "benchmark.json", _dump(report))
    _write(out / "benchmark.txt", table)
    _write(out / "timings.json", _dump(timings))
    print(table, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qsvm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model and write it with a report")
    add_training_args(p)
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--report", help="report file (default: <out>.report.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels for a CSV")
    add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--unlabeled", action="store_true", help="every column is a feature")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score a model on labelled data")
    add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--positive-class", type=int, default=1)
    p.add_argument("--boundary-grid", type=_grid, metavar="WxH")
    p.add_argument("--grid-out")
    p.add_argument("--out", help="metrics JSON file")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export-qubo", help="write every training QUBO with metadata")
    add_training_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_export_qubo)

    p = sub.add_parser("anneal", help="anneal an exported QUBO into a sample-set document")
    p.add_argument("--qubo", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reads", type=int, default=100)
    p.add_argument("--sweeps", type=int, default=1000)
    p.add_argument("--t-initial", type=float)
    p.add_argument("--t-final", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_anneal)

    p = sub.add_parser("import-samples", help="validate external samples and aggregate a model")
    p.add_argument("--qubo", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--samples", required=True)
    p.add_argument("--temperature", type=float)
    p.add_argument("--box", type=_box, default="auto")
    p.add_argument("--aggregation", choices=("prob", "best"), default="prob")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_import_samples)

    p = sub.add_parser("benchmark", help="PROB vs best-only runs on banknote and iris")
    p.add_argument("--banknote", help="banknote authentication CSV (4 features, 0/1 class)")
    p.add_argument("--iris", help="iris CSV (4 features, integer class)")
    p.add_argument("--label-column", type=_label_column, default=-1)
    p.add_argument("--seeds", type=int, default=5, help="number of banknote seeds")
    p.add_argument("--seed", type=int, default=0, help="first banknote seed")
    p.add_argument("--banknote-sizes", type=int, nargs=2, default=(250, 100),
                   metavar=("N_TRAIN", "N_TEST"))
    p.add_argument("--banknote-batches", type=int, nargs="*", default=[100],
                   help="extra batched banknote configurations (batch sizes)")
    p.add_argument("--iris-test-fraction", type=float, default=0.4)
    p.add_argument("--iris-seed", type=int, default=42)
    p.add_argument("--samplers", nargs="+", choices=("sa", "exact"), default=["sa", "exact"])
    p.add_argument("--reads", type=int)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--positive-class", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except QsvmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
