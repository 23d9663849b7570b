"""End-to-end training configuration, model files and QUBO export.

A :class:`PipelineConfig` resolves into the per-module configs; :func:`fit`
trains an :class:`EnsembleModel` for {-1, +1} data and an :class:`OvoModel`
otherwise, optionally behind a min-max feature scaling fitted on the
training data.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterator, Optional, Union

import numpy as np

from .boltzmann import BoltzmannConfig
from .data import Dataset, MinMaxScaling
from .ensemble import (BatchConfig, EnsembleModel, ensemble_margins, partition_indices,
                       predict_ensemble_labels, train_ensemble)
from .errors import ConfigError, InputError, ParseError
from .ovo import OvoModel, build_pair_dataset, predict_ovo_labels, train_ovo, vote_counts
from .qubo import EncodingConfig, KernelSpec, QuboProblem, TrainingSet, build_qubo, resolve_budget
from .sampler import AnnealConfig, AnnealingSampler, ExactSampler, ImportedSampler, Sampler

MODEL_FORMAT = "probqsvm-model"


@dataclass(frozen=True)
class PipelineConfig:
    base: int = 2
    bits: int = 2
    penalty: float = 0.001
    kernel: str = "gaussian"
    gamma: float = 16.0
    degree: int = 3
    coef0: float = 0.0
    box: Union[float, str] = "auto"
    temperature: Optional[float] = None
    aggregation: str = "prob"
    sampler: str = "sa"
    reads: int = 100
    sweeps: int = 1000
    t_initial: Optional[float] = None
    t_final: float = 0.01
    seed: int = 0
    batch_size: Optional[int] = None
    stratified: bool = False
    budget: Optional[int] = None
    scale: str = "none"
    exact_cap: int = 24

    def __post_init__(self):
        if self.scale not in ("none", "minmax"):
            raise ConfigError(f"scale must be 'none' or 'minmax', got {self.scale!r}")
        if self.sampler not in ("sa", "exact", "import"):
            raise ConfigError(f"sampler must be sa, exact or import, got {self.sampler!r}")
        # fail fast on every sub-config before any computation
        self.encoding(), self.boltzmann(), self.batch(), self.anneal()
        object.__setattr__(self, "budget", resolve_budget(self.budget))

    def encoding(self) -> EncodingConfig:
        kernel = KernelSpec(self.kernel, self.gamma, self.degree, self.coef0)
        return EncodingConfig(self.base, self.bits, self.penalty, kernel)

    def boltzmann(self) -> BoltzmannConfig:
        return BoltzmannConfig(self.temperature, self.box, self.aggregation)

    def batch(self) -> BatchConfig:
        return BatchConfig(self.batch_size, self.seed, self.stratified)

    def anneal(self) -> AnnealConfig:
        return AnnealConfig(self.reads, self.sweeps, self.t_initial, self.t_final, "geometric", self.seed)

    def make_sampler(self, documents=()) -> Sampler:
        if self.sampler == "sa":
            return AnnealingSampler(self.anneal())
        if self.sampler == "exact":
            return ExactSampler(self.exact_cap)
        return ImportedSampler.from_documents(documents)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class FittedModel:
    model: Union[EnsembleModel, OvoModel]
    scaling: Optional[MinMaxScaling] = None
    config: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.model.dim

    def transform(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.dim:
            raise InputError(f"model expects {self.dim} features, data has {x.shape[1]}")
        if self.scaling is None:
            return x
        return self.scaling.apply(Dataset(x, np.zeros(len(x), dtype=int))).features

    def predict(self, x) -> np.ndarray:
        z = self.transform(x)
        if isinstance(self.model, EnsembleModel):
            return predict_ensemble_labels(self.model, z)
        return predict_ovo_labels(self.model, z)

    def scores(self, x) -> np.ndarray:
        """Ensemble margin, or the winning vote share for OvO models."""
        z = self.transform(x)
        if isinstance(self.model, EnsembleModel):
            return ensemble_margins(self.model, z)
        votes = vote_counts(self.model, z)
        return votes.max(axis=1) / len(self.model.pairs)

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": 1,
            "config": self.config,
            "scaling": None if self.scaling is None else asdict(self.scaling),
            "model": self.model.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "FittedModel":
        if d.get("format") != MODEL_FORMAT:
            raise ParseError("not a probqsvm model file")
        m = d["model"]
        model = EnsembleModel.from_dict(m) if m.get("type") == "ensemble" else OvoModel.from_dict(m)
        s = d.get("scaling")
        scaling = None if s is None else MinMaxScaling(tuple(s["low"]), tuple(s["high"]))
        return cls(model, scaling, d.get("config", {}))


def save_model(fitted: FittedModel, path) -> None:
    Path(path).write_text(fitted.to_json())


def load_model(path) -> FittedModel:
    path = Path(path)
    try:
        return FittedModel.from_dict(json.loads(path.read_text()))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}")
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ParseError(f"{path}: malformed model file ({exc})")


def is_signed_binary(data: Dataset) -> bool:
    return data.classes == [-1, 1]


def prepare(data: Dataset, cfg: PipelineConfig) -> tuple[Dataset, Optional[MinMaxScaling]]:
    if cfg.scale == "minmax":
        scaling = MinMaxScaling.fit(data)
        return scaling.apply(data), scaling
    return data, None


def fit(data: Dataset, cfg: PipelineConfig, sampler: Optional[Sampler] = None,
        log: Optional[list] = None) -> FittedModel:
    if len(data.classes) < 2:
        raise InputError(f"training data needs at least two classes, found {data.classes}")
    sampler = sampler if sampler is not None else cfg.make_sampler()
    scaled, scaling = prepare(data, cfg)
    enc, boltz, batch = cfg.encoding(), cfg.boltzmann(), cfg.batch()
    if is_signed_binary(scaled):
        train = TrainingSet(scaled.features, scaled.labels)
        model = train_ensemble(train, batch, enc, sampler, boltz, cfg.budget, log=log)
    else:
        model = train_ovo(scaled, enc, batch, sampler, boltz, cfg.budget, log=log)
    return FittedModel(model, scaling, cfg.to_dict())


def iter_problems(data: Dataset, cfg: PipelineConfig) -> Iterator[tuple[tuple, Optional[tuple], TrainingSet, QuboProblem]]:
    """Yield ``(stream key, class pair, batch, problem)`` exactly as :func:`fit` builds them."""
    scaled, _ = prepare(data, cfg)
    enc, batch = cfg.encoding(), cfg.batch()
    size = batch.resolve(enc.bits, cfg.budget)
    if is_signed_binary(scaled):
        jobs = [((), None, TrainingSet(scaled.features, scaled.labels))]
    else:
        jobs = [((pi, pj), (i, j), build_pair_dataset(scaled, i, j))
                for (pi, i), (pj, j) in combinations(enumerate(scaled.classes), 2)]
    for key, pair, train in jobs:
        for j, idx in enumerate(partition_indices(train.labels, size, batch.shuffle_seed,
                                                  batch.stratified)):
            part = TrainingSet(train.features[idx], train.labels[idx])
            yield (*key, j), pair, part, build_qubo(part, enc, cfg.budget)
