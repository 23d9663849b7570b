"""Batch training under a variable budget, with averaged batch predictions."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .boltzmann import BinaryModel, BoltzmannConfig
from .errors import CapacityError, ConfigError, InputError
from .qubo import EncodingConfig, TrainingSet, resolve_budget
from .sampler import Sampler
from .svm import predict_labels, train_binary


@dataclass(frozen=True)
class BatchConfig:
    batch_size: Optional[int] = None  # None: as many samples as the budget allows
    shuffle_seed: int = 0
    stratified: bool = False

    def __post_init__(self):
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError(f"batch size must be >= 1, got {self.batch_size}")

    def resolve(self, bits: int, budget: Optional[int] = None) -> int:
        budget = resolve_budget(budget)
        if self.batch_size is None:
            if budget < bits:
                raise CapacityError(f"variable budget {budget} cannot hold one {bits}-bit sample")
            return budget // bits
        if self.batch_size * bits > budget:
            raise CapacityError(f"batch size {self.batch_size} x {bits} bits exceeds the "
                                f"variable budget of {budget}")
        return self.batch_size

    def to_dict(self) -> dict:
        return {"batch_size": self.batch_size, "shuffle_seed": self.shuffle_seed,
                "stratified": self.stratified}

    @classmethod
    def from_dict(cls, d: dict) -> "BatchConfig":
        return cls(d.get("batch_size"), int(d.get("shuffle_seed", 0)), bool(d.get("stratified", False)))


def partition_indices(labels, batch_size: int, seed: int = 0,
                      stratified: bool = False) -> list[np.ndarray]:
    labels = np.asarray(labels)
    n = len(labels)
    if n < 1:
        raise InputError("cannot partition an empty dataset")
    if batch_size < 1:
        raise ConfigError(f"batch size must be >= 1, got {batch_size}")
    rng = np.random.default_rng(seed)
    if stratified:
        # spread each class evenly along the order, then cut into consecutive chunks
        keys = np.empty(n)
        for cls in np.unique(labels):
            members = rng.permutation(np.flatnonzero(labels == cls))
            keys[members] = (np.arange(len(members)) + 0.5) / len(members)
        order = np.lexsort((rng.random(n), keys))
    else:
        order = rng.permutation(n)
    n_batches = math.ceil(n / batch_size)
    return [order[j * batch_size:(j + 1) * batch_size] for j in range(n_batches)]


def partition(train: TrainingSet, cfg: BatchConfig, bits: int = 1,
              budget: Optional[int] = None) -> list[TrainingSet]:
    size = cfg.batch_size if cfg.batch_size is not None else cfg.resolve(bits, budget)
    return [TrainingSet(train.features[idx], train.labels[idx])
            for idx in partition_indices(train.labels, size, cfg.shuffle_seed, cfg.stratified)]


@dataclass(frozen=True, eq=False)
class EnsembleModel:
    members: tuple
    batch_config: BatchConfig = BatchConfig()

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise InputError("an ensemble needs at least one member")
        kernel, dim = members[0].kernel, members[0].dim
        if any(m.kernel != kernel or m.dim != dim for m in members):
            raise InputError("ensemble members must share kernel and feature dimension")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def to_dict(self) -> dict:
        return {"type": "ensemble", "batch_config": self.batch_config.to_dict(),
                "members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleModel":
        return cls(tuple(BinaryModel.from_dict(m) for m in d["members"]),
                   BatchConfig.from_dict(d.get("batch_config", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EnsembleModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def train_ensemble(train: TrainingSet, batch_cfg: BatchConfig, enc: EncodingConfig,
                   sampler: Sampler, boltz: BoltzmannConfig = BoltzmannConfig(),
                   budget: Optional[int] = None, key: Sequence[int] = (),
                   log: Optional[list] = None) -> EnsembleModel:
    """Train one member per batch, in batch order.

    If ``log`` is given, one dict per batch (size, minimum energy, distinct
    states, reads, seconds) is appended to it.
    """
    size = batch_cfg.resolve(enc.bits, budget)
    idx_batches = partition_indices(train.labels, size, batch_cfg.shuffle_seed, batch_cfg.stratified)
    members = []
    for j, idx in enumerate(idx_batches):
        batch = TrainingSet(train.features[idx], train.labels[idx])
        start = time.perf_counter()
        try:
            model = train_binary(batch, enc, sampler, boltz, budget, key=(*key, j))
        except Exception as exc:
            exc.args = (f"batch {j}: {exc.args[0] if exc.args else exc}", *exc.args[1:])
            raise
        if log is not None:
            log.append({"key": [*key, j], "size": len(batch),
                        "min_energy": model.provenance["min_energy"],
                        "distinct_states": model.provenance["distinct_states"],
                        "reads": model.provenance["reads"],
                        "seconds": time.perf_counter() - start})
        members.append(model)
    return EnsembleModel(tuple(members), batch_cfg)


def ensemble_margins(model: EnsembleModel, x) -> np.ndarray:
    """Mean of the members' signed votes for each row of ``x``, in [-1, 1]."""
    votes = np.stack([predict_labels(m, x) for m in model.members])
    return votes.mean(axis=0)


def ensemble_margin(model: EnsembleModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError("ensemble_margin takes a single feature vector")
    return float(ensemble_margins(model, x)[0])


def predict_ensemble_labels(model: EnsembleModel, x) -> np.ndarray:
    return np.where(ensemble_margins(model, x) >= 0, 1, -1)


def predict_ensemble(model: EnsembleModel, x) -> int:
    return 1 if ensemble_margin(model, x) >= 0 else -1
