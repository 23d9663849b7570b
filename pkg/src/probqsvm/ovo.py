"""One-vs-one multiclass training and vote-based prediction."""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .boltzmann import BoltzmannConfig
from .data import Dataset
from .ensemble import BatchConfig, EnsembleModel, predict_ensemble_labels, train_ensemble
from .errors import InputError
from .qubo import EncodingConfig, TrainingSet
from .sampler import Sampler


def build_pair_dataset(data: Dataset, i: int, j: int) -> TrainingSet:
    """Samples of classes ``i`` and ``j`` in original order, relabelled i -> +1, j -> -1."""
    if i == j:
        raise InputError(f"a class pair needs two distinct classes, got ({i}, {j})")
    present = set(np.unique(data.labels).tolist())
    for c in (i, j):
        if c not in present:
            raise InputError(f"class {c} has no samples in the dataset")
    mask = (data.labels == i) | (data.labels == j)
    return TrainingSet(data.features[mask], np.where(data.labels[mask] == i, 1, -1))


@dataclass(frozen=True, eq=False)
class OvoModel:
    classes: tuple
    pair_models: dict  # (i, j) with i < j -> EnsembleModel

    def __post_init__(self):
        classes = tuple(sorted(int(c) for c in self.classes))
        if len(set(classes)) != len(classes) or len(classes) < 2:
            raise InputError("an OvO model needs at least two distinct classes")
        expected = set(combinations(classes, 2))
        if set(self.pair_models) != expected:
            raise InputError(f"pair models must cover exactly the pairs {sorted(expected)}")
        object.__setattr__(self, "classes", classes)

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return list(combinations(self.classes, 2))

    @property
    def dim(self) -> int:
        return next(iter(self.pair_models.values())).dim

    def to_dict(self) -> dict:
        return {"type": "ovo", "classes": list(self.classes),
                "pair_models": {f"{i},{j}": self.pair_models[(i, j)].to_dict()
                                for i, j in self.pairs}}

    @classmethod
    def from_dict(cls, d: dict) -> "OvoModel":
        pairs = {}
        for k, v in d["pair_models"].items():
            i, j = (int(s) for s in k.split(","))
            pairs[(i, j)] = EnsembleModel.from_dict(v)
        return cls(tuple(d["classes"]), pairs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OvoModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def train_ovo(data: Dataset, enc: EncodingConfig, batch_cfg: BatchConfig, sampler: Sampler,
              boltz: BoltzmannConfig = BoltzmannConfig(), budget: Optional[int] = None,
              log: Optional[list] = None) -> OvoModel:
    classes = sorted(int(c) for c in np.unique(data.labels))
    if len(classes) < 2:
        raise InputError(f"need at least two classes, found {classes}")
    pair_models = {}
    for (pi, i), (pj, j) in combinations(enumerate(classes), 2):
        train = build_pair_dataset(data, i, j)
        try:
            pair_models[(i, j)] = train_ensemble(train, batch_cfg, enc, sampler, boltz,
                                                 budget, key=(pi, pj), log=log)
        except Exception as exc:
            exc.args = (f"pair ({i}, {j}): {exc.args[0] if exc.args else exc}", *exc.args[1:])
            raise
    return OvoModel(tuple(classes), pair_models)


def vote_counts(model: OvoModel, x) -> np.ndarray:
    """Votes per class (columns follow ``model.classes``) for each row of ``x``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != model.dim:
        raise InputError(f"expected feature vectors of dimension {model.dim}, got {x.shape[1]}")
    pos = {c: k for k, c in enumerate(model.classes)}
    votes = np.zeros((x.shape[0], len(model.classes)), dtype=np.int64)
    for i, j in model.pairs:
        pred = predict_ensemble_labels(model.pair_models[(i, j)], x)
        votes[:, pos[i]] += pred > 0
        votes[:, pos[j]] += pred <= 0
    return votes


def predict_ovo_labels(model: OvoModel, x) -> np.ndarray:
    # argmax returns the first maximum, i.e. the lowest class label on ties
    return np.asarray(model.classes)[vote_counts(model, x).argmax(axis=1)]


def predict_ovo(model: OvoModel, x) -> int:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError("predict_ovo takes a single feature vector")
    return int(predict_ovo_labels(model, x)[0])
