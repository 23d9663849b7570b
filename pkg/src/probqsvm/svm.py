"""Binary SVM prediction and single-batch training."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .boltzmann import BinaryModel, BoltzmannConfig, aggregate
from .errors import InputError
from .qubo import EncodingConfig, TrainingSet, build_qubo, kernel_matrix
from .sampler import Sampler, deduplicate


def _rows(model: BinaryModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise InputError(f"expected feature vectors of dimension {model.dim}, got shape {x.shape}")
    return x


def decision_values(model: BinaryModel, x) -> np.ndarray:
    """``sum_m alpha_m y_m K(x_m, x) + b`` for each row of ``x``."""
    k = kernel_matrix(model.support_features, _rows(model, x), model.kernel)
    return (model.alphas * model.support_labels) @ k + model.bias


def decision_value(model: BinaryModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise InputError("decision_value takes a single feature vector")
    return float(decision_values(model, x)[0])


def sign(values) -> np.ndarray:
    """Sign with ties going to +1."""
    return np.where(np.asarray(values) >= 0, 1, -1)


def predict_labels(model: BinaryModel, x) -> np.ndarray:
    return sign(decision_values(model, x))


def predict_binary(model: BinaryModel, x) -> int:
    return 1 if decision_value(model, x) >= 0 else -1


def train_binary(train: TrainingSet, enc: EncodingConfig, sampler: Sampler,
                 boltz: BoltzmannConfig = BoltzmannConfig(), budget: Optional[int] = None,
                 key: Sequence[int] = ()) -> BinaryModel:
    """Build the QUBO, sample it, and aggregate the samples into a model.

    ``key`` selects an independent random stream of a seeded sampler, so that
    different batches/pairs sharing one sampler config do not share samples.
    """
    problem = build_qubo(train, enc, budget)
    samples = sampler.sample(problem, key=tuple(key))
    reads = int(samples.occurrences.sum())
    model = aggregate(deduplicate(samples), train, enc, boltz, gram=problem.gram)
    model.provenance["reads"] = reads
    return model
