"""Turn a set of sampled QUBO solutions into continuous SVM parameters.

Each distinct sampled state gets a Boltzmann weight ``exp(-E/T) / Z``; the
multipliers are the weighted average of the decoded states and the bias is
the ``alpha(C - alpha)``-weighted margin residual.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import ConfigError, InputError
from .qubo import EncodingConfig, KernelSpec, TrainingSet, compute_gram
from .sampler import SampleSet, deduplicate

BIAS_DEGENERACY = 1e-12
AGGREGATION_MODES = ("prob", "best")


@dataclass(frozen=True)
class BoltzmannConfig:
    temperature: Optional[float] = None  # None: std of the sampled energies
    box_parameter: Union[float, str] = "auto"  # "auto": largest encodable multiplier
    mode: str = "prob"

    def __post_init__(self):
        if self.temperature is not None and not (self.temperature > 0):
            raise ConfigError(f"temperature must be > 0, got {self.temperature}")
        if self.box_parameter != "auto":
            if isinstance(self.box_parameter, str) or not self.box_parameter > 0:
                raise ConfigError(f"box parameter must be > 0 or 'auto', got {self.box_parameter!r}")
        if self.mode not in AGGREGATION_MODES:
            raise ConfigError(f"aggregation mode must be one of {AGGREGATION_MODES}")

    def box(self, enc: EncodingConfig) -> float:
        if self.box_parameter == "auto":
            return enc.alpha_max
        c = float(self.box_parameter)
        if c < enc.alpha_max:
            raise ConfigError(f"box parameter {c} is below the largest encodable multiplier "
                              f"{enc.alpha_max}; multipliers would leave [0, C]")
        return c

    def to_dict(self) -> dict:
        return {"temperature": self.temperature, "box_parameter": self.box_parameter,
                "mode": self.mode}


def resolve_temperature(samples: SampleSet, cfg: BoltzmannConfig) -> float:
    if cfg.temperature is not None:
        return float(cfg.temperature)
    spread = float(np.std(samples.energies))
    return spread if spread > 0 else 1.0


def boltzmann_weights(samples: SampleSet, cfg: BoltzmannConfig = BoltzmannConfig()) -> np.ndarray:
    if len(samples) == 0:
        raise InputError("cannot weight an empty sample set")
    if not samples.deduplicated:
        raise InputError("Boltzmann weights need a deduplicated sample set")
    t = resolve_temperature(samples, cfg)
    e = samples.energies
    w = np.exp(-(e - e.min()) / t)
    return w / w.sum()


def best_only_weights(samples: SampleSet) -> np.ndarray:
    hit = (samples.energies == samples.energies.min()).astype(float)
    return hit / hit.sum()


def weighted_alphas(samples: SampleSet, weights, cfg: EncodingConfig) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(samples),):
        raise InputError(f"expected {len(samples)} weights, got shape {weights.shape}")
    n_vars = samples.states.shape[1]
    if n_vars % cfg.bits:
        raise InputError(f"{n_vars} variables is not a multiple of {cfg.bits} bits")
    decoded = samples.states.reshape(len(samples), -1, cfg.bits) @ cfg.place_values
    return np.clip(weights @ decoded, 0.0, cfg.alpha_max)


def probabilistic_bias(alphas, train: TrainingSet, gram: np.ndarray, box: float) -> float:
    """Bias weighted by ``alpha_n (C - alpha_n)``.

    Falls back to the mean residual over samples with ``alpha_n > 0`` when every
    multiplier sits on a bound (and to 0 when none is positive).
    """
    alphas = np.asarray(alphas, dtype=float)
    if alphas.shape != (len(train),) or not np.all(np.isfinite(alphas)):
        raise InputError("alphas must be finite and aligned with the training set")
    if np.any(alphas < -1e-9) or np.any(alphas > box + 1e-9):
        raise InputError(f"alphas must lie in [0, {box}]")
    y = train.labels.astype(float)
    residual = y - gram.T @ (alphas * y)
    w = alphas * (box - alphas)
    denom = w.sum()
    if denom >= BIAS_DEGENERACY:
        return float(w @ residual / denom)
    support = alphas > 0
    if not support.any():
        return 0.0
    return float(residual[support].mean())


@dataclass(frozen=True, eq=False)
class BinaryModel:
    alphas: np.ndarray
    bias: float
    support_features: np.ndarray
    support_labels: np.ndarray
    kernel: KernelSpec
    encoding: Optional[EncodingConfig] = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.array(self.alphas, dtype=float)
        x = np.array(self.support_features, dtype=float)
        y = np.array(self.support_labels, dtype=np.int64)
        if x.ndim != 2 or a.shape != (x.shape[0],) or y.shape != a.shape:
            raise InputError("alphas, support features and labels must align")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(x)) and np.isfinite(self.bias)):
            raise InputError("model parameters must be finite")
        for arr in (a, x, y):
            arr.setflags(write=False)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "support_features", x)
        object.__setattr__(self, "support_labels", y)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def dim(self) -> int:
        return self.support_features.shape[1]

    def to_dict(self) -> dict:
        return {
            "alphas": self.alphas.tolist(),
            "bias": self.bias,
            "kernel": self.kernel.to_dict(),
            "support_features": self.support_features.tolist(),
            "support_labels": self.support_labels.tolist(),
            "encoding": None if self.encoding is None else self.encoding.to_dict(),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BinaryModel":
        enc = d.get("encoding")
        return cls(alphas=np.array(d["alphas"], dtype=float), bias=float(d["bias"]),
                   support_features=np.array(d["support_features"], dtype=float).reshape(
                       len(d["alphas"]), -1),
                   support_labels=np.array(d["support_labels"]),
                   kernel=KernelSpec.from_dict(d["kernel"]),
                   encoding=None if enc is None else EncodingConfig.from_dict(enc),
                   provenance=dict(d.get("provenance", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def aggregate(samples: SampleSet, train: TrainingSet, enc: EncodingConfig,
              cfg: BoltzmannConfig = BoltzmannConfig(),
              gram: Optional[np.ndarray] = None) -> BinaryModel:
    """Boltzmann-weighted (or best-only) multipliers plus bias for one training set."""
    samples = deduplicate(samples)
    if samples.states.shape[1] != len(train) * enc.bits:
        raise InputError(f"samples have {samples.states.shape[1]} variables; expected "
                         f"{len(train)} x {enc.bits}")
    box = cfg.box(enc)
    if cfg.mode == "best":
        weights, temperature = best_only_weights(samples), None
    else:
        temperature = resolve_temperature(samples, cfg)
        weights = boltzmann_weights(samples, BoltzmannConfig(temperature, cfg.box_parameter))
    alphas = weighted_alphas(samples, weights, enc)
    if gram is None:
        gram = compute_gram(train, enc.kernel)
    bias = probabilistic_bias(alphas, train, gram, box)
    provenance = {
        "sampler_info": samples.sampler_info,
        "problem_digest": samples.problem_digest,
        "mode": cfg.mode,
        "temperature": temperature,
        "box_parameter": box,
        "distinct_states": len(samples),
        "min_energy": samples.min_energy,
    }
    return BinaryModel(alphas, bias, train.features, train.labels, enc.kernel, enc, provenance)
