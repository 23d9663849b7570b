"""Probabilistic QUBO-trained support vector machines.

SVM training is cast as a QUBO over binary-encoded dual multipliers, sampled
with a pluggable sampler, and the sampled states are blended into continuous
multipliers with Boltzmann weights. Batching keeps each QUBO within a variable
budget; one-vs-one voting handles multiclass data.
"""
from .boltzmann import (BinaryModel, BoltzmannConfig, aggregate, boltzmann_weights,
                        probabilistic_bias, weighted_alphas)
from .data import Dataset, Metrics, load_csv, metrics, split, subsample
from .ensemble import (BatchConfig, EnsembleModel, ensemble_margin, partition,
                       predict_ensemble, train_ensemble)
from .errors import (CapacityError, ConfigError, InputError, IntegrityError, ParseError,
                     ProvenanceError, QsvmError)
from .ovo import OvoModel, build_pair_dataset, predict_ovo, train_ovo
from .qubo import (EncodingConfig, KernelSpec, QuboProblem, TrainingSet, build_qubo,
                   compute_gram, decode_alphas, qubo_energy)
from .sampler import (AnnealConfig, AnnealingSampler, ExactSampler, ImportedSampler, SampleSet,
                      anneal, deduplicate, enumerate_exact, import_samples)
from .svm import decision_value, predict_binary, train_binary

__version__ = "0.1.0"
