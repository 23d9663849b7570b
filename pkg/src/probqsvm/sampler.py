"""Samplers producing low-energy assignments for a :class:`QuboProblem`.

Three backends share one contract, ``sample(problem, key=()) -> SampleSet``:
simulated annealing, exhaustive enumeration, and validated import of sample
sets produced elsewhere (e.g. by Ising hardware fed an exported QUBO).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional, Protocol, Sequence

import numba
import numpy as np

from .errors import CapacityError, ConfigError, IntegrityError, ParseError, ProvenanceError
from .qubo import QuboProblem

ENERGY_TOLERANCE = 1e-6
DEFAULT_EXACT_CAP = 24


class SampleRecord(NamedTuple):
    assignment: np.ndarray
    energy: float
    occurrences: int


class SampleSet:
    """Assignments (one row each), their energies and occurrence counts."""

    def __init__(self, states, energies, occurrences=None, problem_digest: str = "",
                 sampler_info: str = "", deduplicated: bool = False):
        states = np.array(states, dtype=np.uint8)
        if states.ndim != 2 or states.shape[0] == 0:
            raise ValueError("a SampleSet needs at least one 2-D record")
        energies = np.array(energies, dtype=float)
        if occurrences is None:
            occurrences = np.ones(len(states), dtype=np.int64)
        occurrences = np.array(occurrences, dtype=np.int64)
        if energies.shape != (len(states),) or occurrences.shape != (len(states),):
            raise ValueError("states, energies and occurrences must align")
        if np.any(occurrences < 1):
            raise ValueError("occurrences must be positive")
        for arr in (states, energies, occurrences):
            arr.setflags(write=False)
        self.states = states
        self.energies = energies
        self.occurrences = occurrences
        self.problem_digest = problem_digest
        self.sampler_info = sampler_info
        self.deduplicated = bool(deduplicated)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self) -> Iterator[SampleRecord]:
        for s, e, c in zip(self.states, self.energies, self.occurrences):
            yield SampleRecord(s, float(e), int(c))

    @property
    def records(self) -> list[SampleRecord]:
        return list(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SampleSet):
            return NotImplemented
        return (np.array_equal(self.states, other.states)
                and np.array_equal(self.energies, other.energies)
                and np.array_equal(self.occurrences, other.occurrences)
                and self.problem_digest == other.problem_digest
                and self.sampler_info == other.sampler_info
                and self.deduplicated == other.deduplicated)

    def __repr__(self) -> str:
        return (f"SampleSet({len(self)} records, min_energy={self.energies.min():.6g}, "
                f"sampler={self.sampler_info!r}, deduplicated={self.deduplicated})")

    @property
    def min_energy(self) -> float:
        return float(self.energies.min())

    def to_document(self) -> dict:
        return {
            "problem_digest": self.problem_digest,
            "sampler_info": self.sampler_info,
            "deduplicated": self.deduplicated,
            "records": [
                {"assignment": "".join("1" if b else "0" for b in s),
                 "energy": float(e), "occurrences": int(c)}
                for s, e, c in zip(self.states, self.energies, self.occurrences)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_document(), indent=1)


def batch_energies(problem: QuboProblem, states: np.ndarray) -> np.ndarray:
    s = np.asarray(states, dtype=float)
    return np.einsum("ij,ij->i", s @ problem.coefficients, s)


def deduplicate(samples: SampleSet) -> SampleSet:
    """Collapse repeated assignments, summing occurrences; first-seen order is kept."""
    if samples.deduplicated:
        return samples
    _, first, inverse = np.unique(samples.states, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    counts = np.bincount(inverse, weights=samples.occurrences).astype(np.int64)
    order = np.argsort(first, kind="stable")
    keep = first[order]
    return SampleSet(samples.states[keep], samples.energies[keep], counts[order],
                     samples.problem_digest, samples.sampler_info, deduplicated=True)


# -- simulated annealing -----------------------------------------------------

@dataclass(frozen=True)
class AnnealConfig:
    num_reads: int = 100
    sweeps_per_read: int = 1000
    t_initial: Optional[float] = None  # None: 10 * max |coefficient|
    t_final: float = 0.01
    schedule: str = "geometric"
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1:
            raise ConfigError(f"num_reads must be >= 1, got {self.num_reads}")
        if self.sweeps_per_read < 1:
            raise ConfigError(f"sweeps_per_read must be >= 1, got {self.sweeps_per_read}")
        if not self.t_final > 0:
            raise ConfigError(f"t_final must be > 0, got {self.t_final}")
        if self.t_initial is not None and not self.t_initial > self.t_final:
            raise ConfigError(f"t_initial ({self.t_initial}) must exceed t_final ({self.t_final})")
        if self.schedule != "geometric":
            raise ConfigError(f"unsupported schedule {self.schedule!r}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    def temperatures(self, problem: QuboProblem) -> np.ndarray:
        t0 = self.t_initial
        if t0 is None:
            scale = float(np.abs(problem.coefficients).max())
            t0 = max(10.0 * scale, 10.0 * self.t_final)
        if self.sweeps_per_read == 1:
            return np.array([self.t_final])
        return np.geomspace(t0, self.t_final, self.sweeps_per_read)

    def to_dict(self) -> dict:
        return {"num_reads": self.num_reads, "sweeps_per_read": self.sweeps_per_read,
                "t_initial": self.t_initial, "t_final": self.t_final,
                "schedule": self.schedule, "seed": self.seed}


@numba.njit(cache=True)
def _metropolis_read(diag, coupling, state, temps, order, uniforms):
    n = state.shape[0]
    field = diag.copy()
    for i in range(n):
        if state[i]:
            for j in range(n):
                field[j] += coupling[i, j]
    for s in range(temps.shape[0]):
        t = temps[s]
        for step in range(n):
            i = order[s, step]
            delta = field[i] if state[i] == 0 else -field[i]
            if delta <= 0.0 or uniforms[s, step] < np.exp(-delta / t):
                sign = 1.0 if state[i] == 0 else -1.0
                state[i] = 1 - state[i]
                for j in range(n):
                    field[j] += sign * coupling[i, j]
    return state


def stream_seed(seed: int, key: Sequence[int] = ()) -> int:
    """Derive an independent 64-bit seed for a (seed, key...) stream."""
    if not key:
        return int(seed)
    ss = np.random.SeedSequence([int(seed), *[int(k) for k in key]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def anneal(problem: QuboProblem, cfg: AnnealConfig = AnnealConfig()) -> SampleSet:
    """Single-bit-flip Metropolis annealing, one independent stream per read."""
    q = problem.coefficients
    n = problem.num_vars
    diag = np.ascontiguousarray(np.diag(q), dtype=np.float64)
    coupling = q + q.T
    np.fill_diagonal(coupling, 0.0)
    coupling = np.ascontiguousarray(coupling)
    temps = cfg.temperatures(problem)
    base = np.tile(np.arange(n, dtype=np.int64), (len(temps), 1))
    states = np.empty((cfg.num_reads, n), dtype=np.uint8)
    for read in range(cfg.num_reads):
        rng = np.random.default_rng([cfg.seed, read])
        init = rng.integers(0, 2, size=n, dtype=np.uint8)
        order = rng.permuted(base, axis=1)
        uniforms = rng.random((len(temps), n))
        states[read] = _metropolis_read(diag, coupling, init, temps, order, uniforms)
    info = (f"anneal(reads={cfg.num_reads}, sweeps={cfg.sweeps_per_read}, "
            f"t0={temps[0]:.6g}, t1={temps[-1]:.6g}, seed={cfg.seed})")
    return SampleSet(states, batch_energies(problem, states), None, problem.digest, info)


# -- exhaustive enumeration ----------------------------------------------------

def enumerate_exact(problem: QuboProblem, max_vars: int = DEFAULT_EXACT_CAP) -> SampleSet:
    """All ``2**num_vars`` assignments; bit p of the row index is variable p."""
    n = problem.num_vars
    if n > max_vars:
        raise CapacityError(f"exhaustive enumeration of {n} variables exceeds the cap of {max_vars}")
    idx = np.arange(2**n, dtype=np.int64)
    states = ((idx[:, None] >> np.arange(n)) & 1).astype(np.uint8)
    energies = np.concatenate([batch_energies(problem, states[i:i + 65536])
                               for i in range(0, len(states), 65536)])
    return SampleSet(states, energies, None, problem.digest, f"exact(n={n})", deduplicated=True)


# -- import ----------------------------------------------------------------------

def import_samples(problem: QuboProblem, source) -> SampleSet:
    """Validate an external sample-set document against ``problem``.

    ``source`` is a parsed dict or a JSON string. Energies are recomputed
    locally; any record disagreeing by more than 1e-6 is rejected.
    """
    if isinstance(source, (str, bytes)):
        try:
            source = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ParseError(f"sample document is not valid JSON: {exc}")
    if not isinstance(source, dict) or not isinstance(source.get("records"), list):
        raise ParseError("sample document must be an object with a 'records' array")
    digest = source.get("problem_digest")
    if digest != problem.digest:
        raise ProvenanceError(f"sample document digest {digest!r} does not match "
                              f"problem digest {problem.digest!r}")
    records = source["records"]
    if not records:
        raise ParseError("sample document has no records")
    n = problem.num_vars
    states = np.empty((len(records), n), dtype=np.uint8)
    declared = np.empty(len(records))
    counts = np.empty(len(records), dtype=np.int64)
    for i, rec in enumerate(records):
        try:
            bits = rec["assignment"]
            declared[i] = float(rec["energy"])
            counts[i] = int(rec.get("occurrences", 1))
        except (KeyError, TypeError, ValueError):
            raise ParseError(f"record {i}: malformed record {rec!r}")
        if not isinstance(bits, str) or len(bits) != n or set(bits) - {"0", "1"}:
            raise ParseError(f"record {i}: assignment must be a string of {n} '0'/'1' characters")
        if counts[i] < 1:
            raise ParseError(f"record {i}: occurrences must be positive")
        states[i] = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
    energies = batch_energies(problem, states)
    bad = np.flatnonzero(~(np.abs(energies - declared) <= ENERGY_TOLERANCE))
    if bad.size:
        i = int(bad[0])
        raise IntegrityError(f"record {i}: declared energy {declared[i]!r} differs from "
                             f"recomputed {energies[i]!r}")
    dedup = bool(source.get("deduplicated", False))
    if dedup and len(np.unique(states, axis=0)) != len(states):
        raise IntegrityError("document claims deduplicated records but contains repeats")
    return SampleSet(states, energies, counts, problem.digest,
                     str(source.get("sampler_info", "")), deduplicated=dedup)


# -- sampler backends -----------------------------------------------------------

class Sampler(Protocol):
    def sample(self, problem: QuboProblem, key: Sequence[int] = ()) -> SampleSet: ...


@dataclass(frozen=True)
class AnnealingSampler:
    config: AnnealConfig = AnnealConfig()

    def sample(self, problem, key=()):
        cfg = self.config
        if key:
            cfg = AnnealConfig(cfg.num_reads, cfg.sweeps_per_read, cfg.t_initial,
                               cfg.t_final, cfg.schedule, stream_seed(cfg.seed, key))
        return anneal(problem, cfg)


@dataclass(frozen=True)
class ExactSampler:
    max_vars: int = DEFAULT_EXACT_CAP

    def sample(self, problem, key=()):
        return enumerate_exact(problem, self.max_vars)


@dataclass(frozen=True)
class ImportedSampler:
    """Serves previously produced sample documents, looked up by problem digest."""

    documents: dict = field(default_factory=dict)

    @classmethod
    def from_documents(cls, docs: Iterable[dict]) -> "ImportedSampler":
        return cls({d.get("problem_digest"): d for d in docs})

    def sample(self, problem, key=()):
        doc = self.documents.get(problem.digest)
        if doc is None:
            raise ProvenanceError(f"no imported sample set for problem digest {problem.digest}")
        return import_samples(problem, doc)
