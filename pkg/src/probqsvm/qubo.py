"""QUBO construction for the binary-encoded SVM dual.

The stored matrix is upper triangular with linear terms on the diagonal, and
its quadratic form is the *negated* dual objective plus the squared
equality-constraint penalty, so lower energy means a better multiplier set::

    E(a) = -sum_n alpha_n
           + 1/2 sum_{n,m} alpha_n alpha_m y_n y_m K(x_n, x_m)
           + penalty * (sum_n alpha_n y_n)^2

with ``alpha_n = sum_k base**k * a[bits*n + k]``.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CapacityError, ConfigError, InputError, ParseError, ProvenanceError

DEFAULT_VAR_BUDGET = 550
SIGN_CONVENTION = "minimize-negated-dual"
KERNEL_KINDS = ("gaussian", "linear", "polynomial")


def resolve_budget(budget: Optional[int] = None) -> int:
    """Variable budget: explicit value, else ``QSVM_VAR_BUDGET``, else 550."""
    if budget is None:
        env = os.environ.get("QSVM_VAR_BUDGET")
        if env is None:
            return DEFAULT_VAR_BUDGET
        try:
            budget = int(env)
        except ValueError:
            raise ConfigError(f"QSVM_VAR_BUDGET must be an integer, got {env!r}")
    if budget < 1:
        raise ConfigError(f"variable budget must be >= 1, got {budget}")
    return int(budget)


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "gaussian"
    gamma: float = 1.0
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ConfigError(f"unknown kernel {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.kind == "gaussian" and not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise ConfigError(f"gaussian kernel needs gamma > 0, got {self.gamma}")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ConfigError(f"polynomial degree must be a positive integer, got {self.degree}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "gamma": float(self.gamma),
                "degree": int(self.degree), "coef0": float(self.coef0)}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(kind=d["kind"], gamma=float(d.get("gamma", 1.0)),
                   degree=int(d.get("degree", 3)), coef0=float(d.get("coef0", 0.0)))


@dataclass(frozen=True)
class EncodingConfig:
    base: int = 2
    bits: int = 2
    penalty: float = 0.001
    kernel: KernelSpec = field(default_factory=KernelSpec)

    def __post_init__(self):
        if int(self.base) != self.base or self.base < 2:
            raise ConfigError(f"base must be an integer >= 2, got {self.base}")
        if int(self.bits) != self.bits or self.bits < 1:
            raise ConfigError(f"bits must be an integer >= 1, got {self.bits}")
        if not np.isfinite(self.penalty) or self.penalty < 0:
            raise ConfigError(f"penalty must be finite and >= 0, got {self.penalty}")
        if not np.isfinite(self.alpha_max):
            raise ConfigError("base**bits overflows")

    @property
    def place_values(self) -> np.ndarray:
        return float(self.base) ** np.arange(self.bits)

    @property
    def alpha_max(self) -> float:
        return float(self.place_values.sum())

    def to_dict(self) -> dict:
        return {"base": int(self.base), "bits": int(self.bits),
                "penalty": float(self.penalty), "kernel": self.kernel.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "EncodingConfig":
        return cls(base=int(d["base"]), bits=int(d["bits"]), penalty=float(d["penalty"]),
                   kernel=KernelSpec.from_dict(d["kernel"]))


@dataclass(frozen=True)
class TrainingSet:
    """Features (N x d) with labels in {+1, -1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        x = np.array(self.features, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.asarray(self.labels)
        if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
            raise InputError(f"features must be a non-empty 2-D array, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InputError("features contain non-finite values")
        if y.shape != (x.shape[0],):
            raise InputError(f"expected {x.shape[0]} labels, got shape {y.shape}")
        if not np.all((y == 1) | (y == -1)):
            raise InputError("labels must be +1 or -1")
        x.setflags(write=False)
        y = y.astype(np.int64)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


def kernel_matrix(a: np.ndarray, b: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    """Kernel values between the rows of ``a`` and the rows of ``b``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InputError("kernel inputs contain non-finite values")
    if a.shape[1] != b.shape[1]:
        raise InputError(f"feature dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if kernel.kind == "linear":
        return a @ b.T
    if kernel.kind == "polynomial":
        return (a @ b.T + kernel.coef0) ** int(kernel.degree)
    # explicit differences keep K(x, x) exactly 1
    out = np.empty((a.shape[0], b.shape[0]))
    step = max(1, 2**22 // max(1, b.size))
    for start in range(0, a.shape[0], step):
        diff = a[start:start + step, None, :] - b[None, :, :]
        out[start:start + step] = np.exp(-kernel.gamma * np.einsum("ijk,ijk->ij", diff, diff))
    return out


def compute_gram(train: TrainingSet, kernel: KernelSpec) -> np.ndarray:
    g = kernel_matrix(train.features, train.features, kernel)
    # symmetrize away rounding differences from the matmul kernels
    return 0.5 * (g + g.T)


@dataclass(frozen=True, eq=False)
class QuboProblem:
    coefficients: np.ndarray
    num_samples: int
    encoding: EncodingConfig
    gram: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        for name in ("coefficients", "gram", "labels"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.num_samples * self.encoding.bits
        if self.coefficients.shape != (n, n):
            raise InputError(f"coefficient matrix must be {n}x{n}, got {self.coefficients.shape}")
        if not np.all(np.isfinite(self.coefficients)):
            raise InputError("coefficient matrix has non-finite entries")
        if np.any(np.tril(self.coefficients, -1)):
            raise InputError("coefficient matrix must be upper triangular")

    @property
    def num_vars(self) -> int:
        return self.coefficients.shape[0]

    @property
    def digest(self) -> str:
        try:
            return self.__dict__["_digest"]
        except KeyError:
            pass
        h = hashlib.sha256(b"qsvm-qubo-v1")
        h.update(np.asarray(self.coefficients.shape, dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(self.coefficients, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.labels, dtype="<i8").tobytes())
        h.update(json.dumps(self.encoding.to_dict(), sort_keys=True).encode())
        value = h.hexdigest()
        object.__setattr__(self, "_digest", value)
        return value


def build_qubo(train: TrainingSet, cfg: EncodingConfig, budget: Optional[int] = None,
               gram: Optional[np.ndarray] = None) -> QuboProblem:
    """Assemble the upper-triangular QUBO for ``train`` under ``cfg``."""
    budget = resolve_budget(budget)
    n, bits = len(train), cfg.bits
    if n * bits > budget:
        raise CapacityError(f"{n} samples x {bits} bits = {n * bits} variables "
                            f"exceeds the variable budget of {budget}")
    if gram is None:
        gram = compute_gram(train, cfg.kernel)
    y = train.labels.astype(float)
    place = cfg.place_values
    scale = np.kron(y, place)  # y_n * base**k at index bits*n + k
    g = np.kron(gram, np.ones((bits, bits)))
    m = (0.5 * g + cfg.penalty) * np.outer(scale, scale)
    q = 2.0 * np.triu(m, 1)
    q[np.diag_indices_from(q)] = np.diag(m) - np.tile(place, n)
    return QuboProblem(coefficients=q, num_samples=n, encoding=cfg, gram=gram,
                       labels=train.labels.copy())


def _as_bits(assignment, n_vars: int) -> np.ndarray:
    a = np.asarray(assignment)
    if a.shape != (n_vars,):
        raise InputError(f"assignment must have length {n_vars}, got shape {a.shape}")
    if not np.all((a == 0) | (a == 1)):
        raise InputError("assignment entries must be 0 or 1")
    return a.astype(float)


def qubo_energy(problem: QuboProblem, assignment) -> float:
    a = _as_bits(assignment, problem.num_vars)
    return float(a @ problem.coefficients @ a)


def decode_alphas(assignment, cfg: EncodingConfig, n_samples: int) -> np.ndarray:
    a = _as_bits(assignment, n_samples * cfg.bits)
    return a.reshape(n_samples, cfg.bits) @ cfg.place_values


# -- interchange format -------------------------------------------------------

def format_qubo_text(problem: QuboProblem) -> str:
    q = problem.coefficients
    rows, cols = np.nonzero(q)
    lines = [f"qubo {problem.num_vars} {len(rows)}"]
    lines += [f"{p} {r} {format(q[p, r], '.17g')}" for p, r in zip(rows, cols)]
    return "\n".join(lines) + "\n"


def parse_qubo_text(text: str) -> np.ndarray:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty QUBO document")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "qubo":
        raise ParseError(f"bad QUBO header: {lines[0]!r}")
    try:
        n, nnz = int(head[1]), int(head[2])
    except ValueError:
        raise ParseError(f"bad QUBO header: {lines[0]!r}")
    if len(lines) - 1 != nnz:
        raise ParseError(f"header declares {nnz} entries, found {len(lines) - 1}")
    q = np.zeros((n, n))
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        try:
            p, r, v = int(parts[0]), int(parts[1]), float(parts[2])
        except (ValueError, IndexError):
            raise ParseError(f"line {lineno}: cannot parse {line!r}")
        if len(parts) != 3 or not (0 <= p <= r < n):
            raise ParseError(f"line {lineno}: invalid entry {line!r}")
        q[p, r] = v
    return q


def qubo_metadata(problem: QuboProblem, train: TrainingSet, **extra) -> dict:
    meta = {
        "sign_convention": SIGN_CONVENTION,
        "problem_digest": problem.digest,
        "num_vars": problem.num_vars,
        "num_samples": problem.num_samples,
        **problem.encoding.to_dict(),
        "labels": [int(v) for v in train.labels],
        "features": train.features.tolist(),
    }
    meta.update(extra)
    return meta


def problem_from_export(text: str, meta: dict) -> tuple[QuboProblem, TrainingSet]:
    """Rebuild a problem and its training set from an exported QUBO and metadata."""
    if meta.get("sign_convention") != SIGN_CONVENTION:
        raise ParseError(f"unsupported sign convention {meta.get('sign_convention')!r}")
    try:
        enc = EncodingConfig.from_dict(meta)
        train = TrainingSet(np.array(meta["features"], dtype=float), np.array(meta["labels"]))
    except KeyError as exc:
        raise ParseError(f"metadata missing field {exc}")
    coeffs = parse_qubo_text(text)
    problem = QuboProblem(coefficients=coeffs, num_samples=len(train), encoding=enc,
                          gram=compute_gram(train, enc.kernel), labels=train.labels.copy())
    expected = meta.get("problem_digest")
    if expected is not None and expected != problem.digest:
        raise ProvenanceError(f"QUBO digest {problem.digest[:12]} does not match metadata {expected[:12]}")
    return problem, train
