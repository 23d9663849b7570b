import numpy as np
import pytest
from hypothesis import settings

from probqsvm import EncodingConfig, KernelSpec, TrainingSet

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_train(rng, n, d=2):
    x = rng.normal(size=(n, d))
    y = rng.choice([-1, 1], size=n)
    return TrainingSet(x, y)


def random_encoding(rng, bits=None):
    return EncodingConfig(
        base=int(rng.integers(2, 4)),
        bits=int(bits if bits is not None else rng.integers(1, 4)),
        penalty=float(rng.uniform(0, 2)),
        kernel=KernelSpec("gaussian", float(rng.uniform(0.2, 3.0))),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
