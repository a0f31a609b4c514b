import numpy as np
import pytest

from feelsim.learning.data import LocalDataset, make_blobs
from feelsim.learning.model import ModelShape, init_params

ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for ok, name, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def blobs():
    return make_blobs(num_classes=3, dim=4, samples_per_class=20, seed=5, separation=2.0)


@pytest.fixture
def small_shape():
    return ModelShape(input_dim=4, hidden=5, classes=3)


@pytest.fixture
def small_params(small_shape):
    return init_params(small_shape, seed=3, std=0.5)


@pytest.fixture
def tiny_dataset():
    rng = np.random.default_rng(0)
    return LocalDataset(rng.standard_normal((9, 4)), rng.integers(0, 3, 9))
