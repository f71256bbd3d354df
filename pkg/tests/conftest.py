import numpy as np
import pytest

from purity_vqa.state import DensityMatrix, random_density_matrix


def diag(*values) -> DensityMatrix:
    return DensityMatrix(np.array(values, dtype=float))


def random_states(count: int, dims=(2, 4, 8), seed: int = 0):
    rng = np.random.default_rng(seed)
    return [random_density_matrix(int(dims[i % len(dims)]), rng) for i in range(count)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
