import numpy as np
import pytest

from linecodec import weights


def rel_dev(a: np.ndarray, b: np.ndarray) -> float:
    """Max absolute deviation normalized by the reference spread."""
    spread = float(np.asarray(b).std())
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b)))) / (spread or 1.0)


@pytest.fixture
def xs_config():
    return weights.preset("XS")


@pytest.fixture
def xs_weights(xs_config):
    return weights.random_weights(xs_config, seed=1234)


def random_cube_samples(rng, nx, ny, nz, high=10001):
    return rng.integers(0, high, size=(ny, nx, nz)).astype(np.uint16)
