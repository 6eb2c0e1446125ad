import numpy as np

from cubetrainer.synth import SyntheticCubeSpec, constant_cube, generate_cube


def test_deterministic_per_seed():
    spec = SyntheticCubeSpec(seed=42)
    assert np.array_equal(generate_cube(spec), generate_cube(spec))
    other = SyntheticCubeSpec(seed=43)
    assert not np.array_equal(generate_cube(spec), generate_cube(other))


def test_range_and_shape():
    spec = SyntheticCubeSpec(nx=10, ny=8, nz=6, seed=1)
    cube = generate_cube(spec)
    assert cube.shape == (8, 10, 6)
    assert cube.dtype == np.uint16
    assert cube.max() <= 10000


def test_has_spatial_structure():
    # neighboring samples correlate far more than random pairs would
    cube = generate_cube(SyntheticCubeSpec(seed=5)).astype(np.float64)
    d_neighbor = np.abs(np.diff(cube, axis=0)).mean()
    rng = np.random.default_rng(0)
    shuffled = rng.permutation(cube.reshape(-1, cube.shape[2]))
    d_random = np.abs(np.diff(shuffled.reshape(cube.shape), axis=0)).mean()
    assert d_neighbor < 0.2 * d_random


def test_has_spectral_structure():
    cube = generate_cube(SyntheticCubeSpec(seed=6)).astype(np.float64)
    d_band = np.abs(np.diff(cube, axis=2)).mean()
    spread = cube.std()
    assert d_band < spread


def test_constant_cube():
    cube = constant_cube(SyntheticCubeSpec(nx=4, ny=4, nz=4), 1234)
    assert (cube == 1234).all()
