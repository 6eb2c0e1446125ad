import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linecodec.cube import (CubeFormatError, HyperCube, SampleOrder,
                            cube_from_samples, iter_lines, read_cube, write_cube)

ORDERS = [SampleOrder.BSQ, SampleOrder.BIL, SampleOrder.BIP]


def test_zero_cube_bsq(tmp_path):
    path = tmp_path / "zeros.raw"
    path.write_bytes(bytes(16))  # 2x2x2 uint16
    cube = read_cube(path, 2, 2, 2, SampleOrder.BSQ)
    assert cube.samples.shape == (2, 2, 2)
    assert not cube.samples.any()


@pytest.mark.parametrize("order", ORDERS)
def test_write_read_roundtrip(tmp_path, order):
    rng = np.random.default_rng(3)
    samples = rng.integers(0, 65536, size=(8, 8, 4)).astype(np.uint16)
    cube = cube_from_samples(samples, order)
    path = tmp_path / "cube.raw"
    write_cube(cube, path)
    back = read_cube(path, 8, 8, 4, order)
    assert np.array_equal(back.samples, samples)


def test_size_mismatch(tmp_path):
    path = tmp_path / "short.raw"
    path.write_bytes(bytes(2 * 2 * 2 * 2 - 1))
    with pytest.raises(CubeFormatError, match="size"):
        read_cube(path, 2, 2, 2, SampleOrder.BIP)


def test_order_conversion_is_permutation(tmp_path):
    # BSQ -> BIL -> BSQ composes to the identity on the samples
    rng = np.random.default_rng(5)
    samples = rng.integers(0, 65536, size=(4, 4, 3)).astype(np.uint16)
    cube = cube_from_samples(samples, SampleOrder.BSQ)
    p1 = tmp_path / "a.bsq"
    write_cube(cube, p1, SampleOrder.BSQ)
    mid = read_cube(p1, 4, 4, 3, SampleOrder.BSQ)
    p2 = tmp_path / "b.bil"
    write_cube(mid, p2, SampleOrder.BIL)
    final = read_cube(p2, 4, 4, 3, SampleOrder.BIL)
    assert np.array_equal(final.samples, samples)
    # distinct orders really permute the file bytes
    assert p1.read_bytes() != p2.read_bytes()


def test_file_size_arithmetic(tmp_path):
    cube = cube_from_samples(np.zeros((2, 1, 2), np.uint16))  # nx=1, ny=2, nz=2
    path = tmp_path / "tiny.raw"
    write_cube(cube, path)
    assert path.stat().st_size == 8


def test_full_scale_roundtrip(tmp_path):
    samples = np.full((2, 3, 2), 65535, np.uint16)
    cube = cube_from_samples(samples)
    path = tmp_path / "max.raw"
    write_cube(cube, path)
    assert np.array_equal(read_cube(path, 3, 2, 2, SampleOrder.BIP).samples, samples)


def test_dimension_invariants():
    with pytest.raises(CubeFormatError):
        cube_from_samples(np.zeros((1, 4, 4), np.uint16))  # ny < 2
    with pytest.raises(CubeFormatError):
        cube_from_samples(np.zeros((4, 4, 1), np.uint16))  # nz < 2


def test_iter_lines_count_and_reassembly():
    rng = np.random.default_rng(11)
    samples = rng.integers(0, 65536, size=(2, 5, 3)).astype(np.uint16)
    cube = cube_from_samples(samples)
    slabs = list(iter_lines(cube))
    assert [s.y for s in slabs] == [0, 1]
    rebuilt = np.stack([s.data for s in slabs])
    assert np.array_equal(rebuilt, samples)


def test_iter_lines_bil_index_map(tmp_path):
    # slab 0 of a BIL file is its first nx*nz samples laid out (z, x)
    rng = np.random.default_rng(13)
    nx, ny, nz = 4, 2, 3
    flat = rng.integers(0, 65536, size=nx * ny * nz).astype("<u2")
    path = tmp_path / "cube.bil"
    flat.tofile(path)
    cube = read_cube(path, nx, ny, nz, SampleOrder.BIL)
    slab0 = next(iter_lines(cube)).data
    expected = flat[: nx * nz].reshape(nz, nx).T  # file (z, x) -> slab (x, z)
    assert np.array_equal(slab0, expected)


def test_iter_lines_views_are_readonly():
    cube = cube_from_samples(np.zeros((2, 2, 2), np.uint16))
    slab = next(iter_lines(cube))
    with pytest.raises(ValueError):
        slab.data[0, 0] = 1


@given(nx=st.integers(1, 6), ny=st.integers(2, 6), nz=st.integers(2, 6),
       order=st.sampled_from(ORDERS), seed=st.integers(0, 1 << 16))
@settings(max_examples=40, deadline=None)
def test_roundtrip_property(tmp_path_factory, nx, ny, nz, order, seed):
    rng = np.random.default_rng(seed)
    samples = rng.integers(0, 65536, size=(ny, nx, nz)).astype(np.uint16)
    path = tmp_path_factory.mktemp("cubes") / "cube.raw"
    write_cube(cube_from_samples(samples, order), path)
    assert np.array_equal(read_cube(path, nx, ny, nz, order).samples, samples)


def test_checksum_tracks_content():
    a = cube_from_samples(np.zeros((2, 2, 2), np.uint16))
    b_samples = np.zeros((2, 2, 2), np.uint16)
    b_samples[1, 1, 1] = 1
    b = cube_from_samples(b_samples)
    assert a.checksum() != b.checksum()
