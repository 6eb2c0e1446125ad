"""Raw hyperspectral cube I/O and per-line iteration.

Cubes are headerless files of little-endian unsigned 16-bit samples in one of
the three classic storage orders (BSQ, BIL, BIP). In memory the canonical
layout is ``(y, x, z)`` with the band axis fastest, which is the order the
per-line prediction pipeline consumes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .digest import digest64


class CubeFormatError(ValueError):
    pass


class SampleOrder(enum.Enum):
    BSQ = "bsq"  # file axes (z, y, x)
    BIL = "bil"  # file axes (y, z, x)
    BIP = "bip"  # file axes (y, x, z)

    @classmethod
    def parse(cls, name: str) -> "SampleOrder":
        try:
            return cls(name.lower())
        except ValueError:
            raise CubeFormatError(f"unknown sample order {name!r}") from None


# canonical (y, x, z) -> file axes
_TO_FILE = {
    SampleOrder.BSQ: (2, 0, 1),
    SampleOrder.BIL: (0, 2, 1),
    SampleOrder.BIP: (0, 1, 2),
}
# file axes -> canonical (y, x, z)
_FROM_FILE = {
    SampleOrder.BSQ: (1, 2, 0),
    SampleOrder.BIL: (0, 2, 1),
    SampleOrder.BIP: (0, 1, 2),
}


@dataclass(frozen=True)
class HyperCube:
    """An in-memory cube: ``samples`` has shape (ny, nx, nz), dtype uint16."""

    nx: int
    ny: int
    nz: int
    order: SampleOrder
    samples: np.ndarray

    def __post_init__(self):
        if self.nx < 1 or self.ny < 2 or self.nz < 2:
            raise CubeFormatError(
                f"cube needs nx>=1, ny>=2, nz>=2, got {self.nx}x{self.ny}x{self.nz}"
            )
        if self.samples.shape != (self.ny, self.nx, self.nz):
            raise CubeFormatError(
                f"sample array shape {self.samples.shape} does not match "
                f"(ny, nx, nz)=({self.ny}, {self.nx}, {self.nz})"
            )
        if self.samples.dtype != np.uint16:
            raise CubeFormatError(f"samples must be uint16, got {self.samples.dtype}")

    @property
    def n_samples(self) -> int:
        return self.nx * self.ny * self.nz

    def checksum(self) -> int:
        """Digest over the canonical (y, x, z) little-endian byte stream."""
        return digest64(np.ascontiguousarray(self.samples).astype("<u2").tobytes())


@dataclass(frozen=True)
class LineSlab:
    """One along-track line: all columns, all bands. ``data`` is (nx, nz)."""

    y: int
    data: np.ndarray


def read_cube(path, nx: int, ny: int, nz: int, order: SampleOrder) -> HyperCube:
    """Read a raw cube file; the file must hold exactly 2*nx*ny*nz bytes."""
    path = Path(path)
    expected = 2 * nx * ny * nz
    actual = path.stat().st_size
    if actual != expected:
        raise CubeFormatError(
            f"{path}: size {actual} bytes, expected {expected} for "
            f"{nx}x{ny}x{nz} uint16 samples"
        )
    flat = np.fromfile(path, dtype="<u2")
    shape = {
        SampleOrder.BSQ: (nz, ny, nx),
        SampleOrder.BIL: (ny, nz, nx),
        SampleOrder.BIP: (ny, nx, nz),
    }[order]
    canonical = flat.reshape(shape).transpose(_FROM_FILE[order])
    samples = np.ascontiguousarray(canonical).astype(np.uint16)
    return HyperCube(nx=nx, ny=ny, nz=nz, order=order, samples=samples)


def write_cube(cube: HyperCube, path, order: SampleOrder | None = None) -> None:
    """Write the cube's samples in the given storage order (default: its own)."""
    order = cube.order if order is None else order
    arr = cube.samples.transpose(_TO_FILE[order])
    np.ascontiguousarray(arr).astype("<u2").tofile(Path(path))


def cube_from_samples(samples: np.ndarray, order: SampleOrder = SampleOrder.BIP) -> HyperCube:
    samples = np.ascontiguousarray(samples, dtype=np.uint16)
    ny, nx, nz = samples.shape
    return HyperCube(nx=nx, ny=ny, nz=nz, order=order, samples=samples)


def iter_lines(cube: HyperCube):
    """Yield the ny line slabs in increasing y. Slab data are read-only views."""
    for y in range(cube.ny):
        view = cube.samples[y]
        view.flags.writeable = False
        yield LineSlab(y=y, data=view)
