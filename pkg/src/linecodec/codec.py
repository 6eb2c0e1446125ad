"""Whole-cube compression: glue between the prediction pipeline and the
bitstream container, plus the stats the CLI reports."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .bitstream import StreamFormatError, StreamHeader, StreamReader, StreamWriter
from .cube import HyperCube, cube_from_samples
from .linepred import LinePredState
from .pipeline import (decode_cube, dpcm_first_line, encode_line, normalize,
                       predict_line, prequantize)
from .weights import ModelConfig, WeightSet


@dataclass
class CompressStats:
    nx: int
    ny: int
    nz: int
    m: int
    total_bits: int
    band_bits: np.ndarray
    guard_bits: int
    state_bytes: int
    wall_s: float

    @property
    def n_samples(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def bpppc(self) -> float:
        return self.total_bits / self.n_samples

    @property
    def guard_bpppc(self) -> float:
        return self.guard_bits / self.n_samples

    @property
    def samples_per_s(self) -> float:
        return self.n_samples / self.wall_s if self.wall_s > 0 else float("inf")

    def report_lines(self) -> list[str]:
        lines = [
            f"mode={'near-lossless' if self.m else 'lossless'}",
            f"m={self.m}",
            f"nx={self.nx}",
            f"ny={self.ny}",
            f"nz={self.nz}",
            f"total_bits={self.total_bits}",
            f"bpppc={self.bpppc:.6f}",
            f"guard_bits={self.guard_bits}",
            f"guard_bpppc={self.guard_bpppc:.6f}",
            f"state_bytes={self.state_bytes}",
            f"wall_s={self.wall_s:.6f}",
            f"samples_per_s={self.samples_per_s:.1f}",
        ]
        for z in range(self.nz):
            rate = self.band_bits[z] / (self.nx * self.ny)
            lines.append(f"band_bpppc.{z}={rate:.6f}")
        return lines


def compress(cfg: ModelConfig, wts: WeightSet, cube: HyperCube, m: int,
             weights_checksum: int) -> tuple[bytes, CompressStats]:
    """Compress a cube; with m > 0 the cube is prequantized first, bounding
    every reconstruction error by m."""
    t0 = time.perf_counter()
    work = prequantize(cube, m)
    header = StreamHeader(
        nx=work.nx, ny=work.ny, nz=work.nz, order=work.order, m=m,
        config_digest=cfg.digest(), weights_checksum=weights_checksum,
        guard_tau=cfg.guard_tau, cube_checksum=work.checksum(),
    )
    writer = StreamWriter(header)
    writer.write_dpcm(dpcm_first_line(work.samples[0]))

    state = LinePredState.initial(len(wts.line_pairs), work.nx, work.nz, cfg.f)
    prev_enc = encode_line(normalize(work.samples[0], cfg.scale), wts)
    for y in range(1, work.ny):
        planes, state, prev_enc = predict_line(cfg, wts, state, prev_enc,
                                               work.samples[y])
        writer.write_line(planes)

    data = writer.finalize()
    stats = CompressStats(
        nx=work.nx, ny=work.ny, nz=work.nz, m=m,
        total_bits=8 * len(data),
        band_bits=writer.band_bits.copy(),
        guard_bits=writer.guard_bits,
        state_bytes=len(state.serialize()),
        wall_s=time.perf_counter() - t0,
    )
    return data, stats


def decompress(cfg: ModelConfig, wts: WeightSet, data: bytes,
               weights_checksum: int, nudge=None) -> HyperCube:
    """Decompress a stream, verifying weight identity and the cube digest."""
    reader = StreamReader(data)
    header = reader.header
    if header.weights_checksum != weights_checksum:
        raise StreamFormatError(
            "stream was produced with a different weight file "
            f"(checksum {header.weights_checksum:#018x} != {weights_checksum:#018x})"
        )
    if header.config_digest != cfg.digest():
        raise StreamFormatError("stream config digest does not match the weight file")
    samples = decode_cube(cfg, wts, reader, header.nx, header.ny, header.nz,
                          nudge=nudge)
    cube = cube_from_samples(samples, header.order)
    if cube.checksum() != header.cube_checksum:
        raise StreamFormatError(
            "reconstructed cube fails its checksum (corruption or guard divergence)"
        )
    return cube
