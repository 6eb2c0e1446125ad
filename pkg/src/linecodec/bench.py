"""Throughput and memory scaling measurements over synthetic cubes."""

from __future__ import annotations

import time

import numpy as np

from .codec import compress
from .cube import cube_from_samples
from .weights import preset, random_weights


def synthetic_cube(nx: int, ny: int, nz: int, seed: int):
    """Smooth-ish random cube; content does not matter for timing, but a
    non-degenerate one keeps the entropy coder on its normal path."""
    rng = np.random.default_rng(seed)
    base = rng.integers(200, 4000, size=(1, 1, nz))
    wander = np.cumsum(rng.integers(-8, 9, size=(ny, nx, nz)), axis=0)
    samples = np.clip(base + wander, 0, 10000).astype(np.uint16)
    return cube_from_samples(samples)


# (nx, ny, nz) grid: a base point plus one sweep per axis
DEFAULT_SIZES = [
    (16, 8, 8),
    (16, 4, 8), (16, 16, 8), (16, 32, 8),
    (8, 8, 8), (24, 8, 8), (32, 8, 8),
    (16, 8, 4), (16, 8, 12), (16, 8, 16),
    (8, 4, 4), (8, 1024, 4),
]


def run_bench(seed: int, sizes=None) -> list[dict]:
    cfg = preset("XS")
    wts = random_weights(cfg, seed)
    rows = []
    for nx, ny, nz in (sizes or DEFAULT_SIZES):
        cube = synthetic_cube(nx, ny, nz, seed)
        t0 = time.perf_counter()
        _, stats = compress(cfg, wts, cube, m=0, weights_checksum=0)
        wall = time.perf_counter() - t0
        rows.append({
            "nx": nx, "ny": ny, "nz": nz,
            "samples": cube.n_samples,
            "wall_s": round(wall, 6),
            "samples_per_s": round(cube.n_samples / wall, 1),
            "state_bytes": stats.state_bytes,
            "bpppc": round(stats.bpppc, 6),
        })
    return rows


def report_lines(rows: list[dict]) -> list[str]:
    out = []
    for row in rows:
        fields = " ".join(f"{k}={row[k]}" for k in
                          ("nx", "ny", "nz", "samples", "wall_s",
                           "samples_per_s", "state_bytes", "bpppc"))
        out.append("bench " + fields)
    return out
