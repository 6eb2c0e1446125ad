"""Synthetic spatio-spectrally correlated cubes for toy training.

Each cube is a smooth spatial pattern modulated by a smooth per-band gain
curve plus a little sensor-like noise, so both the along-track/across-track
predictors and the band predictor have structure to learn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter


@dataclass(frozen=True)
class SyntheticCubeSpec:
    nx: int = 32
    ny: int = 32
    nz: int = 12
    spatial_corr: float = 6.0     # gaussian blur sigma in pixels
    spectral_smooth: float = 2.0  # blur sigma along the band axis
    noise: float = 12.0           # additive noise sigma in DN
    seed: int = 0


def generate_cube(spec: SyntheticCubeSpec) -> np.ndarray:
    """Deterministic (ny, nx, nz) uint16 cube with values in [0, 10000]."""
    rng = np.random.default_rng(spec.seed)

    pattern = gaussian_filter(rng.standard_normal((spec.ny, spec.nx)),
                              spec.spatial_corr, mode="nearest")
    span = pattern.max() - pattern.min()
    pattern = (pattern - pattern.min()) / (span if span > 0 else 1.0)

    gain = gaussian_filter(rng.standard_normal(spec.nz), spec.spectral_smooth,
                           mode="nearest")
    gspan = gain.max() - gain.min()
    gain = 0.45 + 0.55 * (gain - gain.min()) / (gspan if gspan > 0 else 1.0)

    base = rng.uniform(2500.0, 7000.0)
    clean = base * (0.35 + 0.65 * pattern)[:, :, None] * gain[None, None, :]
    noisy = clean + spec.noise * rng.standard_normal(clean.shape)
    return np.clip(np.round(noisy), 0, 10000).astype(np.uint16)


def constant_cube(spec: SyntheticCubeSpec, value: int) -> np.ndarray:
    return np.full((spec.ny, spec.nx, spec.nz), value, dtype=np.uint16)
