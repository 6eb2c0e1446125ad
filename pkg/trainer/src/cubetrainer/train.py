"""Toy training loop: l1 regression of next-line pixel values on synthetic
cubes, with the column-subsampling trick that the columnwise-independent
design makes exact."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import torch

from .model import LinePredictorModel, TrainConfig
from .synth import SyntheticCubeSpec, constant_cube, generate_cube


@dataclass
class TrainResult:
    initial_holdout: float
    final_holdout: float
    losses: list[float] = field(default_factory=list)
    wall_s: float = 0.0

    @property
    def improvement(self) -> float:
        return 1.0 - self.final_holdout / self.initial_holdout


def build_dataset(spec: SyntheticCubeSpec, count: int, seed: int,
                  constant: bool = False) -> list[np.ndarray]:
    cubes = []
    rng = np.random.default_rng(seed)
    for i in range(count):
        cube_spec = SyntheticCubeSpec(
            nx=spec.nx, ny=spec.ny, nz=spec.nz,
            spatial_corr=spec.spatial_corr, spectral_smooth=spec.spectral_smooth,
            noise=spec.noise, seed=int(rng.integers(1 << 31)))
        if constant:
            cubes.append(constant_cube(cube_spec, int(rng.integers(500, 9500))))
        else:
            cubes.append(generate_cube(cube_spec))
    return cubes


def _holdout_loss(model: LinePredictorModel, cubes: list[np.ndarray]) -> float:
    model.eval()
    with torch.no_grad():
        losses = [model.loss(torch.from_numpy(c.astype(np.int64))).item()
                  for c in cubes]
    model.train()
    return float(np.mean(losses))


def train(model: LinePredictorModel, cubes: list[np.ndarray],
          holdout: list[np.ndarray], steps: int, seed: int,
          lr: float = 2e-3, lr_final: float = 1e-4,
          columns: int | None = 16, lines: int | None = 16,
          bands: int | None = 8, log_every: int = 50,
          verbose: bool = False) -> TrainResult:
    """Each step draws a random cube and crops it: a contiguous window of
    lines (the sequence axis), a contiguous run of bands, and a random column
    subset. The crops keep steps cheap; the closed-form mixing cost grows
    quadratically with the line-window length."""
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    schedule = torch.optim.lr_scheduler.LinearLR(
        optimizer, start_factor=1.0, end_factor=lr_final / lr, total_iters=steps)

    result = TrainResult(initial_holdout=_holdout_loss(model, holdout),
                         final_holdout=float("nan"))
    t0 = time.perf_counter()
    model.train()
    for step in range(steps):
        cube = cubes[int(rng.integers(len(cubes)))]
        ny, nx, nz = cube.shape
        if lines is not None and lines < ny:
            y0 = int(rng.integers(ny - lines + 1))
            cube = cube[y0 : y0 + lines]
        if bands is not None and bands < nz:
            z0 = int(rng.integers(nz - bands + 1))
            cube = cube[:, :, z0 : z0 + bands]
        if columns is not None and columns < nx:
            cols = np.sort(rng.choice(nx, size=columns, replace=False))
            cube = cube[:, cols, :]
        loss = model.loss(torch.from_numpy(cube.astype(np.int64)))
        if not torch.isfinite(loss):
            raise FloatingPointError(f"training diverged at step {step}")
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        schedule.step()
        result.losses.append(float(loss.detach()))
        if verbose and step % log_every == 0:
            print(f"step {step:5d} loss {result.losses[-1]:.6f} "
                  f"lr {schedule.get_last_lr()[0]:.2e}")
    result.final_holdout = _holdout_loss(model, holdout)
    result.wall_s = time.perf_counter() - t0
    return result


def train_toy(preset: str, steps: int, seed: int,
              spec: SyntheticCubeSpec | None = None,
              constant: bool = False, verbose: bool = False
              ) -> tuple[LinePredictorModel, TrainResult, list[np.ndarray]]:
    """Build a model and dataset, train, and return the held-out cubes."""
    spec = spec or SyntheticCubeSpec()
    torch.manual_seed(seed)
    cfg = TrainConfig.preset(preset)
    model = LinePredictorModel(cfg)
    cubes = build_dataset(spec, count=24, seed=seed, constant=constant)
    holdout = build_dataset(spec, count=6, seed=seed + 1, constant=constant)
    result = train(model, cubes, holdout, steps=steps, seed=seed, verbose=verbose)
    return model, result, holdout
