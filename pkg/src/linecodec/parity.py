"""Replay of externally produced stage-by-stage parity vectors.

A parity bundle is a directory with a ``manifest.json`` and raw little-endian
float32 / uint16 arrays. It pins the numerical contract between this codec's
streaming inference and an independent (typically training-side) parallel
implementation operating from the same weight file. Expected manifest keys:

    config_digest   hex digest of the model config (must match the weights)
    weights_file    path of the LRWK file, relative to the bundle
    tolerance       max |delta| / std(reference) allowed per stage
    cube            {file, nx, ny, nz} raw uint16 input, (y, x, z) order
    stages          name -> {file, shape}, float32 raw

Stage semantics (shapes for a cube of ny lines, nx columns, nz bands, width f):

    encoder     (ny, nx, nz, f)      encoder features of every input line
    line_pred   (ny-1, nx, nz, f)    spatial feature prediction for lines >= 1
    delta       (ny-1, nx, nz-1, f)  spectral input sequence per line
    spectral    (ny-1, nx, nz-1, f)  spectral stack outputs
    prediction  (ny-1, nx, nz)       normalized pixel predictions
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .linepred import LinePredState, line_predict_recurrent
from .pipeline import (decode_features, decode_features_first_band,
                       encode_line, normalize)
from .spectral import spectral_predict
from .weights import load_weights


class ParityError(ValueError):
    pass


@dataclass
class StageResult:
    stage: str
    deviation: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.deviation <= self.tolerance


def _load_f32(path: Path, shape) -> np.ndarray:
    arr = np.fromfile(path, dtype="<f4")
    expected = int(np.prod(shape))
    if arr.size != expected:
        raise ParityError(f"{path}: {arr.size} floats, expected {expected}")
    return arr.reshape(shape)


def compute_stages(cfg, wts, samples: np.ndarray) -> dict[str, np.ndarray]:
    """Stage tensors as this implementation computes them (recurrent path)."""
    ny, nx, nz = samples.shape
    enc = np.stack([encode_line(normalize(samples[y], cfg.scale), wts)
                    for y in range(ny)])
    state = LinePredState.initial(len(wts.line_pairs), nx, nz, cfg.f)
    spatial = np.empty((ny - 1, nx, nz, cfg.f), dtype=np.float32)
    for y in range(1, ny):
        spatial[y - 1], state = line_predict_recurrent(state, enc[y - 1],
                                                       wts.line_pairs)
    delta = enc[1:, :, :-1, :] - spatial[:, :, :-1, :]
    spec = np.empty_like(delta)
    pred = np.empty((ny - 1, nx, nz), dtype=np.float32)
    for i in range(ny - 1):
        spec[i] = spectral_predict(delta[i].transpose(1, 0, 2),
                                   wts.spectral_pairs).transpose(1, 0, 2)
        pred[i, :, 0] = decode_features_first_band(spatial[i, :, 0, :], wts)
        for z in range(1, nz):
            pred[i, :, z] = decode_features(spatial[i, :, z, :],
                                            spec[i, :, z - 1, :], wts)
    return {
        "encoder": enc,
        "line_pred": spatial,
        "delta": delta,
        "spectral": spec,
        "prediction": pred,
    }


def replay_bundle(bundle_dir) -> list[StageResult]:
    """Recompute every stage of a bundle and compare against its tensors."""
    bundle = Path(bundle_dir)
    manifest = json.loads((bundle / "manifest.json").read_text())
    cfg, wts = load_weights(bundle / manifest["weights_file"])
    if int(manifest["config_digest"], 16) != cfg.digest():
        raise ParityError("bundle config digest does not match its weight file")

    cube_info = manifest["cube"]
    nx, ny, nz = cube_info["nx"], cube_info["ny"], cube_info["nz"]
    samples = np.fromfile(bundle / cube_info["file"], dtype="<u2")
    if samples.size != nx * ny * nz:
        raise ParityError("bundle cube size does not match its manifest")
    samples = samples.reshape(ny, nx, nz)

    tolerance = float(manifest["tolerance"])
    ours = compute_stages(cfg, wts, samples)
    results = []
    for stage, info in manifest["stages"].items():
        if stage not in ours:
            raise ParityError(f"unknown stage {stage!r} in manifest")
        ref = _load_f32(bundle / info["file"], info["shape"])
        got = ours[stage]
        if got.shape != ref.shape:
            raise ParityError(f"{stage}: shape {got.shape} != manifest {ref.shape}")
        spread = float(ref.std())
        dev = float(np.max(np.abs(got - ref))) / (spread if spread > 0 else 1.0)
        results.append(StageResult(stage=stage, deviation=dev, tolerance=tolerance))
    return results
