"""Emission of stage-by-stage parity bundles.

A bundle is the cross-implementation numerical contract: the codec must
replay every stage from the same weight file within the recorded tolerance.
Layout: manifest.json plus raw little-endian arrays (uint16 input cube,
float32 stages)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from . import lrwk
from .model import LinePredictorModel

STAGE_ORDER = ("encoder", "line_pred", "delta", "spectral", "prediction")
DEFAULT_TOLERANCE = 1e-4


def emit_parity(model: LinePredictorModel, weights_path, out_dir, seed: int,
                nx: int = 8, ny: int = 6, nz: int = 5,
                tolerance: float = DEFAULT_TOLERANCE) -> Path:
    """Write a bundle next to a copy of the weight file it was made from."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(seed)
    samples = rng.integers(0, 10001, size=(ny, nx, nz)).astype(np.uint16)
    samples.astype("<u2").tofile(out / "input.u16")

    weights_path = Path(weights_path)
    (out / weights_path.name).write_bytes(weights_path.read_bytes())

    model.eval()
    with torch.no_grad():
        stages = model.stages(torch.from_numpy(samples.astype(np.int64)))

    manifest = {
        "version": 1,
        "config_digest": f"{lrwk.config_digest(model.cfg):#018x}",
        "weights_file": weights_path.name,
        "tolerance": tolerance,
        "metric": "max_abs_diff_over_std",
        "cube": {"file": "input.u16", "nx": nx, "ny": ny, "nz": nz},
        "stages": {},
    }
    for name in STAGE_ORDER:
        arr = stages[name].cpu().numpy().astype("<f4")
        fname = f"{name}.f32"
        arr.tofile(out / fname)
        manifest["stages"][name] = {"file": fname, "shape": list(arr.shape)}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    return out


def self_replay(bundle_dir) -> dict[str, float]:
    """Re-evaluate the bundle with a fresh model loaded from its own weight
    file; deviations should be zero up to nondeterminism-free float32 reuse."""
    bundle = Path(bundle_dir)
    manifest = json.loads((bundle / "manifest.json").read_text())
    model = lrwk.load_model(bundle / manifest["weights_file"])
    if f"{lrwk.config_digest(model.cfg):#018x}" != manifest["config_digest"]:
        raise ValueError("config digest mismatch in bundle")

    cube = manifest["cube"]
    samples = np.fromfile(bundle / cube["file"], dtype="<u2").reshape(
        cube["ny"], cube["nx"], cube["nz"])
    with torch.no_grad():
        stages = model.stages(torch.from_numpy(samples.astype(np.int64)))

    deviations = {}
    for name, info in manifest["stages"].items():
        ref = np.fromfile(bundle / info["file"], dtype="<f4").reshape(info["shape"])
        got = stages[name].cpu().numpy()
        spread = float(ref.std()) or 1.0
        deviations[name] = float(np.max(np.abs(got - ref))) / spread
    return deviations
