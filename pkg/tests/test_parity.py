import json

import numpy as np
import pytest

from linecodec.parity import ParityError, compute_stages, replay_bundle
from linecodec.weights import ModelConfig, random_weights, save_weights


def _write_bundle(tmp_path, cfg, wts, samples, tamper_digest=False):
    bundle = tmp_path / "bundle"
    bundle.mkdir()
    save_weights(cfg, wts, bundle / "model.lrwk")
    samples.astype("<u2").tofile(bundle / "input.u16")
    stages = compute_stages(cfg, wts, samples)
    manifest = {
        "config_digest": f"{cfg.digest() + (1 if tamper_digest else 0):#018x}",
        "weights_file": "model.lrwk",
        "tolerance": 1e-4,
        "metric": "max_abs_diff_over_std",
        "cube": {"file": "input.u16", "nx": samples.shape[1],
                 "ny": samples.shape[0], "nz": samples.shape[2]},
        "stages": {},
    }
    for name, arr in stages.items():
        fname = f"{name}.f32"
        arr.astype("<f4").tofile(bundle / fname)
        manifest["stages"][name] = {"file": fname, "shape": list(arr.shape)}
    (bundle / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return bundle


@pytest.fixture
def small_setup():
    cfg = ModelConfig(1, 1, 1, 1, 8)
    wts = random_weights(cfg, 3)
    rng = np.random.default_rng(4)
    samples = rng.integers(0, 10001, size=(4, 3, 4)).astype(np.uint16)
    return cfg, wts, samples


def test_self_replay_is_exact(tmp_path, small_setup):
    bundle = _write_bundle(tmp_path, *small_setup)
    results = replay_bundle(bundle)
    assert {r.stage for r in results} == \
        {"encoder", "line_pred", "delta", "spectral", "prediction"}
    for r in results:
        assert r.deviation == 0.0 and r.ok


def test_digest_mismatch_rejected(tmp_path, small_setup):
    bundle = _write_bundle(tmp_path, *small_setup, tamper_digest=True)
    with pytest.raises(ParityError, match="digest"):
        replay_bundle(bundle)


def test_wrong_tensor_size_rejected(tmp_path, small_setup):
    bundle = _write_bundle(tmp_path, *small_setup)
    manifest = json.loads((bundle / "manifest.json").read_text())
    first = next(iter(manifest["stages"].values()))
    data = (bundle / first["file"]).read_bytes()
    (bundle / first["file"]).write_bytes(data[:-4])
    with pytest.raises(ParityError, match="floats"):
        replay_bundle(bundle)


def test_zero_input_stages_propagate_shapes(small_setup):
    cfg, wts, samples = small_setup
    stages = compute_stages(cfg, wts, np.zeros_like(samples))
    ny, nx, nz = samples.shape
    assert stages["encoder"].shape == (ny, nx, nz, cfg.f)
    assert stages["line_pred"].shape == (ny - 1, nx, nz, cfg.f)
    assert stages["delta"].shape == (ny - 1, nx, nz - 1, cfg.f)
    assert stages["spectral"].shape == (ny - 1, nx, nz - 1, cfg.f)
    assert stages["prediction"].shape == (ny - 1, nx, nz)
    assert np.isfinite(stages["prediction"]).all()