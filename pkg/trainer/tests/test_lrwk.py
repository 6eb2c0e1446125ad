import subprocess

import numpy as np
import pytest
import torch

from cubetrainer import lrwk
from cubetrainer.model import LinePredictorModel, TrainConfig


def test_tensor_roundtrip(tmp_path):
    cfg = TrainConfig.preset("tiny")
    model = LinePredictorModel(cfg)
    path = tmp_path / "m.lrwk"
    lrwk.save_model(model, path)
    back_cfg, tensors = lrwk.load(path)
    assert back_cfg.f == cfg.f and back_cfg.n_lp == cfg.n_lp
    for name, arr in lrwk.model_tensors(model).items():
        assert np.array_equal(tensors[name], arr), name


def test_corruption_detected(tmp_path):
    model = LinePredictorModel(TrainConfig.preset("tiny"))
    path = tmp_path / "m.lrwk"
    lrwk.save_model(model, path)
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 3] ^= 0x10
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError, match="checksum"):
        lrwk.load(path)


def test_load_model_forward_identical(tmp_path):
    model = LinePredictorModel(TrainConfig.preset("tiny"))
    model.eval()
    path = tmp_path / "m.lrwk"
    lrwk.save_model(model, path)
    loaded = lrwk.load_model(path)
    samples = torch.randint(0, 10001, (4, 5, 4))
    with torch.no_grad():
        a = model(samples)
        b = loaded(samples)
    assert torch.equal(a, b)


def test_codec_accepts_exported_file(tmp_path):
    # the codec CLI is the consuming side of the format contract
    model = LinePredictorModel(TrainConfig.preset("tiny"))
    path = tmp_path / "m.lrwk"
    lrwk.save_model(model, path)
    proc = subprocess.run(
        ["linecodec", "info", "--weights", str(path)],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    report = dict(line.split("=", 1) for line in proc.stdout.strip().splitlines())
    assert report["weights.config"] == "1,1,1,1,16"
    assert int(report["weights.config_digest"], 16) == lrwk.config_digest(model.cfg)


def test_codec_selftest_validates_exported_file(tmp_path):
    model = LinePredictorModel(TrainConfig.preset("tiny"))
    path = tmp_path / "m.lrwk"
    lrwk.save_model(model, path)
    proc = subprocess.run(
        ["linecodec", "selftest", "--seed", "1", "--weights", str(path)],
        capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stdout + proc.stderr
    assert "suite=weights status=pass" in proc.stdout
