import numpy as np
import torch

from cubetrainer.model import LinePredictorModel, TrainConfig


def _model(preset="tiny"):
    model = LinePredictorModel(TrainConfig.preset(preset))
    model.eval()
    return model


def test_stage_shapes():
    model = _model()
    f = model.cfg.f
    samples = torch.randint(0, 10001, (6, 5, 4))
    with torch.no_grad():
        stages = model.stages(samples)
    assert stages["encoder"].shape == (6, 5, 4, f)
    assert stages["line_pred"].shape == (5, 5, 4, f)
    assert stages["delta"].shape == (5, 5, 3, f)
    assert stages["spectral"].shape == (5, 5, 3, f)
    assert stages["prediction"].shape == (5, 5, 4)


def test_zero_input_propagates_zero_through_fresh_model():
    # fresh LayerNorms have zero bias, so an all-zero cube stays zero at
    # every stage (the level-encoding conv bias starts at torch's default
    # near-zero init and only shifts constants, so reset it too)
    model = _model()
    with torch.no_grad():
        for conv in model.encoder.convs:
            conv.bias.zero_()
    samples = torch.zeros((5, 4, 4), dtype=torch.int64)
    with torch.no_grad():
        stages = model.stages(samples)
    for name, tensor in stages.items():
        assert torch.count_nonzero(tensor) == 0, name


def test_line_causality():
    model = _model()
    samples = torch.randint(0, 10001, (7, 4, 4))
    with torch.no_grad():
        base = model(samples)
        mutated = samples.clone()
        mutated[5:] = torch.randint(0, 10001, mutated[5:].shape)
        out = model(mutated)
    # predictions for lines 1..4 depend on lines 0..3 only
    assert torch.equal(out[:4], base[:4])


def test_band_causality():
    model = _model()
    samples = torch.randint(0, 10001, (5, 4, 6))
    with torch.no_grad():
        base = model(samples)
        mutated = samples.clone()
        mutated[:, :, 4:] = torch.randint(0, 10001, mutated[:, :, 4:].shape)
        out = model(mutated)
    # bands 0..3 of every predicted line are untouched by future bands...
    assert torch.equal(out[2:, :, :4], base[2:, :, :4])
    # ...except through earlier *lines*, which do legitimately use all bands
    assert torch.equal(out[0, :, 0], base[0, :, 0])


def test_loss_is_finite_and_differentiable():
    model = LinePredictorModel(TrainConfig.preset("tiny"))
    samples = torch.randint(0, 10001, (6, 5, 4))
    loss = model.loss(samples)
    assert torch.isfinite(loss)
    loss.backward()
    grads = [p.grad for p in model.parameters() if p.grad is not None]
    assert grads and all(torch.isfinite(g).all() for g in grads)


def test_extreme_parameters_stay_finite():
    model = _model()
    with torch.no_grad():
        for pair in model.line_stack:
            pair.mix.alpha.fill_(50.0)
            pair.mix.beta.fill_(30.0)
    samples = torch.randint(0, 10001, (6, 4, 4))
    with torch.no_grad():
        out = model(samples)
    assert torch.isfinite(out).all()
