import numpy as np
import pytest

from conftest import rel_dev
from linecodec.kernels import apply_mat, sigmoid
from linecodec.linepred import MixState, channel_mix_step, line_mix_step, mix_closed_form
from linecodec.spectral import (band_mix_parallel, channel_mix_parallel,
                                spectral_append, spectral_begin, spectral_predict)
from linecodec.weights import ModelConfig, random_weights


def _pairs(seed, f=8, n_sp=2):
    return random_weights(ModelConfig(1, 1, n_sp, 1, f), seed).spectral_pairs


class TestBandMix:
    def test_length_one_ratio_is_v(self):
        rng = np.random.default_rng(0)
        f = 8
        w = _pairs(0, f)[0].mix
        seq = rng.standard_normal((1, 3, f)).astype(np.float32)
        out = band_mix_parallel(seq, w)
        xv = w.mu_v * seq[0]
        xr = w.mu_r * seq[0]
        expected = apply_mat(sigmoid(apply_mat(xr, w.w_r)) * apply_mat(xv, w.w_v), w.w_o)
        assert np.allclose(out[0], expected, rtol=1e-6, atol=1e-7)

    def test_matches_stepwise_mixer(self):
        # the scan must equal explicit step-by-step recurrence
        rng = np.random.default_rng(1)
        f = 8
        w = _pairs(1, f)[0].mix
        seq = rng.standard_normal((12, 2, f)).astype(np.float32)
        scan = band_mix_parallel(seq, w)
        st = MixState.zeros((2, f))
        for z in range(12):
            out, st = line_mix_step(st, seq[z], w)
            assert np.array_equal(out, scan[z])

    def test_matches_closed_form(self):
        rng = np.random.default_rng(2)
        f = 16
        w = _pairs(2, f)[0].mix
        seq = rng.standard_normal((24, 2, f)).astype(np.float32)
        assert rel_dev(band_mix_parallel(seq, w), mix_closed_form(seq, w)) < 1e-4

    def test_zero_sequence(self):
        w = _pairs(3)[0].mix
        seq = np.zeros((5, 2, 8), np.float32)
        assert not band_mix_parallel(seq, w).any()


class TestChannelMixParallel:
    def test_zero_sequence(self):
        w = _pairs(4)[0].cm
        assert not channel_mix_parallel(np.zeros((4, 2, 8), np.float32), w).any()

    def test_length_one_matches_single_step(self):
        rng = np.random.default_rng(5)
        w = _pairs(5)[0].cm
        seq = rng.standard_normal((1, 3, 8)).astype(np.float32)
        par = channel_mix_parallel(seq, w)
        out, _ = channel_mix_step(np.zeros_like(seq[0]), seq[0], w)
        assert np.array_equal(par[0], out)

    def test_random_sequence_matches_stepwise(self):
        rng = np.random.default_rng(6)
        w = _pairs(6)[0].cm
        seq = rng.standard_normal((16, 2, 8)).astype(np.float32)
        par = channel_mix_parallel(seq, w)
        prev = np.zeros_like(seq[0])
        for z in range(16):
            out, prev = channel_mix_step(prev, seq[z], w)
            assert rel_dev(out, par[z]) < 1e-4


class TestSpectralPredict:
    def test_incremental_matches_whole_sequence(self):
        rng = np.random.default_rng(7)
        pairs = _pairs(7, f=16)
        deltas = rng.standard_normal((12, 3, 16)).astype(np.float32)
        whole = spectral_predict(deltas, pairs)
        state = spectral_begin(len(pairs), 3, 16)
        for z in range(12):
            out, state = spectral_append(state, deltas[z], pairs)
            assert rel_dev(out, whole[z]) < 1e-5
            assert np.array_equal(out, whole[z])  # same scan, same bits

    def test_output_length(self):
        pairs = _pairs(8)
        deltas = np.zeros((9, 2, 8), np.float32)
        assert spectral_predict(deltas, pairs).shape == deltas.shape

    def test_causality_along_bands(self):
        rng = np.random.default_rng(9)
        pairs = _pairs(9)
        deltas = rng.standard_normal((10, 2, 8)).astype(np.float32)
        base = spectral_predict(deltas, pairs)
        mutated = deltas.copy()
        mutated[6:] = rng.standard_normal(mutated[6:].shape).astype(np.float32)
        out = spectral_predict(mutated, pairs)
        assert np.array_equal(out[:6], base[:6])

    def test_columnwise_independence(self):
        # a column subset of the input yields exactly the subset of outputs
        rng = np.random.default_rng(10)
        pairs = _pairs(10, f=16)
        deltas = rng.standard_normal((8, 12, 16)).astype(np.float32)
        full = spectral_predict(deltas, pairs)
        cols = np.array([0, 3, 4, 9, 11])
        subset = spectral_predict(np.ascontiguousarray(deltas[:, cols, :]), pairs)
        assert np.array_equal(subset, full[:, cols, :])

    def test_matches_closed_form_stack(self):
        # whole stack: scan vs literal closed-form evaluation of each mixer
        from linecodec.linepred import line_predict_parallel
        rng = np.random.default_rng(11)
        pairs = _pairs(11, f=16)
        deltas = rng.standard_normal((16, 2, 16)).astype(np.float32)
        scan = spectral_predict(deltas, pairs)
        closed = line_predict_parallel(deltas, pairs)
        assert rel_dev(scan, closed) < 1e-4
