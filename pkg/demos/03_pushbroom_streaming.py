"""Walkthrough: constant-memory streaming over lines.

The along-track predictor is a recurrence: after each line it keeps five
length-f vectors per (column, band, layer) and nothing else, so memory does
not grow with the number of lines. The state serializes, which is what makes
pushbroom compression resumable mid-scene."""

import numpy as np

from linecodec import preset, random_weights
from linecodec.linepred import LinePredState, line_predict_recurrent
from linecodec.pipeline import encode_line, normalize, predict_line

cfg = preset("XS")
wts = random_weights(cfg, seed=3)
rng = np.random.default_rng(2)
nx, nz = 16, 8

state = LinePredState.initial(cfg.n_lp, nx, nz, cfg.f)
print(f"state size: {len(state.serialize())} bytes "
      f"(= {cfg.n_lp} pairs x {nx}x{nz} positions x 5 vectors x {cfg.f} floats)")

prev = rng.integers(0, 10001, size=(nx, nz)).astype(np.uint16)
prev_enc = encode_line(normalize(prev, cfg.scale), wts)
for y in range(1, 200):
    slab = rng.integers(0, 10001, size=(nx, nz)).astype(np.uint16)
    planes, state, prev_enc = predict_line(cfg, wts, state, prev_enc, slab)
    if y in (1, 10, 199):
        print(f"after line {y:3d}: state still {len(state.serialize())} bytes")

# hand the state to another process and continue exactly where we stopped
blob = state.serialize()
resumed = LinePredState.deserialize(blob, cfg.n_lp, nx, nz, cfg.f)
slab = rng.integers(0, 10001, size=(nx, nz)).astype(np.uint16)
a, _, _ = predict_line(cfg, wts, state, prev_enc, slab)
b, _, _ = predict_line(cfg, wts, resumed, prev_enc, slab)
assert np.array_equal(a.eps, b.eps)
print("resumed state reproduces the original residuals exactly")
