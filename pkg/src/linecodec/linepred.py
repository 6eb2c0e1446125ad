"""Along-track predictor: alternating sequence-mixing and channel-mixing
blocks, with a recurrent form for streaming inference and a closed-form
parallel twin used for cross-checking and by training-side tooling.

The recurrent state per block pair and per pixel position is five length-f
vectors: the ratio accumulators ``a`` and ``b``, the previous post-norm inputs
of the two sub-blocks, and the running exponent offset ``m`` that keeps every
exponential bounded (state holds a = a_raw * e^m, b = b_raw * e^m
implicitly). ``m`` starts at -inf, standing for empty accumulators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import apply_mat, layernorm, sigmoid
from .weights import ChannelMixWeights, MixerWeights, PredictorPair

NEG_INF = np.float32(-np.inf)

#: serialization order of the per-(layer, x, z) state fields
STATE_FIELDS = ("a", "b", "u_mix", "u_cm", "m")


@dataclass
class MixState:
    """Stabilized accumulator state of one sequence-mixing block."""

    a: np.ndarray
    b: np.ndarray
    m: np.ndarray
    u_prev: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "MixState":
        return cls(
            a=np.zeros(shape, np.float32),
            b=np.zeros(shape, np.float32),
            m=np.full(shape, NEG_INF, np.float32),
            u_prev=np.zeros(shape, np.float32),
        )


def _wkv_step(st: MixState, k: np.ndarray, v: np.ndarray,
              alpha: np.ndarray, beta: np.ndarray):
    """One step of the stabilized ratio recursion. Returns (p, next MixState
    fields a, b, m). All exponential arguments are <= 0 by construction."""
    cur = beta + k
    q = np.maximum(st.m, cur)
    e_hist = np.exp(st.m - q)
    e_cur = np.exp(cur - q)
    p = (e_hist * st.a + e_cur * v) / (e_hist * st.b + e_cur)

    decayed = st.m - alpha
    q2 = np.maximum(decayed, k)
    e_dec = np.exp(decayed - q2)
    e_k = np.exp(k - q2)
    a = e_dec * st.a + e_k * v
    b = e_dec * st.b + e_k
    return p, a, b, q2


def _shift_inputs(u, u_prev, mu_r, mu_k, mu_v):
    xr = mu_r * u + (np.float32(1) - mu_r) * u_prev
    xk = mu_k * u + (np.float32(1) - mu_k) * u_prev
    xv = mu_v * u + (np.float32(1) - mu_v) * u_prev
    return xr, xk, xv


def line_mix_step(st: MixState, u: np.ndarray, w: MixerWeights):
    """Advance the sequence mixer by one element.

    ``u`` can be a single feature vector or any (..., f) batch; the state
    must have matching shape. Returns (output, new state).
    """
    xr, xk, xv = _shift_inputs(u, st.u_prev, w.mu_r, w.mu_k, w.mu_v)
    r = apply_mat(xr, w.w_r)
    k = apply_mat(xk, w.w_k)
    v = apply_mat(xv, w.w_v)
    p, a, b, m = _wkv_step(st, k, v, w.alpha, w.beta)
    o = apply_mat(sigmoid(r) * p, w.w_o)
    if not np.all(np.isfinite(o)):
        raise FloatingPointError("non-finite mixer output")
    return o, MixState(a=a, b=b, m=m, u_prev=u)


def channel_mix_step(u_prev: np.ndarray, u: np.ndarray, w: ChannelMixWeights):
    """One channel-mixing evaluation; the only state is the previous input."""
    one = np.float32(1)
    xr = w.mu_r * u + (one - w.mu_r) * u_prev
    xk = w.mu_k * u + (one - w.mu_k) * u_prev
    r = apply_mat(xr, w.w_r)
    k = apply_mat(xk, w.w_k)
    o = sigmoid(r) * apply_mat(np.square(np.maximum(k, np.float32(0))), w.w_v)
    if not np.all(np.isfinite(o)):
        raise FloatingPointError("non-finite channel-mix output")
    return o, u


@dataclass
class LinePredState:
    """Recurrent state for a full stack of predictor pairs over an
    (nx, nz) pixel grid. Size is independent of how many lines have been
    consumed: n_pairs * nx * nz * 5f float32 values."""

    nx: int
    nz: int
    f: int
    mix: list[MixState]
    cm_prev: list[np.ndarray]

    @classmethod
    def initial(cls, n_pairs: int, nx: int, nz: int, f: int) -> "LinePredState":
        shape = (nx * nz, f)
        return cls(
            nx=nx, nz=nz, f=f,
            mix=[MixState.zeros(shape) for _ in range(n_pairs)],
            cm_prev=[np.zeros(shape, np.float32) for _ in range(n_pairs)],
        )

    def serialize(self) -> bytes:
        """Flat float32 array in (layer, x, z, field) order; fields follow
        STATE_FIELDS with f values each."""
        chunks = []
        for st, cm in zip(self.mix, self.cm_prev):
            fields = {"a": st.a, "b": st.b, "u_mix": st.u_prev, "u_cm": cm, "m": st.m}
            layer = np.concatenate([fields[n] for n in STATE_FIELDS], axis=-1)
            chunks.append(layer.astype("<f4").tobytes())
        return b"".join(chunks)

    @classmethod
    def deserialize(cls, data: bytes, n_pairs: int, nx: int, nz: int, f: int) -> "LinePredState":
        expected = n_pairs * nx * nz * 5 * f * 4
        if len(data) != expected:
            raise ValueError(f"state blob is {len(data)} bytes, expected {expected}")
        arr = np.frombuffer(data, dtype="<f4").reshape(n_pairs, nx * nz, 5 * f)
        state = cls(nx=nx, nz=nz, f=f, mix=[], cm_prev=[])
        for layer in arr:
            parts = {name: layer[:, i * f:(i + 1) * f].astype(np.float32)
                     for i, name in enumerate(STATE_FIELDS)}
            state.mix.append(MixState(a=parts["a"], b=parts["b"], m=parts["m"],
                                      u_prev=parts["u_mix"]))
            state.cm_prev.append(parts["u_cm"])
        return state


def line_predict_recurrent(state: LinePredState, enc_line: np.ndarray,
                           pairs: list[PredictorPair]):
    """Advance the stack by one line.

    ``enc_line`` is (nx, nz, f) encoder output of the newest line; the return
    value is the feature-domain prediction of the next line with the same
    shape, plus the advanced state. The state is not mutated in place.
    """
    nx, nz, f = enc_line.shape
    x = enc_line.reshape(nx * nz, f)
    new_mix = []
    new_cm = []
    for pair, st, cm_prev in zip(pairs, state.mix, state.cm_prev):
        u = layernorm(x, pair.ln1_gain, pair.ln1_bias)
        o, st2 = line_mix_step(st, u, pair.mix)
        x = x + o
        u2 = layernorm(x, pair.ln2_gain, pair.ln2_bias)
        o2, cm2 = channel_mix_step(cm_prev, u2, pair.cm)
        x = x + o2
        new_mix.append(st2)
        new_cm.append(cm2)
    out = x.reshape(nx, nz, f)
    next_state = LinePredState(nx=state.nx, nz=state.nz, f=state.f,
                               mix=new_mix, cm_prev=new_cm)
    return out, next_state


def mix_closed_form(seq: np.ndarray, w: MixerWeights) -> np.ndarray:
    """Literal closed-form evaluation of the sequence mixer over a whole
    (T, ..., f) sequence: output t weights history element i < t by
    exp(-(t-1-i) * alpha + k_i) and the current element by exp(beta + k_t),
    with a per-output max-shift so the exponentials stay bounded."""
    T = seq.shape[0]
    shifted = np.concatenate([np.zeros_like(seq[:1]), seq[:-1]], axis=0)
    xr, xk, xv = _shift_inputs(seq, shifted, w.mu_r, w.mu_k, w.mu_v)
    r = apply_mat(xr, w.w_r)
    k = apply_mat(xk, w.w_k)
    v = apply_mat(xv, w.w_v)

    out = np.empty_like(seq)
    for t in range(T):
        cur = w.beta + k[t]
        if t == 0:
            p = v[0]
        else:
            steps = np.arange(t - 1, -1, -1, dtype=np.float32)  # t-1-i for i=0..t-1
            logw = k[:t] - steps.reshape((t,) + (1,) * (seq.ndim - 1)) * w.alpha
            m = np.maximum(logw.max(axis=0), cur)
            e_hist = np.exp(logw - m)
            e_cur = np.exp(cur - m)
            num = (e_hist * v[:t]).sum(axis=0) + e_cur * v[t]
            den = e_hist.sum(axis=0) + e_cur
            p = num / den
        out[t] = apply_mat(sigmoid(r[t]) * p, w.w_o)
    return out


def channel_mix_sequence(seq: np.ndarray, w: ChannelMixWeights) -> np.ndarray:
    """Channel mixing over a whole sequence with zero-padded token shift."""
    one = np.float32(1)
    shifted = np.concatenate([np.zeros_like(seq[:1]), seq[:-1]], axis=0)
    xr = w.mu_r * seq + (one - w.mu_r) * shifted
    xk = w.mu_k * seq + (one - w.mu_k) * shifted
    r = apply_mat(xr, w.w_r)
    k = apply_mat(xk, w.w_k)
    return sigmoid(r) * apply_mat(np.square(np.maximum(k, np.float32(0))), w.w_v)


def line_predict_parallel(enc_lines: np.ndarray, pairs: list[PredictorPair]) -> np.ndarray:
    """Closed-form evaluation of the whole stack over (T, ..., f) lines.

    For every prefix length this matches repeated line_predict_recurrent
    steps from the zero state (up to float32 reassociation)."""
    x = enc_lines.astype(np.float32, copy=True)
    for pair in pairs:
        u = layernorm(x, pair.ln1_gain, pair.ln1_bias)
        x = x + mix_closed_form(u, pair.mix)
        u2 = layernorm(x, pair.ln2_gain, pair.ln2_bias)
        x = x + channel_mix_sequence(u2, pair.cm)
    return x
