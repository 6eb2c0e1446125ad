"""Minimal float32 numeric kernels for the codec networks.

Matrix products go through a fixed-order einsum rather than BLAS: BLAS kernels
change their reduction strategy with the batch size, so the same row in a
different batch can round differently. The codec needs the streaming decoder
(per-band batches) to reproduce the encoder (per-line batches) bit-exactly,
and column subsets to reproduce full runs, so every kernel here is
shape-independent per element.
"""

from __future__ import annotations

import numpy as np

LN_EPS = np.float32(1e-5)

_GELU_C = np.float32(0.7978845608028654)  # sqrt(2/pi)
_GELU_A = np.float32(0.044715)
_HALF = np.float32(0.5)
_ONE = np.float32(1.0)


def apply_mat(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Batched matrix-vector product: x (..., f_in) with w (f_out, f_in)."""
    return np.einsum("...i,oi->...o", x, w)


def matvec(w: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Plain product w @ u for a single feature vector."""
    if w.shape[1] != u.shape[-1]:
        raise ValueError(f"matvec shape mismatch: {w.shape} x {u.shape}")
    return apply_mat(u, w)


def layernorm(u: np.ndarray, gain: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Normalize over the trailing feature axis, then apply gain and bias."""
    mean = u.mean(axis=-1, keepdims=True)
    centered = u - mean
    var = np.square(centered).mean(axis=-1, keepdims=True)
    return centered / np.sqrt(var + LN_EPS) * gain + bias


def gelu(u: np.ndarray) -> np.ndarray:
    # tanh approximation
    inner = _GELU_C * (u + _GELU_A * u * u * u)
    return _HALF * u * (_ONE + np.tanh(inner))


def sigmoid(u: np.ndarray) -> np.ndarray:
    # exp of a non-positive argument only, so no overflow on either tail
    z = np.exp(-np.abs(u))
    return np.where(u >= 0, _ONE / (_ONE + z), z / (_ONE + z))


def conv1d_cols(line: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Cross-correlation along the column axis with symmetric zero padding.

    ``line`` is (nx, f_in), ``kernel`` is (f_in, f_out, k) with odd k; the
    output keeps the nx extent. Taps accumulate in fixed ascending order.
    """
    f_in, f_out, k = kernel.shape
    if k % 2 != 1:
        raise ValueError(f"kernel length must be odd, got {k}")
    nx, f_in_line = line.shape
    if f_in_line != f_in:
        raise ValueError(f"conv shape mismatch: line {line.shape}, kernel {kernel.shape}")
    pad = (k - 1) // 2
    padded = np.zeros((nx + k - 1, f_in), dtype=np.float32)
    padded[pad : pad + nx] = line
    out = np.zeros((nx, f_out), dtype=np.float32)
    for t in range(k):
        out += np.einsum("ni,io->no", padded[t : t + nx], kernel[:, :, t])
    return out
