"""Per-line prediction pipeline: encoding lines to features, running the two
predictors, decoding features back to pixel values, rounding with the guard
band, and the first-line / first-band special cases.

The compressor and the decompressor must arrive at bit-identical predictions
on the same platform, so both sides drive the exact same per-band kernels in
the same order: the encoder features of a line are always produced band by
band, and the spectral stack is always advanced band by band. Where platforms
legitimately differ (FP rounding of the prediction near a half-integer), the
guard bit carried in the stream settles the rounding side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cube import HyperCube, cube_from_samples
from .kernels import apply_mat, conv1d_cols, gelu, layernorm
from .linepred import LinePredState, line_predict_recurrent
from .spectral import spectral_append, spectral_begin
from .weights import ModelConfig, WeightSet

SAMPLE_MAX = 65535


@dataclass
class Prediction:
    """One denormalized prediction: raw value, its rounding, and whether the
    value fell inside the guard window around a half-integer boundary."""

    value: float
    rounded: int
    guard_hit: bool
    guard_side: bool


@dataclass
class LinePlanes:
    """Residuals and guard records of one coded line, in (z, x) layout."""

    eps: np.ndarray         # (nz, nx) int32, original minus clamped rounding
    guard_hit: np.ndarray   # (nz, nx) bool
    guard_side: np.ndarray  # (nz, nx) bool


def normalize(dn, scale: float):
    return (np.asarray(dn, dtype=np.float32) / np.float32(scale)).astype(np.float32)


def denormalize(v, scale: float):
    return (np.asarray(v, dtype=np.float32) * np.float32(scale)).astype(np.float32)


def round_half_away(values: np.ndarray) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return np.where(v >= 0, np.floor(v + 0.5), np.ceil(v - 0.5))


def round_guarded_array(values: np.ndarray, guard_tau: float):
    """Vectorized guarded rounding of denormalized predictions.

    Returns (rounded int64, guard_hit, guard_side). The guard triggers when
    the value lies strictly closer than guard_tau to the nearest half-integer
    boundary; the side records whether the rounding landed above it.
    """
    v = np.asarray(values, dtype=np.float64)
    rounded = round_half_away(v)
    frac = v - np.floor(v)
    hit = np.abs(frac - 0.5) < guard_tau
    boundary = np.floor(v) + 0.5
    side = rounded > boundary
    return rounded.astype(np.int64), hit, side


def round_guarded(value: float, guard_tau: float) -> Prediction:
    rounded, hit, side = round_guarded_array(np.array([value]), guard_tau)
    return Prediction(value=float(value), rounded=int(rounded[0]),
                      guard_hit=bool(hit[0]), guard_side=bool(side[0]))


def encode_band(norm_band: np.ndarray, wts: WeightSet) -> np.ndarray:
    """Encoder features of one band of one line: (nx,) -> (nx, f)."""
    x = np.ascontiguousarray(norm_band, dtype=np.float32).reshape(-1, 1)
    for blk in wts.encoder:
        x = conv1d_cols(x, blk.conv) + blk.conv_bias
        x = layernorm(x, blk.ln_gain, blk.ln_bias)
        x = gelu(x)
    return x


def encode_line(norm_slab: np.ndarray, wts: WeightSet) -> np.ndarray:
    """Encoder features of a whole line: (nx, nz) -> (nx, nz, f).

    Bands are encoded independently (and literally one at a time, so the
    decompressor's per-band calls reproduce these bits)."""
    nx, nz = norm_slab.shape
    f = wts.encoder[-1].conv.shape[1]
    out = np.empty((nx, nz, f), dtype=np.float32)
    for z in range(nz):
        out[:, z, :] = encode_band(norm_slab[:, z], wts)
    return out


def _decode_stack(h: np.ndarray, blocks, head) -> np.ndarray:
    for blk in blocks:
        h = apply_mat(h, blk.w)
        h = layernorm(h, blk.ln_gain, blk.ln_bias)
        h = gelu(h)
    out = apply_mat(h, head)[..., 0]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite decoder output")
    return out


def decode_features(spatial: np.ndarray, spectral: np.ndarray, wts: WeightSet) -> np.ndarray:
    """Normalized prediction from the sum of the two feature vectors."""
    return _decode_stack(spatial + spectral, wts.decoder, wts.head)


def decode_features_first_band(spatial: np.ndarray, wts: WeightSet) -> np.ndarray:
    """First-band prediction from the spatial features alone, through the
    dedicated decoder stack."""
    return _decode_stack(spatial, wts.fb_decoder, wts.fb_head)


def dpcm_first_line(slab: np.ndarray) -> np.ndarray:
    """First-line DPCM residuals, (nx, nz) -> (nz, nx) int32.

    Band 0 differences run along x; every other band differences against the
    previous band of the same column. The first sample is coded verbatim."""
    nx, nz = slab.shape
    s = slab.astype(np.int64)
    planes = np.empty((nz, nx), dtype=np.int64)
    planes[0, 0] = s[0, 0]
    planes[0, 1:] = s[1:, 0] - s[:-1, 0]
    planes[1:, :] = (s[:, 1:] - s[:, :-1]).T
    return planes.astype(np.int32)


def dpcm_inverse(planes: np.ndarray) -> np.ndarray:
    nz, nx = planes.shape
    p = planes.astype(np.int64)
    slab = np.empty((nx, nz), dtype=np.int64)
    slab[:, 0] = np.cumsum(p[0])
    slab[:, 1:] = np.cumsum(p[1:], axis=0).T + slab[:, :1]
    if slab.min() < 0 or slab.max() > SAMPLE_MAX:
        raise ValueError("first-line DPCM reconstruction out of sample range")
    return slab.astype(np.uint16)


def prequantize(cube: HyperCube, m: int) -> HyperCube:
    """Uniform quantization with step 2m+1; every sample moves by at most m."""
    if m < 0:
        raise ValueError("max-error m must be >= 0")
    if m == 0:
        return cube
    step = 2 * m + 1
    s = cube.samples.astype(np.int64)
    q = (s + m) // step
    hat = np.clip(q * step, 0, SAMPLE_MAX).astype(np.uint16)
    return cube_from_samples(hat, cube.order)


def _code_band(slab_band: np.ndarray, pred_norm: np.ndarray, scale: float,
               guard_tau: float):
    """Residual-code one band of one line against its normalized prediction."""
    dn = denormalize(pred_norm, scale)
    rounded, hit, side = round_guarded_array(dn, guard_tau)
    coded = np.clip(rounded, 0, SAMPLE_MAX)
    eps = slab_band.astype(np.int64) - coded
    return eps.astype(np.int32), hit, side


def predict_line(cfg: ModelConfig, wts: WeightSet, state: LinePredState,
                 prev_enc: np.ndarray, slab: np.ndarray):
    """Code one line (y >= 1) against the model.

    ``state`` must reflect every line before the previous one and ``prev_enc``
    must be the encoder features of the previous line. Returns the residual
    planes, the advanced state, and the encoder features of this line (which
    become ``prev_enc`` for the next call).
    """
    nx, nz = slab.shape
    spatial, state = line_predict_recurrent(state, prev_enc, wts.line_pairs)
    cur_enc = encode_line(normalize(slab, cfg.scale), wts)

    eps = np.empty((nz, nx), dtype=np.int32)
    hit = np.empty((nz, nx), dtype=bool)
    side = np.empty((nz, nx), dtype=bool)

    pred0 = decode_features_first_band(spatial[:, 0, :], wts)
    eps[0], hit[0], side[0] = _code_band(slab[:, 0], pred0, cfg.scale, cfg.guard_tau)

    sp_state = spectral_begin(len(wts.spectral_pairs), nx, cfg.f)
    for z in range(1, nz):
        delta = cur_enc[:, z - 1, :] - spatial[:, z - 1, :]
        feat, sp_state = spectral_append(sp_state, delta, wts.spectral_pairs)
        pred = decode_features(spatial[:, z, :], feat, wts)
        eps[z], hit[z], side[z] = _code_band(slab[:, z], pred, cfg.scale, cfg.guard_tau)

    planes = LinePlanes(eps=eps, guard_hit=hit, guard_side=side)
    return planes, state, cur_enc


def _apply_guard(dn: np.ndarray, hit: np.ndarray, source, z: int,
                 eps_out: np.ndarray):
    """Decode one band's samples in stream order: an optional guard bit where
    this side's prediction triggered the guard, then the residual."""
    rounded = round_half_away(dn).astype(np.int64)
    nx = dn.shape[0]
    values = np.empty(nx, dtype=np.int64)
    for x in range(nx):
        if hit[x]:
            above = source.read_guard_bit(z)
            base = int(np.floor(dn[x]))
            rounded[x] = base + 1 if above else base
        e = source.read_eps(z)
        eps_out[x] = e
        values[x] = int(np.clip(rounded[x], 0, SAMPLE_MAX)) + e
    if values.min() < 0 or values.max() > SAMPLE_MAX:
        raise ValueError("reconstructed sample out of range (corrupt stream?)")
    return values.astype(np.uint16)


def reconstruct_line(cfg: ModelConfig, wts: WeightSet, state: LinePredState,
                     prev_enc: np.ndarray, source, nx: int, nz: int,
                     nudge=None):
    """Mirror of predict_line: rebuild one line from coded residuals.

    ``source`` supplies residuals and guard bits in stream order (see
    bitstream.StreamReader). ``nudge(z, dn)`` lets tests inject controlled
    prediction perturbations before rounding, emulating a numerically
    mismatched decode platform.
    """
    source.begin_line()
    spatial, state = line_predict_recurrent(state, prev_enc, wts.line_pairs)
    slab = np.empty((nx, nz), dtype=np.uint16)
    eps = np.empty((nz, nx), dtype=np.int32)
    enc_bands = []

    def predict_to_dn(pred_norm, z):
        dn = denormalize(pred_norm, cfg.scale).astype(np.float64)
        if nudge is not None:
            dn = nudge(z, dn)
        return dn

    dn0 = predict_to_dn(decode_features_first_band(spatial[:, 0, :], wts), 0)
    hit0 = np.abs((dn0 - np.floor(dn0)) - 0.5) < cfg.guard_tau
    slab[:, 0] = _apply_guard(dn0, hit0, source, 0, eps[0])
    enc_bands.append(encode_band(normalize(slab[:, 0], cfg.scale), wts))

    sp_state = spectral_begin(len(wts.spectral_pairs), nx, cfg.f)
    for z in range(1, nz):
        delta = enc_bands[z - 1] - spatial[:, z - 1, :]
        feat, sp_state = spectral_append(sp_state, delta, wts.spectral_pairs)
        dn = predict_to_dn(decode_features(spatial[:, z, :], feat, wts), z)
        hit = np.abs((dn - np.floor(dn)) - 0.5) < cfg.guard_tau
        slab[:, z] = _apply_guard(dn, hit, source, z, eps[z])
        enc_bands.append(encode_band(normalize(slab[:, z], cfg.scale), wts))

    cur_enc = np.stack(enc_bands, axis=1)
    return slab, state, cur_enc


@dataclass
class CubeCodes:
    """All residual data of one cube: the DPCM plane of line 0 plus the coded
    planes of every following line."""

    nx: int
    ny: int
    nz: int
    dpcm: np.ndarray
    lines: list[LinePlanes]


def encode_cube(cfg: ModelConfig, wts: WeightSet, cube: HyperCube) -> CubeCodes:
    """Run the whole predictive pipeline over a cube (no entropy coding)."""
    state = LinePredState.initial(len(wts.line_pairs), cube.nx, cube.nz, cfg.f)
    first = cube.samples[0]
    codes = CubeCodes(nx=cube.nx, ny=cube.ny, nz=cube.nz,
                      dpcm=dpcm_first_line(first), lines=[])
    prev_enc = encode_line(normalize(first, cfg.scale), wts)
    for y in range(1, cube.ny):
        planes, state, prev_enc = predict_line(cfg, wts, state, prev_enc,
                                               cube.samples[y])
        codes.lines.append(planes)
    return codes


def decode_cube(cfg: ModelConfig, wts: WeightSet, source,
                nx: int, ny: int, nz: int, nudge=None) -> np.ndarray:
    """Mirror of encode_cube; returns the (ny, nx, nz) sample array."""
    samples = np.empty((ny, nx, nz), dtype=np.uint16)
    samples[0] = dpcm_inverse(source.read_dpcm(nx, nz))
    state = LinePredState.initial(len(wts.line_pairs), nx, nz, cfg.f)
    prev_enc = encode_line(normalize(samples[0], cfg.scale), wts)
    for y in range(1, ny):
        line_nudge = None if nudge is None else (lambda z, dn, _y=y: nudge(_y, z, dn))
        samples[y], state, prev_enc = reconstruct_line(
            cfg, wts, state, prev_enc, source, nx, nz, nudge=line_nudge)
    return samples


class PlaneSource:
    """In-memory residual source replaying a CubeCodes object; useful for
    exercising the decode path without entropy coding.

    Guard bits are replayed as a FIFO in (z, x) scan order of the encoder's
    guard hits, exactly like the wire format. A decoder that triggers the
    guard on a different set of samples will run out of sync, which the
    caller sees as a failed reconstruction."""

    def __init__(self, codes: CubeCodes):
        self._dpcm = codes.dpcm
        self._eps = [p.eps for p in codes.lines]
        self._sides = [p.guard_side[p.guard_hit] for p in codes.lines]
        self._line = 0
        self._cursor = None
        self._guard_cursor = 0

    def read_dpcm(self, nx: int, nz: int) -> np.ndarray:
        return self._dpcm

    def begin_line(self):
        self._line += 1
        self._cursor = np.zeros(self._eps[0].shape[0], dtype=np.int64)
        self._guard_cursor = 0

    def read_guard_bit(self, z: int) -> bool:
        sides = self._sides[self._line - 1]
        if self._guard_cursor >= len(sides):
            raise ValueError("guard substream exhausted (detection mismatch)")
        bit = bool(sides[self._guard_cursor])
        self._guard_cursor += 1
        return bit

    def read_eps(self, z: int) -> int:
        value = int(self._eps[self._line - 1][z, self._cursor[z]])
        self._cursor[z] += 1
        return value
