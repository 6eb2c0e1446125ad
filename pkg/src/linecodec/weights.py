"""Model configuration and the binary "LRWK" weight file.

File layout (all little-endian):

    magic   4 bytes  b"LRWK"
    version u16      currently 1
    config  6 x u16  n_enc, n_lp, n_sp, n_dec, f, enc_kernel
            2 x f32  scale, guard_tau
    count   u32      number of tensors
    entry   u16 name length, utf-8 name, u8 ndim, ndim x u32 dims,
            u64 offset into the data section
    data    float32 tensor payloads, packed back to back
    digest  u64      digest64 of every preceding byte

Tensor names are fixed by :func:`tensor_table`; a file whose directory does
not match the table derived from its own config is rejected.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .digest import digest64

MAGIC = b"LRWK"
VERSION = 1

_CONFIG_STRUCT = struct.Struct("<6H2f")


class WeightFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters shared by codec and trainer.

    ``f`` is the feature width, the four counts are encoder blocks,
    line-predictor pairs, spectral-predictor pairs and decoder blocks.
    ``scale`` divides raw sample values before the networks see them and
    ``guard_tau`` is the rounding guard threshold in raw sample units.
    """

    n_enc: int
    n_lp: int
    n_sp: int
    n_dec: int
    f: int
    enc_kernel: int = 3
    scale: float = 10000.0
    guard_tau: float = 1e-3

    def __post_init__(self):
        for name in ("n_enc", "n_lp", "n_sp", "n_dec", "f"):
            if getattr(self, name) < 1:
                raise WeightFormatError(f"{name} must be >= 1")
        if self.enc_kernel < 1 or self.enc_kernel % 2 != 1:
            raise WeightFormatError("enc_kernel must be odd and positive")
        # the file stores these as float32; canonicalize so a save/load
        # roundtrip is the identity and digests are stable
        object.__setattr__(self, "scale", float(np.float32(self.scale)))
        object.__setattr__(self, "guard_tau", float(np.float32(self.guard_tau)))
        if not self.scale > 0:
            raise WeightFormatError("scale must be positive")
        if not self.guard_tau > 0:
            raise WeightFormatError("guard_tau must be positive")

    def pack(self) -> bytes:
        return _CONFIG_STRUCT.pack(
            self.n_enc, self.n_lp, self.n_sp, self.n_dec, self.f,
            self.enc_kernel, self.scale, self.guard_tau,
        )

    @classmethod
    def unpack(cls, raw: bytes) -> "ModelConfig":
        n_enc, n_lp, n_sp, n_dec, f, k, scale, tau = _CONFIG_STRUCT.unpack(raw)
        return cls(n_enc, n_lp, n_sp, n_dec, f, k, scale, tau)

    def digest(self) -> int:
        return digest64(self.pack())


#: Named sizes: (n_enc, n_lp, n_sp, n_dec, f)
PRESETS = {
    "XS": (1, 2, 2, 1, 32),
    "S": (2, 2, 2, 2, 64),
    "M": (4, 4, 4, 4, 64),
    "L": (4, 6, 6, 4, 96),
}


def preset(name: str, **overrides) -> ModelConfig:
    try:
        n_enc, n_lp, n_sp, n_dec, f = PRESETS[name.upper()]
    except KeyError:
        raise WeightFormatError(f"unknown preset {name!r}") from None
    return ModelConfig(n_enc, n_lp, n_sp, n_dec, f, **overrides)


@dataclass
class MixerWeights:
    """Sequence-mixing block parameters (along-track or spectral)."""

    w_r: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    w_o: np.ndarray
    alpha: np.ndarray  # decay, applied as exp(-alpha)
    beta: np.ndarray   # current-token bonus inside the ratio
    mu_r: np.ndarray
    mu_k: np.ndarray
    mu_v: np.ndarray


@dataclass
class ChannelMixWeights:
    w_r: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    mu_r: np.ndarray
    mu_k: np.ndarray


@dataclass
class PredictorPair:
    """Pre-norm residual pair: LN -> mixer -> add, LN -> channel mix -> add."""

    ln1_gain: np.ndarray
    ln1_bias: np.ndarray
    mix: MixerWeights
    ln2_gain: np.ndarray
    ln2_bias: np.ndarray
    cm: ChannelMixWeights


@dataclass
class EncoderBlock:
    # the conv bias is what lets the absolute signal level survive the
    # following LayerNorm (a bias-free conv of a flat line is proportional
    # to its level, and LN cancels any positive scale factor)
    conv: np.ndarray  # (f_in, f_out, k)
    conv_bias: np.ndarray
    ln_gain: np.ndarray
    ln_bias: np.ndarray


@dataclass
class DecoderBlock:
    w: np.ndarray  # (f, f)
    ln_gain: np.ndarray
    ln_bias: np.ndarray


@dataclass
class WeightSet:
    encoder: list[EncoderBlock] = field(default_factory=list)
    line_pairs: list[PredictorPair] = field(default_factory=list)
    spectral_pairs: list[PredictorPair] = field(default_factory=list)
    decoder: list[DecoderBlock] = field(default_factory=list)
    head: np.ndarray = None  # (1, f)
    fb_decoder: list[DecoderBlock] = field(default_factory=list)
    fb_head: np.ndarray = None


def tensor_table(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Name -> shape for every tensor implied by the config, in file order."""
    f = cfg.f
    table: dict[str, tuple[int, ...]] = {}
    for i in range(cfg.n_enc):
        f_in = 1 if i == 0 else f
        table[f"enc.{i}.conv"] = (f_in, f, cfg.enc_kernel)
        table[f"enc.{i}.conv_bias"] = (f,)
        table[f"enc.{i}.ln.gain"] = (f,)
        table[f"enc.{i}.ln.bias"] = (f,)
    for prefix, count in (("lp", cfg.n_lp), ("sp", cfg.n_sp)):
        for i in range(count):
            base = f"{prefix}.{i}"
            table[f"{base}.ln1.gain"] = (f,)
            table[f"{base}.ln1.bias"] = (f,)
            for w in ("w_r", "w_k", "w_v", "w_o"):
                table[f"{base}.mix.{w}"] = (f, f)
            for v in ("alpha", "beta", "mu_r", "mu_k", "mu_v"):
                table[f"{base}.mix.{v}"] = (f,)
            table[f"{base}.ln2.gain"] = (f,)
            table[f"{base}.ln2.bias"] = (f,)
            for w in ("w_r", "w_k", "w_v"):
                table[f"{base}.cm.{w}"] = (f, f)
            for v in ("mu_r", "mu_k"):
                table[f"{base}.cm.{v}"] = (f,)
    for prefix, count in (("dec", cfg.n_dec), ("fbdec", cfg.n_dec)):
        for i in range(count):
            table[f"{prefix}.{i}.w"] = (f, f)
            table[f"{prefix}.{i}.ln.gain"] = (f,)
            table[f"{prefix}.{i}.ln.bias"] = (f,)
        table[f"{prefix}.head"] = (1, f)
    return table


def _flatten(cfg: ModelConfig, wts: WeightSet) -> dict[str, np.ndarray]:
    out: dict[str, np.ndarray] = {}
    for i, blk in enumerate(wts.encoder):
        out[f"enc.{i}.conv"] = blk.conv
        out[f"enc.{i}.conv_bias"] = blk.conv_bias
        out[f"enc.{i}.ln.gain"] = blk.ln_gain
        out[f"enc.{i}.ln.bias"] = blk.ln_bias
    for prefix, pairs in (("lp", wts.line_pairs), ("sp", wts.spectral_pairs)):
        for i, pair in enumerate(pairs):
            base = f"{prefix}.{i}"
            out[f"{base}.ln1.gain"] = pair.ln1_gain
            out[f"{base}.ln1.bias"] = pair.ln1_bias
            for w in ("w_r", "w_k", "w_v", "w_o"):
                out[f"{base}.mix.{w}"] = getattr(pair.mix, w)
            for v in ("alpha", "beta", "mu_r", "mu_k", "mu_v"):
                out[f"{base}.mix.{v}"] = getattr(pair.mix, v)
            out[f"{base}.ln2.gain"] = pair.ln2_gain
            out[f"{base}.ln2.bias"] = pair.ln2_bias
            for w in ("w_r", "w_k", "w_v"):
                out[f"{base}.cm.{w}"] = getattr(pair.cm, w)
            for v in ("mu_r", "mu_k"):
                out[f"{base}.cm.{v}"] = getattr(pair.cm, v)
    for prefix, blocks, head in (
        ("dec", wts.decoder, wts.head),
        ("fbdec", wts.fb_decoder, wts.fb_head),
    ):
        for i, blk in enumerate(blocks):
            out[f"{prefix}.{i}.w"] = blk.w
            out[f"{prefix}.{i}.ln.gain"] = blk.ln_gain
            out[f"{prefix}.{i}.ln.bias"] = blk.ln_bias
        out[f"{prefix}.head"] = head
    return out


def _assemble(cfg: ModelConfig, tensors: dict[str, np.ndarray]) -> WeightSet:
    wts = WeightSet()
    for i in range(cfg.n_enc):
        wts.encoder.append(EncoderBlock(
            conv=tensors[f"enc.{i}.conv"],
            conv_bias=tensors[f"enc.{i}.conv_bias"],
            ln_gain=tensors[f"enc.{i}.ln.gain"],
            ln_bias=tensors[f"enc.{i}.ln.bias"],
        ))
    for prefix, count, dest in (
        ("lp", cfg.n_lp, wts.line_pairs),
        ("sp", cfg.n_sp, wts.spectral_pairs),
    ):
        for i in range(count):
            base = f"{prefix}.{i}"
            dest.append(PredictorPair(
                ln1_gain=tensors[f"{base}.ln1.gain"],
                ln1_bias=tensors[f"{base}.ln1.bias"],
                mix=MixerWeights(*(tensors[f"{base}.mix.{n}"] for n in (
                    "w_r", "w_k", "w_v", "w_o", "alpha", "beta",
                    "mu_r", "mu_k", "mu_v"))),
                ln2_gain=tensors[f"{base}.ln2.gain"],
                ln2_bias=tensors[f"{base}.ln2.bias"],
                cm=ChannelMixWeights(*(tensors[f"{base}.cm.{n}"] for n in (
                    "w_r", "w_k", "w_v", "mu_r", "mu_k"))),
            ))
    for prefix, dest in (("dec", wts.decoder), ("fbdec", wts.fb_decoder)):
        for i in range(cfg.n_dec):
            dest.append(DecoderBlock(
                w=tensors[f"{prefix}.{i}.w"],
                ln_gain=tensors[f"{prefix}.{i}.ln.gain"],
                ln_bias=tensors[f"{prefix}.{i}.ln.bias"],
            ))
    wts.head = tensors["dec.head"]
    wts.fb_head = tensors["fbdec.head"]
    return wts


def save_weights(cfg: ModelConfig, wts: WeightSet, path) -> None:
    table = tensor_table(cfg)
    tensors = _flatten(cfg, wts)
    if set(tensors) != set(table):
        missing = set(table) ^ set(tensors)
        raise WeightFormatError(f"weight set does not match config: {sorted(missing)}")

    directory = bytearray()
    payload = bytearray()
    for name, shape in table.items():
        arr = np.ascontiguousarray(tensors[name], dtype=np.float32)
        if arr.shape != shape:
            raise WeightFormatError(f"{name}: shape {arr.shape}, config implies {shape}")
        encoded = name.encode("utf-8")
        directory += struct.pack("<H", len(encoded)) + encoded
        directory += struct.pack("<B", arr.ndim)
        directory += struct.pack(f"<{arr.ndim}I", *arr.shape)
        directory += struct.pack("<Q", len(payload))
        payload += arr.astype("<f4").tobytes()

    body = bytearray()
    body += MAGIC
    body += struct.pack("<H", VERSION)
    body += cfg.pack()
    body += struct.pack("<I", len(table))
    body += directory
    body += payload
    body += struct.pack("<Q", digest64(bytes(body)))
    Path(path).write_bytes(bytes(body))


def load_weights(path) -> tuple[ModelConfig, WeightSet]:
    raw = Path(path).read_bytes()
    if len(raw) < 4 + 2 + _CONFIG_STRUCT.size + 4 + 8:
        raise WeightFormatError(f"{path}: file too short")
    if raw[:4] != MAGIC:
        raise WeightFormatError(f"{path}: bad magic {raw[:4]!r}")
    (stored_digest,) = struct.unpack("<Q", raw[-8:])
    if digest64(raw[:-8]) != stored_digest:
        raise WeightFormatError(f"{path}: checksum mismatch")
    pos = 4
    (version,) = struct.unpack_from("<H", raw, pos)
    pos += 2
    if version != VERSION:
        raise WeightFormatError(f"{path}: unsupported version {version}")
    cfg = ModelConfig.unpack(raw[pos : pos + _CONFIG_STRUCT.size])
    pos += _CONFIG_STRUCT.size
    (count,) = struct.unpack_from("<I", raw, pos)
    pos += 4

    entries: list[tuple[str, tuple[int, ...], int]] = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", raw, pos)
        pos += 2
        name = raw[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = struct.unpack_from("<B", raw, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", raw, pos)
        pos += 4 * ndim
        (offset,) = struct.unpack_from("<Q", raw, pos)
        pos += 8
        entries.append((name, shape, offset))

    table = tensor_table(cfg)
    if [e[0] for e in entries] != list(table):
        raise WeightFormatError(f"{path}: tensor directory does not match config")
    data = raw[pos:-8]
    tensors: dict[str, np.ndarray] = {}
    for name, shape, offset in entries:
        if shape != table[name]:
            raise WeightFormatError(
                f"{path}: {name} has shape {shape}, config implies {table[name]}"
            )
        n = int(np.prod(shape))
        end = offset + 4 * n
        if end > len(data):
            raise WeightFormatError(f"{path}: {name} payload out of bounds")
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=offset)
        tensors[name] = arr.reshape(shape).astype(np.float32)
    return cfg, _assemble(cfg, tensors)


def weights_checksum(path) -> int:
    """Digest of the whole weight file, as recorded in bitstream headers."""
    return digest64(Path(path).read_bytes())


def count_params(cfg: ModelConfig) -> int:
    return int(sum(np.prod(s) for s in tensor_table(cfg).values()))


# Elementwise op-cost constants for the FLOP model (per element).
_COST_EXP = 8
_COST_SIGMOID = 8
_COST_GELU = 16
_COST_DIV = 4


def _ln_flops(f: int) -> int:
    return 6 * f + 10


def count_flops_per_sample(cfg: ModelConfig) -> int:
    """Operation count per coded sample for one full inference pass.

    A multiply-accumulate counts as 2 FLOPs. The encoder and decoder touch
    each sample once. The mixing stacks are charged for both sequence
    positions entering their token-shift window each step (the streaming
    working set is the current and the previous element), so their matrix
    and elementwise costs count twice per sample.
    """
    f = cfg.f
    total = 0
    # encoder blocks: conv + LN + activation per sample
    for i in range(cfg.n_enc):
        f_in = 1 if i == 0 else f
        total += 2 * f_in * f * cfg.enc_kernel + f + _ln_flops(f) + _COST_GELU * f
    # one mixer pair, one sequence position
    line_mix = (
        3 * 4 * f                      # token-shift lerps for r, k, v
        + 4 * 2 * f * f                # W_r, W_k, W_v, W_o
        + f                            # beta + k
        + (2 + 4 + 5 + 2) * f          # maxes, shifted exponent args, ratio terms
        + 4 * _COST_EXP * f            # stabilized exponentials
        + _COST_DIV * f                # ratio
        + _COST_SIGMOID * f + f        # gate
    )
    channel_mix = (
        2 * 4 * f
        + 3 * 2 * f * f
        + 2 * f                        # rectify + square
        + _COST_SIGMOID * f + f
    )
    pair = line_mix + channel_mix + 2 * _ln_flops(f) + 2 * f
    total += 2 * (cfg.n_lp + cfg.n_sp) * pair
    # decoder blocks + scalar head
    total += cfg.n_dec * (2 * f * f + _ln_flops(f) + _COST_GELU * f) + 2 * f
    return int(total)


def random_weights(cfg: ModelConfig, seed: int) -> WeightSet:
    """Random but well-scaled weights; used by tests, selftest and bench."""
    rng = np.random.default_rng(seed)
    f = cfg.f

    def mat(f_out, f_in, gain=1.0):
        return (gain / np.sqrt(f_in) * rng.standard_normal((f_out, f_in))).astype(np.float32)

    def mixer():
        return MixerWeights(
            w_r=mat(f, f), w_k=mat(f, f), w_v=mat(f, f), w_o=mat(f, f, 0.5),
            alpha=rng.uniform(0.3, 1.5, f).astype(np.float32),
            beta=(0.3 * rng.standard_normal(f)).astype(np.float32),
            mu_r=rng.uniform(0.2, 0.8, f).astype(np.float32),
            mu_k=rng.uniform(0.2, 0.8, f).astype(np.float32),
            mu_v=rng.uniform(0.2, 0.8, f).astype(np.float32),
        )

    def channel():
        return ChannelMixWeights(
            w_r=mat(f, f), w_k=mat(f, f), w_v=mat(f, f, 0.5),
            mu_r=rng.uniform(0.2, 0.8, f).astype(np.float32),
            mu_k=rng.uniform(0.2, 0.8, f).astype(np.float32),
        )

    def ln():
        return np.ones(f, np.float32), np.zeros(f, np.float32)

    def pair():
        g1, b1 = ln()
        g2, b2 = ln()
        return PredictorPair(g1, b1, mixer(), g2, b2, channel())

    wts = WeightSet()
    for i in range(cfg.n_enc):
        f_in = 1 if i == 0 else f
        conv = (rng.standard_normal((f_in, f, cfg.enc_kernel))
                / np.sqrt(f_in * cfg.enc_kernel)).astype(np.float32)
        conv_bias = (0.1 * rng.standard_normal(f)).astype(np.float32)
        g, b = ln()
        wts.encoder.append(EncoderBlock(conv, conv_bias, g, b))
    wts.line_pairs = [pair() for _ in range(cfg.n_lp)]
    wts.spectral_pairs = [pair() for _ in range(cfg.n_sp)]
    for dest in (wts.decoder, wts.fb_decoder):
        for _ in range(cfg.n_dec):
            g, b = ln()
            dest.append(DecoderBlock(mat(f, f), g, b))
    wts.head = mat(1, f)
    wts.fb_head = mat(1, f)
    return wts
