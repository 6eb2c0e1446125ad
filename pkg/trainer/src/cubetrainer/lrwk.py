"""Writer/reader for the shared "LRWK" binary weight file.

Layout (little-endian): magic "LRWK", u16 version (1), six u16 config fields
(n_enc, n_lp, n_sp, n_dec, f, enc_kernel), two f32 fields (scale, guard_tau),
u32 tensor count, then per tensor a u16-length utf-8 name, u8 ndim, u32 dims,
u64 offset into the packed f32 data section, and finally a u64 digest (first
8 bytes of SHA-256, little-endian) over everything before it.

Tensor names/shapes follow a fixed table derived from the config; see
``tensor_table``. This module is deliberately self-contained: the only thing
it shares with the codec is the file format itself.
"""

from __future__ import annotations

import hashlib
import struct
from pathlib import Path

import numpy as np
import torch

from .model import LinePredictorModel, TrainConfig

MAGIC = b"LRWK"
VERSION = 1
_CONFIG_STRUCT = struct.Struct("<6H2f")


def digest64(data: bytes) -> int:
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "little")


def pack_config(cfg: TrainConfig) -> bytes:
    return _CONFIG_STRUCT.pack(cfg.n_enc, cfg.n_lp, cfg.n_sp, cfg.n_dec,
                               cfg.f, cfg.enc_kernel, cfg.scale, cfg.guard_tau)


def config_digest(cfg: TrainConfig) -> int:
    return digest64(pack_config(cfg))


def tensor_table(cfg: TrainConfig) -> dict[str, tuple[int, ...]]:
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


def _np(t: torch.Tensor) -> np.ndarray:
    return t.detach().cpu().to(torch.float32).numpy()


def model_tensors(model: LinePredictorModel) -> dict[str, np.ndarray]:
    """Flatten the torch model into the file's tensor naming scheme."""
    cfg = model.cfg
    out: dict[str, np.ndarray] = {}
    for i in range(cfg.n_enc):
        # torch conv weight is (f_out, f_in, k); the file stores (f_in, f_out, k)
        out[f"enc.{i}.conv"] = _np(model.encoder.convs[i].weight).transpose(1, 0, 2)
        out[f"enc.{i}.conv_bias"] = _np(model.encoder.convs[i].bias)
        out[f"enc.{i}.ln.gain"] = _np(model.encoder.norms[i].weight)
        out[f"enc.{i}.ln.bias"] = _np(model.encoder.norms[i].bias)
    for prefix, stack in (("lp", model.line_stack), ("sp", model.band_stack)):
        for i, pair in enumerate(stack):
            base = f"{prefix}.{i}"
            out[f"{base}.ln1.gain"] = _np(pair.ln1.weight)
            out[f"{base}.ln1.bias"] = _np(pair.ln1.bias)
            for name in ("w_r", "w_k", "w_v", "w_o"):
                out[f"{base}.mix.{name}"] = _np(getattr(pair.mix, name).weight)
            out[f"{base}.mix.alpha"] = _np(pair.mix.alpha)
            out[f"{base}.mix.beta"] = _np(pair.mix.beta)
            for name in ("mu_r", "mu_k", "mu_v"):
                out[f"{base}.mix.{name}"] = _np(getattr(pair.mix, name))
            out[f"{base}.ln2.gain"] = _np(pair.ln2.weight)
            out[f"{base}.ln2.bias"] = _np(pair.ln2.bias)
            for name in ("w_r", "w_k", "w_v"):
                out[f"{base}.cm.{name}"] = _np(getattr(pair.cm, name).weight)
            for name in ("mu_r", "mu_k"):
                out[f"{base}.cm.{name}"] = _np(getattr(pair.cm, name))
    for prefix, stack in (("dec", model.decoder), ("fbdec", model.fb_decoder)):
        for i in range(cfg.n_dec):
            out[f"{prefix}.{i}.w"] = _np(stack.blocks[i].weight)
            out[f"{prefix}.{i}.ln.gain"] = _np(stack.norms[i].weight)
            out[f"{prefix}.{i}.ln.bias"] = _np(stack.norms[i].bias)
        out[f"{prefix}.head"] = _np(stack.head.weight)
    return out


def load_into_model(model: LinePredictorModel, tensors: dict[str, np.ndarray]) -> None:
    """Inverse of model_tensors."""
    cfg = model.cfg
    with torch.no_grad():
        for i in range(cfg.n_enc):
            conv = torch.from_numpy(tensors[f"enc.{i}.conv"].transpose(1, 0, 2).copy())
            model.encoder.convs[i].weight.copy_(conv)
            model.encoder.convs[i].bias.copy_(torch.from_numpy(tensors[f"enc.{i}.conv_bias"]))
            model.encoder.norms[i].weight.copy_(torch.from_numpy(tensors[f"enc.{i}.ln.gain"]))
            model.encoder.norms[i].bias.copy_(torch.from_numpy(tensors[f"enc.{i}.ln.bias"]))
        for prefix, stack in (("lp", model.line_stack), ("sp", model.band_stack)):
            for i, pair in enumerate(stack):
                base = f"{prefix}.{i}"
                pair.ln1.weight.copy_(torch.from_numpy(tensors[f"{base}.ln1.gain"]))
                pair.ln1.bias.copy_(torch.from_numpy(tensors[f"{base}.ln1.bias"]))
                for name in ("w_r", "w_k", "w_v", "w_o"):
                    getattr(pair.mix, name).weight.copy_(
                        torch.from_numpy(tensors[f"{base}.mix.{name}"]))
                pair.mix.alpha.copy_(torch.from_numpy(tensors[f"{base}.mix.alpha"]))
                pair.mix.beta.copy_(torch.from_numpy(tensors[f"{base}.mix.beta"]))
                for name in ("mu_r", "mu_k", "mu_v"):
                    getattr(pair.mix, name).copy_(
                        torch.from_numpy(tensors[f"{base}.mix.{name}"]))
                pair.ln2.weight.copy_(torch.from_numpy(tensors[f"{base}.ln2.gain"]))
                pair.ln2.bias.copy_(torch.from_numpy(tensors[f"{base}.ln2.bias"]))
                for name in ("w_r", "w_k", "w_v"):
                    getattr(pair.cm, name).weight.copy_(
                        torch.from_numpy(tensors[f"{base}.cm.{name}"]))
                for name in ("mu_r", "mu_k"):
                    getattr(pair.cm, name).copy_(
                        torch.from_numpy(tensors[f"{base}.cm.{name}"]))
        for prefix, stack in (("dec", model.decoder), ("fbdec", model.fb_decoder)):
            for i in range(cfg.n_dec):
                stack.blocks[i].weight.copy_(torch.from_numpy(tensors[f"{prefix}.{i}.w"]))
                stack.norms[i].weight.copy_(torch.from_numpy(tensors[f"{prefix}.{i}.ln.gain"]))
                stack.norms[i].bias.copy_(torch.from_numpy(tensors[f"{prefix}.{i}.ln.bias"]))
            stack.head.weight.copy_(torch.from_numpy(tensors[f"{prefix}.head"]))


def save(cfg: TrainConfig, tensors: dict[str, np.ndarray], path) -> None:
    table = tensor_table(cfg)
    if set(tensors) != set(table):
        raise ValueError("tensor set does not match the config's table")
    directory = bytearray()
    payload = bytearray()
    for name, shape in table.items():
        arr = np.ascontiguousarray(tensors[name], dtype=np.float32)
        if arr.shape != shape:
            raise ValueError(f"{name}: shape {arr.shape} != {shape}")
        encoded = name.encode("utf-8")
        directory += struct.pack("<H", len(encoded)) + encoded
        directory += struct.pack("<B", arr.ndim)
        directory += struct.pack(f"<{arr.ndim}I", *arr.shape)
        directory += struct.pack("<Q", len(payload))
        payload += arr.astype("<f4").tobytes()
    body = bytearray()
    body += MAGIC
    body += struct.pack("<H", VERSION)
    body += pack_config(cfg)
    body += struct.pack("<I", len(table))
    body += directory
    body += payload
    body += struct.pack("<Q", digest64(bytes(body)))
    Path(path).write_bytes(bytes(body))


def load(path) -> tuple[TrainConfig, dict[str, np.ndarray]]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError("bad magic")
    (stored,) = struct.unpack("<Q", raw[-8:])
    if digest64(raw[:-8]) != stored:
        raise ValueError("checksum mismatch")
    pos = 6
    fields = _CONFIG_STRUCT.unpack_from(raw, pos)
    cfg = TrainConfig(*fields[:6], scale=fields[6], guard_tau=fields[7])
    pos += _CONFIG_STRUCT.size
    (count,) = struct.unpack_from("<I", raw, pos)
    pos += 4
    entries = []
    for _ in range(count):
        (n,) = struct.unpack_from("<H", raw, pos)
        pos += 2
        name = raw[pos:pos + n].decode()
        pos += n
        (ndim,) = struct.unpack_from("<B", raw, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", raw, pos)
        pos += 4 * ndim
        (off,) = struct.unpack_from("<Q", raw, pos)
        pos += 8
        entries.append((name, shape, off))
    data = raw[pos:-8]
    tensors = {}
    for name, shape, off in entries:
        n = int(np.prod(shape))
        tensors[name] = np.frombuffer(data, "<f4", count=n, offset=off).reshape(shape).copy()
    return cfg, tensors


def save_model(model: LinePredictorModel, path) -> None:
    save(model.cfg, model_tensors(model), path)


def load_model(path) -> LinePredictorModel:
    cfg, tensors = load(path)
    model = LinePredictorModel(cfg)
    load_into_model(model, tensors)
    model.eval()
    return model
