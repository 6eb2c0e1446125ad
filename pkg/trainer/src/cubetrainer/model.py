"""Torch model of the codec's predictor, built entirely from the parallel
(whole-sequence) forms so training can batch over lines and bands.

Architecture contract (must stay in lockstep with the codec's streaming
implementation, which consumes the exported weight files):

  encoder      per band: [conv1d(k, zero pad, no bias) -> LayerNorm -> GeLU]
               repeated n_enc times, first block 1 -> f channels
  line stack   n_lp pairs of pre-norm residual blocks: sequence mixing over
               lines, then channel mixing; token shift starts from zeros
  band stack   n_sp identical pairs over the per-line residual sequence
  decoder      n_dec [linear -> LayerNorm -> GeLU] blocks plus a scalar head;
               a separate stack of the same shape handles the first band

Sequence mixing at position t weights history i < t by exp(-(t-1-i)a + k_i)
and the current token by exp(b + k_t); the ratio is evaluated through a
masked max-shift so it is stable for any parameter values.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class TrainConfig:
    n_enc: int
    n_lp: int
    n_sp: int
    n_dec: int
    f: int
    enc_kernel: int = 3
    scale: float = 10000.0
    guard_tau: float = 1e-3

    @classmethod
    def preset(cls, name: str) -> "TrainConfig":
        sizes = {
            "tiny": (1, 1, 1, 1, 16),
            "xs": (1, 2, 2, 1, 32),
            "s": (2, 2, 2, 2, 64),
        }
        return cls(*sizes[name.lower()])


def _token_shift(seq: torch.Tensor) -> torch.Tensor:
    return torch.cat([torch.zeros_like(seq[:1]), seq[:-1]], dim=0)


def _mix_ratio(k: torch.Tensor, v: torch.Tensor, alpha: torch.Tensor,
               beta: torch.Tensor) -> torch.Tensor:
    """Stable closed-form ratio for a (T, B, f) sequence."""
    T = k.shape[0]
    idx = torch.arange(T, dtype=k.dtype, device=k.device)
    # lag[t, i] = t - 1 - i for i < t, else exclude
    lag = idx.view(T, 1) - 1.0 - idx.view(1, T)
    history = lag >= 0
    logw = k.unsqueeze(0) - lag.view(T, T, 1, 1) * alpha  # (T, T, B, f)
    logw = torch.where(history.view(T, T, 1, 1), logw,
                       torch.full_like(logw, float("-inf")))
    cur = (beta + k).unsqueeze(1)                         # (T, 1, B, f)
    everything = torch.cat([logw, cur], dim=1)            # (T, T+1, B, f)
    m = everything.amax(dim=1, keepdim=True).clamp_min(-1e30)
    w_hist = torch.exp(logw - m)                          # zeros where masked
    w_cur = torch.exp(cur - m).squeeze(1)
    num = torch.einsum("tibf,ibf->tbf", w_hist, v) + w_cur * v
    den = w_hist.sum(dim=1) + w_cur
    return num / den


class SequenceMixer(nn.Module):
    def __init__(self, f: int):
        super().__init__()
        self.w_r = nn.Linear(f, f, bias=False)
        self.w_k = nn.Linear(f, f, bias=False)
        self.w_v = nn.Linear(f, f, bias=False)
        self.w_o = nn.Linear(f, f, bias=False)
        self.alpha = nn.Parameter(torch.empty(f).uniform_(0.3, 1.5))
        self.beta = nn.Parameter(0.3 * torch.randn(f))
        self.register_buffer("mu_r", torch.full((f,), 0.5))
        self.register_buffer("mu_k", torch.full((f,), 0.5))
        self.register_buffer("mu_v", torch.full((f,), 0.5))

    def forward(self, seq: torch.Tensor) -> torch.Tensor:
        prev = _token_shift(seq)
        r = self.w_r(self.mu_r * seq + (1 - self.mu_r) * prev)
        k = self.w_k(self.mu_k * seq + (1 - self.mu_k) * prev)
        v = self.w_v(self.mu_v * seq + (1 - self.mu_v) * prev)
        p = _mix_ratio(k, v, self.alpha, self.beta)
        return self.w_o(torch.sigmoid(r) * p)


class ChannelMixer(nn.Module):
    def __init__(self, f: int):
        super().__init__()
        self.w_r = nn.Linear(f, f, bias=False)
        self.w_k = nn.Linear(f, f, bias=False)
        self.w_v = nn.Linear(f, f, bias=False)
        self.register_buffer("mu_r", torch.full((f,), 0.5))
        self.register_buffer("mu_k", torch.full((f,), 0.5))

    def forward(self, seq: torch.Tensor) -> torch.Tensor:
        prev = _token_shift(seq)
        r = self.w_r(self.mu_r * seq + (1 - self.mu_r) * prev)
        k = self.w_k(self.mu_k * seq + (1 - self.mu_k) * prev)
        return torch.sigmoid(r) * self.w_v(torch.relu(k) ** 2)


class MixPair(nn.Module):
    def __init__(self, f: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(f)
        self.mix = SequenceMixer(f)
        self.ln2 = nn.LayerNorm(f)
        self.cm = ChannelMixer(f)

    def forward(self, seq: torch.Tensor) -> torch.Tensor:
        seq = seq + self.mix(self.ln1(seq))
        seq = seq + self.cm(self.ln2(seq))
        return seq


class Encoder(nn.Module):
    def __init__(self, cfg: TrainConfig):
        super().__init__()
        self.convs = nn.ModuleList()
        self.norms = nn.ModuleList()
        for i in range(cfg.n_enc):
            f_in = 1 if i == 0 else cfg.f
            self.convs.append(nn.Conv1d(f_in, cfg.f, cfg.enc_kernel,
                                        padding=cfg.enc_kernel // 2))
            self.norms.append(nn.LayerNorm(cfg.f))
        self.act = nn.GELU(approximate="tanh")

    def forward(self, norm_lines: torch.Tensor) -> torch.Tensor:
        """(ny, nx, nz) normalized samples -> (ny, nx, nz, f)."""
        ny, nx, nz = norm_lines.shape
        # each (line, band) pair is an independent 1-channel row of nx columns
        x = norm_lines.permute(0, 2, 1).reshape(ny * nz, 1, nx)
        for conv, norm in zip(self.convs, self.norms):
            x = conv(x)                      # (rows, f, nx)
            x = norm(x.transpose(1, 2))      # (rows, nx, f)
            x = self.act(x).transpose(1, 2)
        return x.transpose(1, 2).reshape(ny, nz, nx, -1).permute(0, 2, 1, 3)


class DecoderStack(nn.Module):
    def __init__(self, cfg: TrainConfig):
        super().__init__()
        self.blocks = nn.ModuleList()
        self.norms = nn.ModuleList()
        for _ in range(cfg.n_dec):
            self.blocks.append(nn.Linear(cfg.f, cfg.f, bias=False))
            self.norms.append(nn.LayerNorm(cfg.f))
        self.head = nn.Linear(cfg.f, 1, bias=False)
        self.act = nn.GELU(approximate="tanh")

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        for block, norm in zip(self.blocks, self.norms):
            h = self.act(norm(block(h)))
        return self.head(h).squeeze(-1)


class LinePredictorModel(nn.Module):
    """Full parallel forward: returns normalized predictions for every line
    after the first, all bands."""

    def __init__(self, cfg: TrainConfig):
        super().__init__()
        self.cfg = cfg
        self.encoder = Encoder(cfg)
        self.line_stack = nn.ModuleList(MixPair(cfg.f) for _ in range(cfg.n_lp))
        self.band_stack = nn.ModuleList(MixPair(cfg.f) for _ in range(cfg.n_sp))
        self.decoder = DecoderStack(cfg)
        self.fb_decoder = DecoderStack(cfg)

    def stages(self, samples: torch.Tensor) -> dict[str, torch.Tensor]:
        """samples: (ny, nx, nz) raw values. Returns every pipeline stage."""
        ny, nx, nz = samples.shape
        norm = samples.to(torch.float32) / self.cfg.scale
        enc = self.encoder(norm)                        # (ny, nx, nz, f)

        seq = enc.reshape(ny, nx * nz, -1)
        x = seq
        for pair in self.line_stack:
            x = pair(x)
        # output t predicts line t+1; the last line's output predicts nothing
        spatial = x.reshape(ny, nx, nz, -1)[: ny - 1]   # (ny-1, nx, nz, f)

        delta = enc[1:, :, : nz - 1, :] - spatial[:, :, : nz - 1, :]
        # band axis becomes the sequence axis; lines and columns batch
        dseq = delta.permute(2, 0, 1, 3).reshape(nz - 1, (ny - 1) * nx, -1)
        s = dseq
        for pair in self.band_stack:
            s = pair(s)
        spectral = s.reshape(nz - 1, ny - 1, nx, -1).permute(1, 2, 0, 3)

        first = self.fb_decoder(spatial[:, :, 0, :])
        rest = self.decoder(spatial[:, :, 1:, :] + spectral)
        pred = torch.cat([first.unsqueeze(-1), rest], dim=-1)  # (ny-1, nx, nz)
        return {
            "encoder": enc,
            "line_pred": spatial,
            "delta": delta,
            "spectral": spectral,
            "prediction": pred,
        }

    def forward(self, samples: torch.Tensor) -> torch.Tensor:
        return self.stages(samples)["prediction"]

    def loss(self, samples: torch.Tensor) -> torch.Tensor:
        pred = self.forward(samples)
        target = samples[1:].to(torch.float32) / self.cfg.scale
        return (pred - target).abs().mean()
