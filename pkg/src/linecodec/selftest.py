"""Built-in invariant suites behind the CLI's selftest command."""

from __future__ import annotations

import numpy as np

from . import bitstream, pipeline, weights
from .codec import compress, decompress
from .cube import cube_from_samples
from .linepred import LinePredState, line_predict_parallel, line_predict_recurrent


def _rel_dev(a: np.ndarray, b: np.ndarray) -> float:
    spread = float(b.std())
    return float(np.max(np.abs(a - b))) / (spread if spread > 0 else 1.0)


def _suite_weights(seed: int, weights_path=None) -> None:
    if weights_path is not None:
        weights.load_weights(weights_path)  # checksum + shape validation
    import tempfile
    cfg = weights.preset("XS")
    wts = weights.random_weights(cfg, seed)
    with tempfile.NamedTemporaryFile(suffix=".lrwk") as tmp:
        weights.save_weights(cfg, wts, tmp.name)
        cfg2, wts2 = weights.load_weights(tmp.name)
    if cfg2 != cfg or not np.array_equal(wts2.head, wts.head):
        raise AssertionError("weight roundtrip mismatch")


def _suite_equivalence(seed: int, weights_path=None) -> None:
    rng = np.random.default_rng(seed)
    cfg = weights.ModelConfig(1, 2, 2, 1, 16)
    wts = weights.random_weights(cfg, seed)
    T, nx, nz = 12, 3, 4
    seq = rng.standard_normal((T, nx, nz, cfg.f)).astype(np.float32)
    par = line_predict_parallel(seq, wts.line_pairs)
    state = LinePredState.initial(cfg.n_lp, nx, nz, cfg.f)
    rec = np.empty_like(par)
    for t in range(T):
        rec[t], state = line_predict_recurrent(state, seq[t], wts.line_pairs)
    if _rel_dev(par, rec) > 1e-4:
        raise AssertionError("recurrent and parallel line predictions diverge")


def _suite_roundtrip(seed: int, weights_path=None) -> None:
    rng = np.random.default_rng(seed)
    cfg = weights.preset("XS")
    wts = weights.random_weights(cfg, seed)
    samples = rng.integers(0, 10001, size=(6, 8, 5)).astype(np.uint16)
    cube = cube_from_samples(samples)
    data, _ = compress(cfg, wts, cube, m=0, weights_checksum=1)
    out = decompress(cfg, wts, data, weights_checksum=1)
    if not np.array_equal(out.samples, cube.samples):
        raise AssertionError("lossless roundtrip failed")


def _suite_bounds(seed: int, weights_path=None) -> None:
    rng = np.random.default_rng(seed)
    for m in (1, 3):
        samples = rng.integers(0, 65536, size=(4, 6, 4)).astype(np.uint16)
        cube = cube_from_samples(samples)
        quant = pipeline.prequantize(cube, m)
        err = np.abs(quant.samples.astype(np.int64) - samples.astype(np.int64))
        if err.max() > m:
            raise AssertionError(f"prequantize bound exceeded for m={m}")


def _suite_entropy(seed: int, weights_path=None) -> None:
    rng = np.random.default_rng(seed)
    values = rng.integers(0, 4096, size=20000)
    enc_ctx = bitstream.GolombContext()
    writer = bitstream.BitWriter()
    for v in values:
        bitstream.golomb_encode(enc_ctx, int(v), writer)
    reader = bitstream.BitReader(writer.getvalue())
    dec_ctx = bitstream.GolombContext()
    for v in values:
        if bitstream.golomb_decode(dec_ctx, reader) != int(v):
            raise AssertionError("entropy roundtrip mismatch")
    if (enc_ctx.a, enc_ctx.g) != (dec_ctx.a, dec_ctx.g):
        raise AssertionError("entropy contexts diverged")


SUITES = {
    "weights": _suite_weights,
    "equivalence": _suite_equivalence,
    "roundtrip": _suite_roundtrip,
    "bounds": _suite_bounds,
    "entropy": _suite_entropy,
}


def run_selftest(seed: int, weights_path=None) -> list[tuple[str, bool, str]]:
    results = []
    for name, suite in SUITES.items():
        try:
            suite(seed, weights_path)
            results.append((name, True, ""))
        except Exception as exc:  # report, don't abort the remaining suites
            results.append((name, False, str(exc)))
    return results
