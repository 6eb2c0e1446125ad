"""Trainer CLI: train toy models, emit parity bundles and held-out cubes."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import torch


def _build_parser():
    parser = argparse.ArgumentParser(prog="cubetrainer")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a toy model and export weights")
    p.add_argument("--preset", default="xs", choices=("tiny", "xs", "s"))
    p.add_argument("--steps", type=int, default=600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output .lrwk path")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("parity", help="emit a parity bundle from a weight file")
    p.add_argument("--weights", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("holdout", help="emit held-out synthetic cubes")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--count", type=int, default=4)
    p.add_argument("--weights", required=True,
                   help="weight file the manifest should reference")
    p.add_argument("--out", required=True)

    p = sub.add_parser("all", help="build the full artifact set")
    p.add_argument("--preset", default="xs", choices=("tiny", "xs", "s"))
    p.add_argument("--steps", type=int, default=600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="artifact directory")
    p.add_argument("--verbose", action="store_true")
    return parser


def _cmd_train(args) -> int:
    from . import lrwk
    from .train import train_toy

    model, result, _ = train_toy(args.preset, args.steps, args.seed,
                                 verbose=args.verbose)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    lrwk.save_model(model, args.out)
    print(f"holdout l1: {result.initial_holdout:.6f} -> {result.final_holdout:.6f} "
          f"({100 * result.improvement:.1f}% better) in {result.wall_s:.1f}s")
    return 0


def _cmd_parity(args) -> int:
    from . import lrwk
    from .parity import emit_parity

    model = lrwk.load_model(args.weights)
    emit_parity(model, args.weights, args.out, args.seed)
    print(f"parity bundle written to {args.out}")
    return 0


def _emit_holdout(weights_name: str, out_dir: Path, seed: int, count: int):
    from .synth import SyntheticCubeSpec, generate_cube

    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    entries = []
    for i in range(count):
        spec = SyntheticCubeSpec(seed=int(rng.integers(1 << 31)))
        samples = generate_cube(spec)
        fname = f"holdout_{i}.u16"
        samples.astype("<u2").tofile(out_dir / fname)
        entries.append({"file": fname, "nx": spec.nx, "ny": spec.ny, "nz": spec.nz})
    manifest = {"weights_file": weights_name, "cubes": entries}
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")


def _cmd_holdout(args) -> int:
    _emit_holdout(args.weights, Path(args.out), args.seed, args.count)
    print(f"{args.count} holdout cubes written to {args.out}")
    return 0


def _cmd_all(args) -> int:
    from . import lrwk
    from .parity import emit_parity, self_replay
    from .train import train_toy

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    model, result, _ = train_toy(args.preset, args.steps, args.seed,
                                 verbose=args.verbose)
    weights_path = out / f"toy_{args.preset}.lrwk"
    lrwk.save_model(model, weights_path)

    emit_parity(model, weights_path, out / "parity", seed=args.seed + 100)
    deviations = self_replay(out / "parity")
    _emit_holdout(weights_path.name, out / "holdout", seed=args.seed + 200, count=4)

    summary = {
        "preset": args.preset,
        "steps": args.steps,
        "seed": args.seed,
        "initial_holdout_l1": result.initial_holdout,
        "final_holdout_l1": result.final_holdout,
        "improvement": result.improvement,
        "train_wall_s": result.wall_s,
        "total_wall_s": time.perf_counter() - t0,
        "parity_self_replay_max_dev": max(deviations.values()),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")
    print(json.dumps(summary, indent=1))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    torch.set_num_threads(max(1, torch.get_num_threads()))
    handlers = {"train": _cmd_train, "parity": _cmd_parity,
                "holdout": _cmd_holdout, "all": _cmd_all}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
