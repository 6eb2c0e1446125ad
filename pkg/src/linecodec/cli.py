"""Command-line tool: compress, decompress, info, bench, selftest.

Thread caps are applied through environment variables before numpy is
imported, so the heavy modules are imported lazily inside main().
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_FAILED = 1   # integrity / verification failure
EXIT_USAGE = 2    # bad arguments, missing files


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linecodec",
        description="Lossless / near-lossless hyperspectral cube codec",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--threads", type=int, default=1,
                       help="cap for data-parallel workers (output is identical "
                            "for any value)")
        p.add_argument("--stats", help="write a machine-readable report here "
                                       "('-' for stdout)")

    p = sub.add_parser("compress", help="compress a raw cube file")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--nx", type=int, required=True)
    p.add_argument("--ny", type=int, required=True)
    p.add_argument("--nz", type=int, required=True)
    p.add_argument("--order", choices=("bsq", "bil", "bip"), required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--max-error", type=int, default=0, metavar="M",
                   help="near-lossless bound; 0 means lossless")
    add_common(p)

    p = sub.add_parser("decompress", help="decompress a stream back to a raw cube")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--weights", required=True)
    add_common(p)

    p = sub.add_parser("info", help="print stream or weight-file metadata")
    p.add_argument("--input", help="bitstream to inspect")
    p.add_argument("--weights", help="weight file to inspect")

    p = sub.add_parser("bench", help="compression throughput / memory scaling")
    p.add_argument("--seed", type=int, default=0)
    add_common(p)

    p = sub.add_parser("selftest", help="run the built-in invariant suites")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights", help="also validate this weight file")
    add_common(p)

    return parser


def _emit_report(lines, stats_arg):
    text = "\n".join(lines) + "\n"
    if stats_arg in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(stats_arg).write_text(text)


def _require_file(path: str, what: str):
    if not Path(path).is_file():
        print(f"error: {what} not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _cmd_compress(args) -> int:
    from . import codec, cube, weights

    _require_file(args.input, "input cube")
    _require_file(args.weights, "weights file")
    if args.max_error < 0:
        print("error: --max-error must be >= 0", file=sys.stderr)
        return EXIT_USAGE
    order = cube.SampleOrder.parse(args.order)
    source = cube.read_cube(args.input, args.nx, args.ny, args.nz, order)
    cfg, wts = weights.load_weights(args.weights)
    checksum = weights.weights_checksum(args.weights)
    data, stats = codec.compress(cfg, wts, source, args.max_error, checksum)
    Path(args.output).write_bytes(data)
    _emit_report(stats.report_lines(), args.stats)
    return EXIT_OK


def _cmd_decompress(args) -> int:
    from . import codec, cube, weights

    _require_file(args.input, "input stream")
    _require_file(args.weights, "weights file")
    cfg, wts = weights.load_weights(args.weights)
    checksum = weights.weights_checksum(args.weights)
    data = Path(args.input).read_bytes()
    result = codec.decompress(cfg, wts, data, checksum)
    cube.write_cube(result, args.output)
    if args.stats:
        _emit_report([f"nx={result.nx}", f"ny={result.ny}", f"nz={result.nz}",
                      f"order={result.order.value}", "verified=1"], args.stats)
    return EXIT_OK


def _cmd_info(args) -> int:
    lines = []
    if args.input:
        from .bitstream import StreamHeader
        _require_file(args.input, "input stream")
        h = StreamHeader.unpack(Path(args.input).read_bytes())
        lines += [
            f"stream.nx={h.nx}", f"stream.ny={h.ny}", f"stream.nz={h.nz}",
            f"stream.order={h.order.value}", f"stream.m={h.m}",
            f"stream.guard_tau={h.guard_tau:g}",
            f"stream.config_digest={h.config_digest:#018x}",
            f"stream.weights_checksum={h.weights_checksum:#018x}",
            f"stream.cube_checksum={h.cube_checksum:#018x}",
        ]
    if args.weights:
        from . import weights
        _require_file(args.weights, "weights file")
        cfg, _ = weights.load_weights(args.weights)
        lines += [
            f"weights.config={cfg.n_enc},{cfg.n_lp},{cfg.n_sp},{cfg.n_dec},{cfg.f}",
            f"weights.enc_kernel={cfg.enc_kernel}",
            f"weights.scale={cfg.scale:g}",
            f"weights.guard_tau={cfg.guard_tau:g}",
            f"weights.params={weights.count_params(cfg)}",
            f"weights.flops_per_sample={weights.count_flops_per_sample(cfg)}",
            f"weights.config_digest={cfg.digest():#018x}",
            f"weights.checksum={weights.weights_checksum(args.weights):#018x}",
        ]
    if not lines:
        print("error: info needs --input and/or --weights", file=sys.stderr)
        return EXIT_USAGE
    print("\n".join(lines))
    return EXIT_OK


def _cmd_bench(args) -> int:
    from . import bench
    rows = bench.run_bench(args.seed)
    _emit_report(bench.report_lines(rows), args.stats)
    return EXIT_OK


def _cmd_selftest(args) -> int:
    from . import selftest
    if args.weights:
        _require_file(args.weights, "weights file")
    results = selftest.run_selftest(args.seed, args.weights)
    failed = False
    for name, ok, msg in results:
        status = "pass" if ok else "fail"
        line = f"suite={name} status={status}"
        if msg:
            line += f" detail={msg!r}"
        print(line)
        failed = failed or not ok
    return EXIT_FAILED if failed else EXIT_OK


_COMMANDS = {
    "compress": _cmd_compress,
    "decompress": _cmd_decompress,
    "info": _cmd_info,
    "bench": _cmd_bench,
    "selftest": _cmd_selftest,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    threads = getattr(args, "threads", None)
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))
    try:
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
