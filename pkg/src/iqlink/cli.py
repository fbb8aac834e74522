"""Command line entry point: ``iqlink sweep | complexity | validate``.

Exit codes: 0 success, 1 failed checks or runtime error, 2 usage or config
error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from . import complexity
from .harness import (
    THREADS_ENV,
    emit_results,
    load_config,
    preset_names,
    run_sweep,
)

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="iqlink",
        description="Uplink MU-MIMO OFDMA link simulator under TX/RX I/Q imbalance.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sw = sub.add_parser(
        "sweep",
        help="run a parameter sweep from a config file",
        description=f"Run a sweep. CONFIG is a file path or a bundled preset ({', '.join(preset_names())}).",
    )
    sw.add_argument("config", help="config file or bundled preset name")
    sw.add_argument("--seed", type=int, help="override the master seed")
    sw.add_argument("--trials", type=int, help="override the number of trials per sweep point")
    sw.add_argument("--out", help="output file (default: stdout)")
    sw.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    sw.add_argument("--format", choices=("csv", "json"), default="csv")

    cx = sub.add_parser("complexity", help="augmented versus linear flop ratios")
    cx.add_argument("--table2", action="store_true", help="print the full ratio table (default)")
    cx.add_argument("--fft-size", type=int, help="single ratio: FFT size C")
    cx.add_argument("--n-rx", type=int, help="single ratio: RX antennas N")
    cx.add_argument("--streams", type=int, help="single ratio: data streams S")
    cx.add_argument("--algo", choices=("lms", "rls"), default="lms")
    cx.add_argument("--out", help="output file (default: stdout)")
    cx.add_argument("--format", choices=("text", "csv"), default="text")

    va = sub.add_parser("validate", help="run oracle and invariant checks on small instances")
    va.add_argument("--seed", type=int, default=0)
    return p


def _write(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        with open(out, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {out}: {exc.strerror}") from None


def _cmd_sweep(args) -> int:
    try:
        cfg = load_config(args.config)
        cfg = cfg.with_overrides(n_trials=args.trials, master_seed=args.seed)
    except ValueError as exc:  # ConfigError included
        print(f"iqlink: config error in {args.config}: {exc}", file=sys.stderr)
        return 2
    table = run_sweep(cfg, threads=args.threads)
    if args.out is None:
        emit_results(table, sys.stdout, args.format)
    else:
        emit_results(table, args.out, args.format)
    return 0


def _cmd_complexity(args) -> int:
    single = (args.fft_size, args.n_rx, args.streams)
    if any(v is not None for v in single) and not args.table2:
        if any(v is None for v in single):
            print("iqlink: --fft-size, --n-rx and --streams go together", file=sys.stderr)
            return 2
        inputs = complexity.FlopModelInputs(args.fft_size, args.n_rx, args.streams, args.algo)
        _write(f"{complexity.chain_ratio(inputs):.4f}\n", args.out)
        return 0
    text = complexity.table2_csv() if args.format == "csv" else complexity.format_table2()
    _write(text, args.out)
    return 0


def _cmd_validate(args) -> int:
    from .validate import run_checks

    results = run_checks(args.seed)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"sweep": _cmd_sweep, "complexity": _cmd_complexity, "validate": _cmd_validate}[args.command]
    try:
        return handler(args)
    except (OSError, ValueError) as exc:
        print(f"iqlink: {exc}", file=sys.stderr)
        return 1
