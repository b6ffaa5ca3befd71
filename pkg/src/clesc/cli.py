"""Command-line entry points.

    clesc run --config cfg.json --out results.csv
    clesc sweep --snr=-5:15:1 [--config cfg.json] [--out results.csv]
    clesc avalanche [--trials 1000]
    clesc codes --export-alist DIR [--message-bits 1144] [--seed 0]
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import crypto
from .errors import ClescError
from .ldpc import CodeSet, export_alist
from .sim import SimConfig, run_sweep


def _parse_range(text: str) -> tuple[float, ...]:
    """start:stop:step, inclusive of stop when it lands on the grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("range must be start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise argparse.ArgumentTypeError("step must be positive")
    values = []
    v = start
    while v <= stop + 1e-9:
        values.append(round(v, 9))
        v += step
    return tuple(values)


def _load_config(path: str | None) -> SimConfig:
    if path is None:
        return SimConfig()
    with open(path, "r", encoding="utf-8") as fh:
        return SimConfig.from_json(fh.read())


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    report = run_sweep(cfg, out_path=args.out)
    sys.stdout.write(report.to_csv())
    if args.out:
        print(f"wrote {args.out}", file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    if args.snr is not None:
        cfg = SimConfig.from_json(
            json.dumps(
                {
                    **json.loads(cfg.to_json()),
                    "sweep": {"type": "snr_db", "values": list(args.snr)},
                }
            )
        )
    if args.distance is not None:
        cfg = SimConfig.from_json(
            json.dumps(
                {
                    **json.loads(cfg.to_json()),
                    "sweep": {"type": "distance_m", "values": list(args.distance)},
                }
            )
        )
    report = run_sweep(cfg, out_path=args.out)
    sys.stdout.write(report.to_csv())
    return 0


def _cmd_avalanche(args) -> int:
    for algorithm, blocks in (("aes-cbc", 1), ("aes-cbc", 2), ("chacha20", 2)):
        bits = 128 * blocks
        frac = crypto.avalanche_fraction(
            algorithm, trials=args.trials, seed=args.seed, message_bits=bits
        )
        print(f"{algorithm:9s} message {bits:4d} bits: flip fraction {frac:.4f}")
    return 0


def _cmd_codes(args) -> int:
    codes = CodeSet(k=args.message_bits, seed=args.seed)
    os.makedirs(args.export_alist, exist_ok=True)
    for code in codes:
        name = f"ldpc_r{code.rate.numerator}-{code.rate.denominator}_k{code.k}.alist"
        path = os.path.join(args.export_alist, name)
        export_alist(code, path)
        print(f"wrote {path} (n={code.n}, k={code.k})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clesc",
        description="Cross-layer encrypted semantic transmission link simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the sweep described by a config file")
    p_run.add_argument("--config", required=True, help="JSON config path")
    p_run.add_argument("--out", default=None, help="CSV output path")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run an SNR or distance sweep")
    p_sweep.add_argument("--config", default=None, help="base JSON config")
    p_sweep.add_argument("--snr", type=_parse_range, default=None,
                         help="SNR grid, start:stop:step in dB (use --snr=-5:15:1)")
    p_sweep.add_argument("--distance", type=_parse_range, default=None,
                         help="distance grid, start:stop:step in meters")
    p_sweep.add_argument("--out", default=None, help="CSV output path")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_av = sub.add_parser("avalanche", help="measure cipher error amplification")
    p_av.add_argument("--trials", type=int, default=1000)
    p_av.add_argument("--seed", type=int, default=0)
    p_av.set_defaults(func=_cmd_avalanche)

    p_codes = sub.add_parser("codes", help="build the LDPC codes and export alist")
    p_codes.add_argument("--export-alist", required=True, metavar="DIR")
    p_codes.add_argument("--message-bits", type=int, default=1144)
    p_codes.add_argument("--seed", type=int, default=0)
    p_codes.set_defaults(func=_cmd_codes)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ClescError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
