"""Command-line entry point: ``hieraircomp --sweep K=10,20,40 --out results.csv``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config, reference_defaults
from .harness import SweepSpec, export, run_sweep
from .model import ConfigError
from .solver import Scheme

FULL_K = (10, 20, 30, 40, 50, 60, 70, 80, 90, 100)
FULL_M = (5, 10, 15, 20, 25)
DESK_SWEEPS = {"K": (10, 20, 40), "M": (2, 5, 10)}

EXIT_CONFIG = 2
EXIT_IO = 3


def _parse_sweep(text: str):
    try:
        var, vals = text.split("=", 1)
        return var.strip().upper(), tuple(int(v) for v in vals.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected VAR=v1,v2,..., got {text!r}") from None


def _parse_schemes(text: str):
    try:
        return tuple(Scheme(s.strip()) for s in text.split(",") if s.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hieraircomp",
        description="Monte Carlo MSE sweeps for two-hop over-the-air averaging with relays.")
    p.add_argument("--config", help="YAML or JSON config file (defaults: reference setup)")
    p.add_argument("--sweep", type=_parse_sweep, default=None,
                   help="K=10,20,40 or M=2,5,10 (default K=10,20,40)")
    p.add_argument("--num-wds", type=int, help="override K when sweeping M")
    p.add_argument("--num-relays", type=int, help="override M when sweeping K")
    p.add_argument("--realizations", type=int, default=None, help="channel draws per point (200)")
    p.add_argument("--seed", type=int, default=0, help="base seed; draw i uses seed+i")
    p.add_argument("--schemes", type=_parse_schemes, default=tuple(Scheme),
                   help="comma list of proposed,full-both,full-wd,full-relay")
    p.add_argument("--epsilon", type=float, default=1e-4, help="relative-improvement stop")
    p.add_argument("--max-iters", type=int, default=200, help="outer iteration cap")
    p.add_argument("--out", help="results file")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--full-scale", "--paper-scale", dest="full_scale", action="store_true",
                   help="K up to 100 (M=10) or M up to 25 (K=50), 1000 draws")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--deterministic", action="store_true",
                   help="write wall_ms as 0 so output depends only on inputs")
    p.add_argument("-q", "--quiet", action="store_true")
    return p


def _summary(result) -> str:
    lines = []
    var = result.sweep.variable
    head = f"{var:>5}  " + "  ".join(f"{s:>24}" for s in result.schemes)
    lines.append(head)
    for v in result.sweep.values:
        cells = []
        for s in result.schemes:
            a = result.aggregate(s, v)
            cells.append(f"{a.mean:>12.6g} ± {a.stderr:<9.2g}")
        lines.append(f"{v:>5}  " + "  ".join(cells))
    if Scheme.PROPOSED.value in result.schemes and len(result.schemes) > 1:
        lines.append("")
        lines.append("gain of proposed over benchmark (% of benchmark mean MSE)")
        for v in result.sweep.values:
            p = result.aggregate(Scheme.PROPOSED, v).mean
            gains = [f"{s}={100 * (result.aggregate(s, v).mean - p) / result.aggregate(s, v).mean:.4g}%"
                     for s in result.schemes if s != Scheme.PROPOSED.value]
            lines.append(f"{var}={v}: " + ", ".join(gains))
    return "\n".join(lines)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        template = load_config(args.config) if args.config else reference_defaults()
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # malformed YAML/JSON
        print(f"error: cannot parse config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.sweep is None:
        var, values = "K", DESK_SWEEPS["K"]
        if args.full_scale:
            values = FULL_K
    else:
        var, values = args.sweep
    realizations = args.realizations
    if args.full_scale:
        if args.sweep is None:
            values = FULL_K if var == "K" else FULL_M
        realizations = realizations or 1000
        # reference figures: M=10 for the K sweep, K=50 for the M sweep
        if var == "K" and args.num_relays is None:
            template = template.with_dims(num_relays=10)
        if var == "M" and args.num_wds is None:
            template = template.with_dims(num_wds=50)
    template = template.with_dims(args.num_wds, args.num_relays)

    try:
        sweep = SweepSpec(var, values, realizations or 200, args.seed)
        result = run_sweep(template, sweep, args.schemes, epsilon=args.epsilon,
                           max_outer_iters=args.max_iters, workers=args.workers,
                           timing=not args.deterministic)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if not args.quiet:
        print(_summary(result))
    if args.out:
        try:
            export(result, args.format, args.out)
        except OSError as exc:
            print(f"error: cannot write results: {exc}", file=sys.stderr)
            return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
