"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 runtime or numerical error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import EXPERIMENTS, ConfigError, parse_config
from .experiments import run

log = logging.getLogger("judrs")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _param(text: str):
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{key}: not a number: {value!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="judrs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML/JSON experiment config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output file (stdout if omitted)")
        p.add_argument("--format", choices=("table", "document"))
        p.add_argument("--trials", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--zeta", type=float, nargs="+")
        p.add_argument("--rate", type=float, dest="rate_r")
        p.add_argument("--relays", type=int, nargs="+", dest="relay_counts")
        p.add_argument("--distance", type=float, nargs="+", dest="d_ms_bs")
        p.add_argument("--no-fading", action="store_const", const=False, dest="fading")
        p.add_argument("--param", type=_param, action="append", default=[],
                       help="parameter override, e.g. p_c_dbm=10")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = args.config.read_text() if args.config else ""
    except OSError as exc:
        print(f"config: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = parse_config(
            text, experiment=args.experiment, seed=args.seed, trials=args.trials,
            workers=args.workers, zeta=args.zeta, rate_r=args.rate_r,
            relay_counts=args.relay_counts, d_ms_bs=args.d_ms_bs, fading=args.fading,
            params=dict(args.param) or None, output_path=args.out, output_format=args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("running %s", config.experiment)
    try:
        table, artifacts = run(config)
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    body = table.render(config.output_format)
    if config.output_path:
        out = Path(config.output_path)
        _write(out, body)
        for name, content in artifacts.items():
            suffix = ".json" if name == "trace" else ".csv"
            _write(out.with_name(f"{out.stem}.{name}{suffix}"), content)
    else:
        sys.stdout.write(body)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
