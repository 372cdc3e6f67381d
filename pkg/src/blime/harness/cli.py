"""Command-line interface.

Subcommands: ``explain`` (one run: report.json + figures), ``sweep``
(consensus statistics over a parameter grid: sweep.csv), ``variability``
(coefficient distributions under one diversity source: CSV + violins) and
``render`` (re-render an emitted CSV as an SVG figure).

Exit codes: 0 success, 2 configuration error, 3 predictor/protocol error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError, InputError, ProtocolError
from . import experiments
from .config import KEYS, parse_config_file, resolve_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROTOCOL = 3
EXIT_IO = 4


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="run configuration file")
    group = parser.add_argument_group("config overrides")
    for key, (_parser, default, help_text) in KEYS.items():
        suffix = f" (default: {default})" if default is not None else ""
        group.add_argument(f"--{key}", metavar="V", help=help_text + suffix)
    # Documented short aliases.
    parser.add_argument("--out", metavar="DIR", help="alias for --out_dir")


def _resolved(args: argparse.Namespace):
    pairs = parse_config_file(args.config) if args.config else {}
    overrides = {key: getattr(args, key, None) for key in KEYS}
    if args.out is not None:
        overrides["out_dir"] = args.out
    return resolve_config(pairs, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blime",
        description=(
            "Bootstrapped local surrogate explanations with ordinal "
            "consensus uncertainty."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_explain = sub.add_parser("explain", help="explain one instance")
    _add_config_flags(p_explain)
    p_explain.add_argument(
        "--dump-ranks", action="store_true", help="also write ranks.json"
    )

    p_sweep = sub.add_parser("sweep", help="sweep a run parameter")
    _add_config_flags(p_sweep)
    p_sweep.add_argument(
        "--parameter",
        required=True,
        choices=experiments.SWEEP_PARAMETERS,
        help="which count to sweep",
    )
    p_sweep.add_argument(
        "--values",
        metavar="N,N,...",
        help="ascending counts to sweep (defaults per parameter)",
    )
    p_sweep.add_argument("--replicates", type=int, default=10, metavar="R")
    p_sweep.add_argument(
        "--dump-ranks",
        action="store_true",
        help="also write per-run rank matrices under ranks/",
    )

    p_var = sub.add_parser("variability", help="coefficient variability study")
    _add_config_flags(p_var)
    p_var.add_argument(
        "--mode", required=True, choices=experiments.VARIABILITY_MODES
    )

    p_render = sub.add_parser("render", help="render an emitted CSV as SVG")
    p_render.add_argument("--csv", required=True, metavar="FILE")
    p_render.add_argument("--kind", required=True, choices=("lines", "violins"))
    p_render.add_argument("--out", metavar="DIR", help="output directory")
    return parser


def main(argv: list[str] | None = None) -> int:
    # argparse stores "--kernel.width" under the literal dotted name, which
    # getattr handles fine; parse_known-style surprises are avoided by
    # registering every key explicitly in _add_config_flags.
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "render":
            written = experiments.cmd_render(args.csv, args.kind, args.out)
        else:
            config = _resolved(args)
            if args.command == "explain":
                written = experiments.cmd_explain(config, dump_ranks=args.dump_ranks)
            elif args.command == "sweep":
                values = (
                    [int(v) for v in args.values.split(",")]
                    if args.values
                    else None
                )
                written = experiments.cmd_sweep(
                    config,
                    args.parameter,
                    values,
                    replicates=args.replicates,
                    dump_ranks=args.dump_ranks,
                )
            else:
                written = experiments.cmd_variability(config, args.mode)
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolError as exc:
        print(f"predictor error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    for name, path in written.items():
        print(f"{name}: {path}")
    return EXIT_OK


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
