"""Command-line entry point: cavityduo <scenario> --config file [options]."""

from __future__ import annotations

import argparse
import sys

from .errors import ParseError, ValidationError
from .harness import EXIT_CONFIG, SCENARIOS, parse_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavityduo",
        description=(
            "Exact and brute-force dynamics of two dissipative cavity modes "
            "sharing a zero-temperature reservoir."
        ),
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name in SCENARIOS:
        sp = sub.add_parser(name, help=f"run the {name} scenario")
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", default=None, help="output directory (overrides config)")
        sp.add_argument("--jobs", type=int, default=1, help="parallel sweep workers")
        sp.add_argument("--seed", type=int, default=None, help="override config seed")
        sp.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a scalar config field via dotted path, e.g. time.dt=0.002",
        )
        if name in ("evolve-coherent", "evolve-cat", "verify"):
            sp.add_argument(
                "--export-state",
                action="store_true",
                help="also write the final density matrix as state.csv (row,col,re,im)",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.override)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    try:
        cfg = parse_config(args.config, overrides=overrides, scenario=args.scenario)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(
        cfg,
        out_dir=args.out,
        jobs=args.jobs,
        export_state=getattr(args, "export_state", False),
    )


if __name__ == "__main__":
    sys.exit(main())
