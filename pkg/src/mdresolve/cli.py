"""Command-line entry point: ``mdresolve <stage> --config FILE [options]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ResolveError
from .pipeline import BLOCKING_MODES, run_pipeline

# subcommand -> (last stage, run classifier stages)
COMMANDS = {
    "ingest": ("ingest", False),
    "simcache": ("simcache", False),
    "block": ("block", False),
    "train": ("train", True),
    "classify": ("classify", True),
    "merge": ("merge", True),
    "evaluate": ("evaluate", False),
    "pipeline": ("evaluate", True),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdresolve", description="Rule-driven blocking, matching and merging.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the pipeline through the {name} stage")
        p.add_argument("--config", required=True, help="pipeline INI file")
        p.add_argument("--seed", type=int, default=None, help="override [pipeline] seed")
        p.add_argument("--out-dir", default="out", help="directory for artifacts (default: out)")
        p.add_argument("--blocking", choices=BLOCKING_MODES, default=None, help="override [pipeline] blocking")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    until, classify = COMMANDS[args.command]
    try:
        run_pipeline(args.config, args.out_dir, until, seed=args.seed, blocking=args.blocking, classify=classify)
    except ResolveError as exc:
        print(f"mdresolve: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
