"""Command-line driver: ``recombinator run --config cfg.json`` and
``recombinator list``. Exit codes: 0 success, 1 certificate violation,
2 configuration error."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import CapExceededError, RecombinatorError
from .experiments import EXPERIMENTS, ConfigError, run


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="recombinator")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to the config JSON")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    p_run.add_argument("--out", default=None, help="output directory")
    sub.add_parser("list", help="list experiments and their config keys")
    args = parser.parse_args(argv)

    if args.command == "list":
        for name in sorted(EXPERIMENTS):
            print(f"{name}: {EXPERIMENTS[name]['doc']}")
        print("common keys: experiment (required), seed (required), shape, "
              "nu {kind: uniform|onepoint|singlesite|custom}, initial "
              "{kind: explicit|product|two-point|lem-entprod|random}")
        return 0

    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return run(cfg, out=args.out, seed_override=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapExceededError as exc:
        print(f"cap exceeded in module {exc.module}: {exc}", file=sys.stderr)
        return 2
    except RecombinatorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
