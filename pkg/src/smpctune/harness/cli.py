"""Command-line entry point: ``smpctune {oracle,train,compare,drift}``."""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from ..errors import ConfigError, SMPCTuneError
from ..kernels import BACKEND
from .commands import COMMANDS
from .config import load_config

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _seed_list(text: str) -> list[int]:
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"seeds: cannot parse {text!r}") from None
    if not seeds:
        raise ConfigError("seeds: empty list")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smpctune", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    help_ = {
        "oracle": "evaluate every grid state (writes oracle.csv, oracle.json)",
        "train": "train Q-learning per seed (writes train.csv, qtable.json, config.toml)",
        "compare": "Q-learning vs grid and random search (writes compare.csv, compare.json, timing.csv, summary.txt)",
        "drift": "continuous learning under network drift (writes drift.csv, drift.json)",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, help=help_[name])
        p.add_argument("--config", help="flat TOML config file")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        p.add_argument("--seed", help="comma-separated seeds (overrides seeds)")
        p.add_argument("--episodes", type=int, help="override episodes")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.out is not None:
            overrides["out_dir"] = args.out
        if args.seed is not None:
            overrides["seeds"] = _seed_list(args.seed)
        if args.episodes is not None:
            overrides["episodes"] = args.episodes
        if overrides:
            cfg = dataclasses.replace(cfg, **overrides)
        result = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SMPCTuneError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if args.command == "compare":
        print(result["table"], end="")
    else:
        print(json.dumps({"command": args.command, "backend": BACKEND, **result}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
