"""Command line: ``deplab <experiment> --config FILE [--out DIR] [--workers N] ...``.

Exit codes: 0 success, 2 configuration error, 3 runtime fault.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import KINDS, ConfigError, load, resolve
from .experiments import run

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("deplab")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deplab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        p.add_argument("--config", metavar="PATH",
                       help="YAML config; built-in defaults are used when omitted")
        p.add_argument("--seed-offset", type=int, default=0, help="added to every configured seed")
        p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
        p.add_argument("--out", default="out", metavar="DIR", help="output directory")
        p.add_argument("--log-steps", action="store_true", help="also write per-step NDJSON logs")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load(args.config) if args.config else resolve({"kind": args.kind})
        if cfg["kind"] != args.kind:
            raise ConfigError(f"config is for {cfg['kind']!r}, not {args.kind!r}")
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        if args.seed_offset < 0:
            raise ConfigError("--seed-offset must be >= 0")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        paths = run(cfg, args.out, args.workers, args.seed_offset, args.log_steps)
    except Exception as exc:  # noqa: BLE001 - any fault maps to the runtime exit code
        log.debug("run failed", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for p in paths:
        print(p)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
