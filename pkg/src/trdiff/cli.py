"""Command-line entry point: ``trdiff <subcommand> --config <path> [--threads N]``.

Exit codes: 0 ok, 1 configuration error, 2 numerical failure,
3 validation failure.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .config import ConfigError, parse_config
from .pipeline import SUBCOMMANDS, PipelineError, run_pipeline

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 1, 2, 3

log = logging.getLogger("trdiff")


def _threads(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("TRDIFF_THREADS")
    if env is None:
        return 1
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(f"TRDIFF_THREADS: expected an integer, got {env!r}") from None
    return n


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trdiff", description="time-resolved diffraction from pumped graphene")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--threads", type=int, default=None, help="worker threads (default: $TRDIFF_THREADS or 1)")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigError(f"threads: must be >= 1, got {threads}")
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_pipeline(cfg, args.subcommand, threads)
    except PipelineError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for line in result.report:
        print(line)
    for path in result.files:
        log.info("wrote %s", path)
    if not result.ok:
        print("validation failed", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
