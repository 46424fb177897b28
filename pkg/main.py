"""
Application entry point.
Run with:  python main.py <subcommand> --config configs/<job>.json [--out DIR] [--seed N] [-v]

Subcommands: surface, probe, entropy, train, verify-lemmas (see src/cli/commands.py).
"""

from __future__ import annotations

import logging
import sys
from collections.abc import Sequence

import structlog

from src.cli.commands import EXIT_CONFIG, build_parser, dispatch
from src.cli.report import RED, RESET
from src.config import settings
from src.exceptions import ConfigError


def configure_logging(verbose: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.getLevelName(settings.log_level.upper())
    if not isinstance(level, int):
        level = logging.INFO
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer() if settings.app_env == "development"
            else structlog.processors.JSONRenderer(),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        # Tables go to stdout; keep the event stream on stderr
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
    )


configure_logging()

log = structlog.get_logger(__name__)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"{RED}{exc}{RESET}")
        parser.print_usage()
        return EXIT_CONFIG

    if args.verbose:
        configure_logging(verbose=True)
    log.debug("invocation", command=args.command, config=args.config, out=args.out, seed=args.seed)
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
