"""
Command-line entry point.
Configures logging, parses arguments and maps errors to exit codes.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError as PydanticValidationError

from gwle.commands import COMMANDS
from gwle.core.config import settings
from gwle.core.exceptions import CommandLineError, GWLEError

logger = logging.getLogger(__name__)


class CommandParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting on bad usage."""

    def error(self, message):
        raise CommandLineError(f"{self.format_usage()}{self.prog}: error: {message}")


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging on stderr; stdout carries reports only."""
    name = (level or settings.LOG_LEVEL).upper()
    logging.basicConfig(
        level=getattr(logging, name, logging.WARNING),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
        force=True,
    )


def build_parser() -> CommandParser:
    parser = CommandParser(
        prog=settings.APP_NAME,
        description="Distance-kernel local linear estimation of varying-coefficient models",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"{settings.APP_NAME} {settings.VERSION} (build {settings.BUILD})",
    )
    parser.add_argument("--json-errors", action="store_true", help="write errors to stderr as JSON")
    parser.add_argument("--threads", type=int, default=None, help="worker cap (default: GWLE_THREADS or CPU count)")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default=None,
        type=str.upper,
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def report_error(error: GWLEError, json_errors: bool) -> None:
    if json_errors:
        sys.stderr.write(json.dumps(error.to_dict(), sort_keys=True) + "\n")
    else:
        sys.stderr.write(f"error: {error.message}\n")


def run(argv: Optional[List[str]] = None) -> int:
    """
    Run one command.

    Args:
        argv: Arguments without the program name, default sys.argv[1:]

    Returns:
        Exit code: 0 success, 1 usage or validation error, 2 numerical failure
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    json_errors = "--json-errors" in argv
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        configure_logging(args.log_level)
        if args.threads is not None and args.threads < 1:
            raise CommandLineError(f"{parser.format_usage()}--threads must be at least 1")
        logger.debug(f"Running {args.command}")
        return args.handler(args)
    except GWLEError as e:
        report_error(e, json_errors)
        return e.exit_code
    except PydanticValidationError as e:
        report_error(GWLEError(f"invalid configuration: {e}"), json_errors)
        return 1
    except OSError as e:
        report_error(GWLEError(f"cannot access file: {e}"), json_errors)
        return 1
    except SystemExit as e:
        # --help and --version
        return e.code if isinstance(e.code, int) else 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
