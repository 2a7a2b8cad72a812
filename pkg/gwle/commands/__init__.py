"""
Command-line subcommands. Each module registers one or more subparsers
whose handler returns the process exit code.
"""

from . import bandwidth, fit, moments, simulate, validate

COMMANDS = (validate, fit, bandwidth, simulate, moments)

__all__ = [
    "COMMANDS",
    "bandwidth",
    "fit",
    "moments",
    "simulate",
    "validate",
]
