"""
Helpers shared by the subcommands.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional

from gwle.core.exceptions import CommandLineError
from gwle.models.report_file import ReportFile
from gwle.schemas.kernel import KernelFamily
from gwle.schemas.scenario import SimulationScenario

logger = logging.getLogger(__name__)


def add_kernel_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--kernel",
        choices=[family.value for family in KernelFamily],
        default=KernelFamily.GAUSSIAN.value,
        help="kernel profile (default: gaussian)",
    )


def add_output_argument(parser: argparse.ArgumentParser, what: str) -> None:
    parser.add_argument("--out", type=Path, default=None, help=f"{what} path (default: stdout)")


def usage_error(args: argparse.Namespace, message: str) -> CommandLineError:
    """CommandLineError carrying the subcommand's usage text."""
    return CommandLineError(f"{args.parser.format_usage()}{args.parser.prog}: error: {message}")


def load_scenario(path: Path, overrides: Optional[Dict[str, Any]] = None) -> SimulationScenario:
    """
    Parse a scenario JSON file and apply command-line overrides.

    Raises:
        pydantic.ValidationError: If the scenario is invalid
        OSError: If the file cannot be read
    """
    scenario = SimulationScenario.model_validate_json(Path(path).read_text())
    updates = {k: v for k, v in (overrides or {}).items() if v is not None}
    if updates:
        payload = scenario.model_dump()
        for key, value in updates.items():
            if isinstance(value, dict):
                payload[key] = {**payload[key], **value}
            else:
                payload[key] = value
        scenario = SimulationScenario.model_validate(payload)
    logger.info(f"Loaded scenario {path} (seed={scenario.seed}, replicas={scenario.replicas})")
    return scenario


def emit_json(report, out: Optional[Path]) -> None:
    """Write a report to --out, or to stdout without one."""
    text = ReportFile.write_json(report, out)
    if out is None:
        sys.stdout.write(text)
