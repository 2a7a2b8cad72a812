"""
validate: check a dataset file against the lattice rules.
"""

import argparse
import logging
from pathlib import Path

from gwle.commands.common import add_output_argument, emit_json
from gwle.models.dataset_file import DatasetFile
from gwle.utils.validators import validate_dataset

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("validate", help="validate a dataset CSV")
    parser.add_argument("--data", type=Path, required=True, help="dataset CSV")
    parser.add_argument(
        "--intercept",
        action="store_true",
        default=None,
        help="declare column x1 an intercept (overrides the sidecar)",
    )
    add_output_argument(parser, "validation report JSON")
    parser.set_defaults(handler=handle, parser=parser)


def handle(args: argparse.Namespace) -> int:
    """Exit 0 when the dataset passes, 1 otherwise; the report is always written."""
    dataset = DatasetFile.read(args.data, intercept=args.intercept)
    report = validate_dataset(dataset)
    emit_json(report, args.out)
    return 0 if report.passed else 1
