"""
fit: local linear coefficient surface at target locations.
"""

import argparse
import logging
import sys
from pathlib import Path

from gwle.commands.common import add_kernel_argument, usage_error
from gwle.core.config import settings
from gwle.models.dataset_file import DatasetFile, read_points
from gwle.models.report_file import ReportFile
from gwle.schemas.fit import FitConfig
from gwle.schemas.kernel import BandwidthMatrix, KernelSpec, ScaleMatrix
from gwle.schemas.scenario import EstimatorName
from gwle.services.estimator_service import GWLEEstimator, surface_rows
from gwle.services.mlwe_service import MLWEEstimator
from gwle.utils.validators import FloatListValidator, ValidationError, parse_points, validate_dataset

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("fit", help="fit coefficient functions at target locations")
    parser.add_argument("--data", type=Path, required=True, help="dataset CSV")
    parser.add_argument(
        "--targets",
        default="data",
        help='CSV with columns u1..ud, or "data" for the sample locations',
    )
    parser.add_argument(
        "--estimator",
        choices=[name.value for name in EstimatorName],
        default=EstimatorName.GWLE.value,
    )
    parser.add_argument("--h", type=float, default=None, help="bandwidth (gwle)")
    parser.add_argument("--H", dest="bandwidths", default=None, help="h1,...,hd (mlwe)")
    parser.add_argument("--scales", default=None, help="a1,...,ad (default all ones)")
    add_kernel_argument(parser)
    parser.add_argument("--ridge", type=float, default=settings.DEFAULT_RIDGE, help="ridge fallback factor")
    parser.add_argument("--min-neighbors", type=int, default=None, help="required positive weights")
    parser.add_argument("--out", type=Path, default=None, help="surface CSV path (default: stdout)")
    parser.set_defaults(handler=handle, parser=parser)


def _estimator(args: argparse.Namespace, d: int):
    kernel = KernelSpec(family=args.kernel)
    if args.estimator == EstimatorName.MLWE.value:
        if args.bandwidths is None:
            raise usage_error(args, "--H is required for the mlwe estimator")
        bandwidths = BandwidthMatrix(
            bandwidths=FloatListValidator.parse(args.bandwidths, "--H", length=d, positive=True)
        )
        return MLWEEstimator(
            bandwidths,
            kernel=kernel,
            ridge_fallback=args.ridge,
            min_effective_neighbors=args.min_neighbors,
        )
    if args.h is None:
        raise usage_error(args, "the following arguments are required: --h")
    if args.scales is None:
        scales = ScaleMatrix.identity(d)
    else:
        scales = ScaleMatrix(scales=FloatListValidator.parse(args.scales, "--scales", length=d, positive=True))
    config = FitConfig(
        kernel=kernel,
        scales=scales,
        bandwidth=args.h,
        ridge_fallback=args.ridge,
        min_effective_neighbors=args.min_neighbors,
    )
    return GWLEEstimator(config)


def handle(args: argparse.Namespace) -> int:
    """
    Write the surface CSV; exit 2 when any target failed (its row is still written).
    """
    if args.h is not None and args.h <= 0:
        raise usage_error(args, "--h must be positive")
    dataset = DatasetFile.read(args.data)
    report = validate_dataset(dataset)
    if not report.passed:
        raise ValidationError(
            f"dataset {args.data} failed validation: {', '.join(report.kinds)}"
        )
    estimator = _estimator(args, dataset.d)

    if args.targets == "data":
        targets = [tuple(float(v) for v in row) for row in dataset.u]
    else:
        targets = parse_points(read_points(args.targets), dataset.d)

    result = estimator.fit_surface(dataset, targets, workers=args.threads)
    rows = surface_rows(result, targets, dataset.d, dataset.p)
    ReportFile.write_csv(rows, args.out if args.out is not None else sys.stdout)
    if result.failures:
        first = result.failures[0]
        logger.error(
            f"Failed to fit {len(result.failures)} of {len(targets)} targets; "
            f"first: {first.error}: {first.message}"
        )
        return 2
    return 0
