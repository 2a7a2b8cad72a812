"""
moments: kernel moment constants by quadrature.
"""

import argparse
import logging

from gwle.commands.common import add_kernel_argument, add_output_argument, emit_json, usage_error
from gwle.core.config import settings
from gwle.core.kernels import kernel_moments, product_constant, radial_moments
from gwle.schemas.kernel import KernelFamily, KernelSpec
from gwle.schemas.report import MomentsReport

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("moments", help="print kernel moment constants")
    add_kernel_argument(parser)
    parser.add_argument("--dimension", type=int, default=1, help="location dimension d")
    add_output_argument(parser, "moments JSON")
    parser.set_defaults(handler=handle, parser=parser)


def handle(args: argparse.Namespace) -> int:
    if args.dimension < 1:
        raise usage_error(args, "--dimension must be at least 1")
    kernel = KernelSpec(family=args.kernel)
    moments = kernel_moments(kernel, args.dimension)
    radial = radial_moments(kernel, args.dimension)
    report = MomentsReport(
        version=settings.VERSION,
        kernel=kernel.family.value,
        dimension=args.dimension,
        kappa={str(lam): value for lam, value in moments.kappa_lambda.items()},
        kappa2=moments.kappa2,
        kappa_sq_1d=moments.kappa_sq_1d,
        kappa_d=moments.kappa_d,
        radial={"mass": radial.mass, "mu2": radial.mu2, "nu0": radial.nu0, "nu2": radial.nu2},
        product_constant=(
            product_constant(kernel, args.dimension)
            if kernel.family == KernelFamily.GAUSSIAN
            else None
        ),
    )
    emit_json(report, args.out)
    return 0
