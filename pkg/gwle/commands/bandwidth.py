"""
bandwidth: cross-validated, plug-in (rate rule or leading-term IMSE) or Monte Carlo IMSE bandwidth.
"""

import argparse
import itertools
import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np

from gwle.commands.common import (
    add_kernel_argument,
    add_output_argument,
    emit_json,
    load_scenario,
    usage_error,
)
from gwle.core.config import settings
from gwle.models.dataset_file import DatasetFile
from gwle.schemas.fit import FitConfig
from gwle.schemas.kernel import KernelSpec, ScaleMatrix
from gwle.schemas.report import BandwidthReport
from gwle.schemas.scenario import EstimatorName, SimulationScenario
from gwle.services.bandwidth_service import (
    cv_profile,
    optimal_bandwidth_imse_plugin,
    optimal_bandwidth_plugin,
    select_from_profile,
)
from gwle.services.simulation_service import MonteCarloLab
from gwle.services.truth_model import TruthModel
from gwle.utils.validators import FloatListValidator, GridValidator, ValidationError, validate_dataset

logger = logging.getLogger(__name__)

METHODS = ("cv", "plugin", "plugin-imse", "imse")


def register(subparsers) -> None:
    parser = subparsers.add_parser("bandwidth", help="select a bandwidth")
    parser.add_argument("--method", choices=METHODS, required=True)
    parser.add_argument("--data", type=Path, default=None, help="dataset CSV (cv)")
    parser.add_argument("--scenario", type=Path, default=None, help="scenario JSON (plugin, plugin-imse, imse)")
    parser.add_argument("--h-grid", default=None, help="candidate grid lo:hi:n (cv, imse)")
    parser.add_argument("--scales", default=None, help="a1,...,ad for cv (default all ones)")
    add_kernel_argument(parser)
    parser.add_argument("--ridge", type=float, default=settings.DEFAULT_RIDGE, help="ridge fallback factor (cv)")
    parser.add_argument("--which-n", type=int, default=0, help="index into the scenario n_list")
    parser.add_argument(
        "--grid-points",
        type=int,
        default=None,
        help="plugin integration over a k^d midpoint grid of the support (default: eval points)",
    )
    add_output_argument(parser, "bandwidth report JSON")
    parser.set_defaults(handler=handle, parser=parser)


def midpoint_grid(scenario: SimulationScenario, k: int) -> List[Tuple[float, ...]]:
    """k midpoints per axis of the density support box."""
    density = scenario.truth.density
    axes = [
        lo + (hi - lo) * (np.arange(k) + 0.5) / k
        for lo, hi in zip(density.lower, density.upper)
    ]
    return [tuple(float(v) for v in point) for point in itertools.product(*axes)]


def _cv(args: argparse.Namespace) -> BandwidthReport:
    if args.data is None or args.h_grid is None:
        raise usage_error(args, "--method cv needs --data and --h-grid")
    grid = GridValidator.parse(args.h_grid)
    dataset = DatasetFile.read(args.data)
    report = validate_dataset(dataset)
    if not report.passed:
        raise ValidationError(f"dataset {args.data} failed validation: {', '.join(report.kinds)}")
    if args.scales is None:
        scales = ScaleMatrix.identity(dataset.d)
    else:
        values = FloatListValidator.parse(args.scales, "--scales", length=dataset.d, positive=True)
        scales = ScaleMatrix(scales=values)
    config = FitConfig(
        kernel=KernelSpec(family=args.kernel),
        scales=scales,
        bandwidth=grid[0],
        ridge_fallback=args.ridge,
    )
    profile = cv_profile(dataset, config, grid, workers=args.threads)
    h = select_from_profile(profile)
    return BandwidthReport(
        version=settings.VERSION, method="cv", h=h, n_total=dataset.n_total, profile=profile
    )


def _plugin(args: argparse.Namespace, scenario: SimulationScenario) -> BandwidthReport:
    n_total = int(np.prod(scenario.n_list[args.which_n]))
    if args.grid_points is not None:
        if args.grid_points < 1:
            raise usage_error(args, "--grid-points must be at least 1")
        grid = midpoint_grid(scenario, args.grid_points)
    else:
        grid = scenario.eval_points
    select = optimal_bandwidth_plugin if args.method == "plugin" else optimal_bandwidth_imse_plugin
    h = select(
        TruthModel(scenario.truth),
        ScaleMatrix(scales=scenario.scale_values()),
        KernelSpec(family=scenario.kernel),
        n_total,
        grid,
    )
    return BandwidthReport(version=settings.VERSION, method=args.method, h=h, n_total=n_total)


def _imse(args: argparse.Namespace, scenario: SimulationScenario) -> BandwidthReport:
    if args.h_grid is None:
        raise usage_error(args, "--method imse needs --h-grid")
    lab = MonteCarloLab(scenario, workers=args.threads)
    h, profile = lab.imse_grid_search(
        GridValidator.parse(args.h_grid), which_n=args.which_n, estimator=EstimatorName.GWLE
    )
    n_total = int(np.prod(scenario.n_list[args.which_n]))
    return BandwidthReport(
        version=settings.VERSION, method="imse", h=h, n_total=n_total, profile=profile
    )


def handle(args: argparse.Namespace) -> int:
    if args.method == "cv":
        report = _cv(args)
    else:
        if args.scenario is None:
            raise usage_error(args, f"--method {args.method} needs --scenario")
        scenario = load_scenario(args.scenario)
        if not 0 <= args.which_n < len(scenario.n_list):
            raise usage_error(args, f"--which-n must lie in 0..{len(scenario.n_list) - 1}")
        report = _imse(args, scenario) if args.method == "imse" else _plugin(args, scenario)
    emit_json(report, args.out)
    return 0
