"""
simulate and compare: Monte Carlo sweeps over a scenario file.
"""

import argparse
import logging
from pathlib import Path
from typing import Any, Dict

from gwle.commands.common import add_output_argument, emit_json, load_scenario
from gwle.core.config import settings
from gwle.models.report_file import ReportFile, timestamp
from gwle.schemas.report import MonteCarloReport
from gwle.services.simulation_service import MonteCarloLab

logger = logging.getLogger(__name__)


def _common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--scenario", type=Path, required=True, help="scenario JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--replicas", type=int, default=None, help="override the replica count")
    parser.add_argument("--emit-csv", type=Path, default=None, help="also write one CSV row per cell")
    parser.add_argument(
        "--no-timestamp",
        action="store_true",
        help="omit generated_at so identical runs are byte-identical",
    )
    add_output_argument(parser, "Monte Carlo report JSON")


def register(subparsers) -> None:
    simulate = subparsers.add_parser("simulate", help="run the scenario's (estimator, N, h) sweep")
    _common_arguments(simulate)
    simulate.set_defaults(handler=handle_simulate, parser=simulate)

    compare = subparsers.add_parser("compare", help="GWLE/MLWE variance ratio across N")
    _common_arguments(compare)
    compare.add_argument("--gwle-constant", type=float, default=None, help="C_g in h = C_g N^e_g")
    compare.add_argument("--mlwe-constant", type=float, default=None, help="C_m in h_s = C_m N^e_m b_s")
    compare.add_argument("--gwle-exponent", type=float, default=None, help="e_g, default -1/(d+2)")
    compare.add_argument("--mlwe-exponent", type=float, default=None, help="e_m, default -1/(d+4)")
    compare.set_defaults(handler=handle_compare, parser=compare)


def _overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {"seed": args.seed, "replicas": args.replicas}
    rates = {
        key: getattr(args, key, None)
        for key in ("gwle_constant", "mlwe_constant", "gwle_exponent", "mlwe_exponent")
    }
    rates = {key: value for key, value in rates.items() if value is not None}
    if rates:
        overrides["rates"] = rates
    return overrides


def _finish(args: argparse.Namespace, report: MonteCarloReport) -> int:
    emit_json(report, args.out)
    if args.emit_csv is not None:
        ReportFile.write_cells(report.cells, args.emit_csv)
    failed = sum(not cell.ok for cell in report.cells)
    if failed:
        logger.warning(f"{failed} of {len(report.cells)} cells failed")
    return 0


def handle_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario, _overrides(args))
    cells, exponents = MonteCarloLab(scenario, workers=args.threads).simulate()
    report = MonteCarloReport(
        version=settings.VERSION,
        command="simulate",
        generated_at=None if args.no_timestamp else timestamp(),
        seed=scenario.seed,
        replicas=scenario.replicas,
        scenario=scenario.model_dump(mode="json"),
        cells=cells,
        exponents=exponents,
    )
    return _finish(args, report)


def handle_compare(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario, _overrides(args))
    series, cells = MonteCarloLab(scenario, workers=args.threads).compare_estimators()
    report = MonteCarloReport(
        version=settings.VERSION,
        command="compare",
        generated_at=None if args.no_timestamp else timestamp(),
        seed=scenario.seed,
        replicas=scenario.replicas,
        scenario=scenario.model_dump(mode="json"),
        cells=cells,
        variance_ratio_series=series,
    )
    return _finish(args, report)
