"""
Bandwidth selection: the plug-in optimum from the leading-term formulas and
leave-one-out cross-validation on data.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from gwle.core.config import settings
from gwle.core.exceptions import (
    AllBandwidthsFailedError,
    GWLEError,
    InvalidParameterError,
    NoFiniteOptimumError,
)
from gwle.schemas.dataset import Dataset
from gwle.schemas.fit import FitConfig
from gwle.schemas.kernel import KernelSpec, ScaleMatrix
from gwle.schemas.report import CvPoint
from gwle.services.asymptotics_service import sandwich_variance, theoretical_bias
from gwle.services.estimator_service import GWLEEstimator
from gwle.services.truth_model import TruthModel

logger = logging.getLogger(__name__)


def _unit_bandwidth_terms(
    truth: TruthModel,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    integration_grid: Sequence[Sequence[float]],
) -> Tuple[np.ndarray, np.ndarray]:
    grid = [np.asarray(u, dtype=float).ravel() for u in integration_grid]
    if not grid:
        raise InvalidParameterError("integration grid must be nonempty")
    biases, variance_terms = [], []
    for u in grid:
        if truth.interior_margin(u) <= 0.0 or truth.density(u) <= 0.0:
            raise InvalidParameterError(f"integration point {tuple(u)} is not interior")
        biases.append(theoretical_bias(truth, u, 1.0, scales, kernel))
        variance_terms.append(np.trace(sandwich_variance(truth, u, 1.0, scales, kernel, 1)))
    return np.asarray(biases), np.asarray(variance_terms)


def plugin_constants(
    truth: TruthModel,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    integration_grid: Sequence[Sequence[float]],
) -> Tuple[float, float]:
    """
    Grid averages (midpoint weights) of the unit-bandwidth bias norm
    |B(u)|_1 and of the unit-bandwidth, unit-sample variance trace tr V(u).

    Raises:
        InvalidParameterError: If the grid is empty or touches the support boundary
    """
    biases, variance_terms = _unit_bandwidth_terms(truth, scales, kernel, integration_grid)
    return float(np.mean(np.sum(np.abs(biases), axis=1))), float(np.mean(variance_terms))


def imse_plugin_constants(
    truth: TruthModel,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    integration_grid: Sequence[Sequence[float]],
) -> Tuple[float, float]:
    """
    Grid averages of the squared unit-bandwidth bias |B(u)|_2^2 and of tr V(u).
    """
    biases, variance_terms = _unit_bandwidth_terms(truth, scales, kernel, integration_grid)
    return float(np.mean(np.sum(np.square(biases), axis=1))), float(np.mean(variance_terms))


def plugin_objective(h: float, bias_integral: float, variance_integral: float, n_total: int, d: int) -> float:
    """Leading-order error criterion h^2 B + V / (N h^d) minimized by the plug-in rule."""
    return h * h * bias_integral + variance_integral / (n_total * h ** d)


def imse_objective(h: float, squared_bias: float, variance_integral: float, n_total: int, d: int) -> float:
    """Leading-term IMSE h^4 B2 + V / (N h^d)."""
    return h ** 4 * squared_bias + variance_integral / (n_total * h ** d)


def _check_constants(bias_integral: float, variance_integral: float) -> None:
    if not bias_integral > 0.0:
        raise NoFiniteOptimumError(
            "Bias integrand vanishes (coefficient functions without curvature): "
            "the error criterion decreases without bound in h"
        )
    if not variance_integral > 0.0:
        raise NoFiniteOptimumError("Variance integrand vanishes: the optimum is h -> 0")


def optimal_bandwidth_plugin(
    truth: TruthModel,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    n_total: int,
    integration_grid: Sequence[Sequence[float]],
) -> float:
    """
    Plug-in bandwidth h_opt = (d V / (2 N B))^(1/(d+2)), the minimizer of
    plugin_objective; h_opt is exactly proportional to N^(-1/(d+2)).

    Args:
        truth: Known model
        scales: Scale parameters
        kernel: Kernel family
        n_total: Sample size N
        integration_grid: Interior locations with equal midpoint weights

    Returns:
        Positive bandwidth

    Raises:
        NoFiniteOptimumError: If the bias or the variance integrand vanishes
    """
    if n_total < 1:
        raise InvalidParameterError(f"N_total must be at least 1, got {n_total}")
    bias_integral, variance_integral = plugin_constants(truth, scales, kernel, integration_grid)
    _check_constants(bias_integral, variance_integral)
    d = truth.d
    h_opt = (d * variance_integral / (2.0 * n_total * bias_integral)) ** (1.0 / (d + 2))
    logger.info(f"Plug-in bandwidth {h_opt:.6g} for N={n_total}")
    return h_opt


def optimal_bandwidth_imse_plugin(
    truth: TruthModel,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    n_total: int,
    integration_grid: Sequence[Sequence[float]],
) -> float:
    """
    Minimizer of the leading-term IMSE, h = (d V / (4 N B2))^(1/(d+4)).

    Tracks the Monte Carlo IMSE minimizer, unlike the rate rule of
    optimal_bandwidth_plugin which scales as N^(-1/(d+2)).

    Raises:
        NoFiniteOptimumError: If the bias or the variance integrand vanishes
    """
    if n_total < 1:
        raise InvalidParameterError(f"N_total must be at least 1, got {n_total}")
    squared_bias, variance_integral = imse_plugin_constants(truth, scales, kernel, integration_grid)
    _check_constants(squared_bias, variance_integral)
    d = truth.d
    h_opt = (d * variance_integral / (4.0 * n_total * squared_bias)) ** (1.0 / (d + 4))
    logger.info(f"IMSE plug-in bandwidth {h_opt:.6g} for N={n_total}")
    return h_opt


# ==================== Cross-validation ====================


def _check_grid(h_grid: Sequence[float]) -> List[float]:
    grid = [float(h) for h in h_grid]
    if not grid:
        raise InvalidParameterError("h_grid must be nonempty")
    if any(h <= 0.0 or not math.isfinite(h) for h in grid):
        raise InvalidParameterError("h_grid values must be positive and finite")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise InvalidParameterError("h_grid must be sorted ascending")
    return grid


def _loo_score(dataset: Dataset, config: FitConfig) -> CvPoint:
    estimator = GWLEEstimator(config)
    residuals = np.empty(dataset.n_records)
    failures = 0
    reason = None
    for i in range(dataset.n_records):
        try:
            fit = estimator.fit_local(dataset, dataset.u[i], exclude=i)
        except GWLEError as e:
            failures += 1
            reason = reason or f"{type(e).__name__}: {e}"
            continue
        residuals[i] = dataset.y[i] - float(dataset.x[i] @ fit.beta_hat)
    if failures:
        return CvPoint(h=config.bandwidth, failed_points=failures, reason=reason)
    return CvPoint(h=config.bandwidth, score=float(np.mean(residuals ** 2)))


def cv_profile(
    dataset: Dataset,
    config: FitConfig,
    h_grid: Sequence[float],
    workers: Optional[int] = None,
) -> List[CvPoint]:
    """
    Leave-one-out squared prediction error at every grid bandwidth. A
    bandwidth at which any held-out fit fails carries no score.
    """
    grid = _check_grid(h_grid)
    with ThreadPoolExecutor(max_workers=settings.worker_count(workers)) as pool:
        profile = list(pool.map(lambda h: _loo_score(dataset, config.with_bandwidth(h)), grid))
    for point in profile:
        logger.debug(f"CV h={point.h:.6g} score={point.score} failed={point.failed_points}")
    return profile


def select_from_profile(profile: Sequence[CvPoint]) -> float:
    """
    Smallest-score bandwidth; scores equal within CV_TIE_RTOL go to the smaller h.

    Raises:
        AllBandwidthsFailedError: If no bandwidth has a score
    """
    scored = sorted((point for point in profile if point.score is not None), key=lambda point: point.h)
    if not scored:
        reasons = "; ".join(sorted({p.reason for p in profile if p.reason}))
        raise AllBandwidthsFailedError(f"Every candidate bandwidth failed: {reasons}")
    best = min(point.score for point in scored)
    for point in scored:
        if np.isclose(point.score, best, rtol=settings.CV_TIE_RTOL, atol=1e-20):
            return point.h
    return scored[0].h


def cv_bandwidth(
    dataset: Dataset,
    config: FitConfig,
    h_grid: Sequence[float],
    workers: Optional[int] = None,
) -> float:
    """
    Leave-one-out cross-validated bandwidth.

    Args:
        dataset: Sample
        config: Template whose bandwidth is replaced by each grid value
        h_grid: Nonempty ascending candidates
        workers: Thread cap

    Returns:
        Selected bandwidth
    """
    try:
        h = select_from_profile(cv_profile(dataset, config, h_grid, workers=workers))
        logger.info(f"Cross-validated bandwidth {h:.6g}")
        return h
    except GWLEError:
        raise
    except Exception as e:
        logger.error(f"Failed to cross-validate bandwidth: {e}")
        raise
