"""
Monte Carlo laboratory for conditional bias and variance.

Fields live on an M-dimensional lattice. Innovations are iid standard normal;
the smoothed laws average them over the infinite-norm box of radius
floor(m/2) and rescale to unit variance, so records whose lattice indices
differ by more than m are independent.

Random streams are keyed by counters, never by execution order:
    design   -> (seed, 1, which_N)
    response -> (seed, 2, which_N)
    replica  -> (seed, 3, which_N, h_index, r)
The design therefore depends on which_N only: every bandwidth and estimator
in a sweep sees the same frozen (X, U), and estimators share replica noise.
"""

import itertools
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage, stats

from gwle.core.config import settings
from gwle.core.exceptions import GWLEError, InvalidParameterError, NumericalError
from gwle.schemas.dataset import Dataset
from gwle.schemas.fit import FitConfig
from gwle.schemas.kernel import BandwidthMatrix, KernelSpec, ScaleMatrix
from gwle.schemas.report import CvPoint, ExponentFit, McCell, RatioPoint, RatioSeries
from gwle.schemas.scenario import (
    CovariateLaw,
    EstimatorName,
    FrozenDesign,
    LocationLaw,
    SimulationScenario,
)
from gwle.services.asymptotics_service import (
    sandwich_variance,
    theoretical_bias,
    theoretical_variance,
)
from gwle.services.estimator_service import GWLEEstimator, LocalLinearEstimator
from gwle.services.mlwe_service import MLWEEstimator
from gwle.services.truth_model import TruthModel

logger = logging.getLogger(__name__)

DESIGN_STREAM = 1
RESPONSE_STREAM = 2
REPLICA_STREAM = 3


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the counter-keyed stream (seed, *key)."""
    return np.random.default_rng(np.random.SeedSequence([seed, *key]))


def stationary_field(
    rng: np.random.Generator,
    shape: Sequence[int],
    dependence_range: int,
    smoothed: bool,
) -> np.ndarray:
    """
    Unit-variance stationary field on a lattice of the given shape.

    Args:
        rng: Source of innovations
        shape: Lattice sizes N_1..N_M
        dependence_range: m; the smoothing radius is floor(m/2)
        smoothed: Moving-average smoothing, otherwise iid

    Returns:
        Array of the lattice shape
    """
    shape = tuple(int(n) for n in shape)
    radius = dependence_range // 2
    if not smoothed or radius == 0:
        return rng.standard_normal(shape)
    window = 2 * radius + 1
    padded = rng.standard_normal(tuple(n + 2 * radius for n in shape))
    averaged = ndimage.uniform_filter(padded, size=window, mode="constant")
    core = tuple(slice(radius, radius + n) for n in shape)
    return averaged[core] * math.sqrt(window ** len(shape))


def lag_autocorrelation(field: np.ndarray, lag: int) -> float:
    """
    Mean empirical autocorrelation over all lattice offsets of infinite norm
    exactly lag (one of each +/- pair).

    Raises:
        InvalidParameterError: If lag < 1 or no offset fits inside the lattice
    """
    field = np.asarray(field, dtype=float)
    if lag < 1:
        raise InvalidParameterError(f"lag must be at least 1, got {lag}")
    centered = field - field.mean()
    variance = float(np.mean(centered ** 2))
    correlations = []
    for offset in itertools.product(range(-lag, lag + 1), repeat=field.ndim):
        if max(abs(o) for o in offset) != lag:
            continue
        leading = next(o for o in offset if o != 0)
        if leading < 0:
            continue
        if any(abs(o) >= n for o, n in zip(offset, field.shape)):
            continue
        left = tuple(slice(max(0, -o), n - max(0, o)) for o, n in zip(offset, field.shape))
        right = tuple(slice(max(0, o), n + min(0, o)) for o, n in zip(offset, field.shape))
        correlations.append(float(np.mean(centered[left] * centered[right])) / variance)
    if not correlations:
        raise InvalidParameterError(f"lag {lag} does not fit inside lattice {field.shape}")
    return float(np.mean(correlations))


def fit_power_law(axis_values: Sequence[float], quantities: Sequence[float], **labels) -> ExponentFit:
    """
    Least-squares slope of log(quantity) against log(axis).

    Raises:
        InvalidParameterError: Fewer than 3 points, non-positive values or a
            grid without spread
    """
    x = np.asarray(axis_values, dtype=float)
    y = np.asarray(quantities, dtype=float)
    if x.size != y.size or x.size < 3:
        raise InvalidParameterError("a scaling fit needs at least 3 grid points")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise InvalidParameterError("scaling fits need positive finite values")
    if np.unique(x).size < 2:
        raise InvalidParameterError("degenerate grid: every axis value is equal")
    result = stats.linregress(np.log(x), np.log(y))
    return ExponentFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        stderr=float(result.stderr),
        r_squared=float(result.rvalue ** 2),
        n_points=int(x.size),
        **labels,
    )


def _mean_by(cells: List[McCell], key, value) -> Dict[float, float]:
    grouped: Dict[float, List[float]] = {}
    for cell in cells:
        quantity = value(cell)
        if quantity is not None:
            grouped.setdefault(key(cell), []).append(quantity)
    return {k: float(np.mean(v)) for k, v in sorted(grouped.items())}


def _bias_norm(cell: McCell) -> Optional[float]:
    return None if cell.empirical_bias is None else float(np.linalg.norm(cell.empirical_bias))


def _variance_trace(cell: McCell) -> Optional[float]:
    if cell.empirical_variance is None:
        return None
    return float(np.trace(np.asarray(cell.empirical_variance)))


def fit_scaling_exponents(cells: Sequence[McCell]) -> List[ExponentFit]:
    """
    Scaling exponents over the sweep grids, averaging eval points per cell:
    mean |bias| against h (per N), mean tr(Var) against N (per h) and against
    h (per N). Axes with fewer than 3 grid points are skipped.
    """
    fits: List[ExponentFit] = []
    ok = [cell for cell in cells if cell.ok]
    sweeps = (
        ("bias", "h", _bias_norm, lambda c: c.n_total, lambda c: c.h),
        ("variance", "N", _variance_trace, lambda c: c.h, lambda c: float(c.n_total)),
        ("variance", "h", _variance_trace, lambda c: c.n_total, lambda c: c.h),
    )
    for estimator in sorted({cell.estimator for cell in ok}):
        own = [cell for cell in ok if cell.estimator == estimator]
        for quantity, axis, value, fixed_key, axis_key in sweeps:
            for fixed in sorted({fixed_key(cell) for cell in own}):
                series = _mean_by([c for c in own if fixed_key(c) == fixed], axis_key, value)
                if len(series) < 3:
                    continue
                try:
                    fits.append(
                        fit_power_law(
                            list(series.keys()),
                            list(series.values()),
                            estimator=estimator,
                            quantity=quantity,
                            axis=axis,
                            fixed=float(fixed),
                        )
                    )
                except InvalidParameterError as e:
                    logger.warning(f"Skipped {estimator} {quantity}-vs-{axis} fit: {e}")
    return fits


class GeneratedField(NamedTuple):
    """A generated sample with its noiseless mean and per-record noise scale."""

    dataset: Dataset
    design: FrozenDesign
    mean: np.ndarray
    noise_sd: np.ndarray


class MonteCarloLab:
    """
    Runs conditional Monte Carlo experiments for one scenario. Generated
    designs are cached per which_N.
    """

    def __init__(self, scenario: SimulationScenario, workers: Optional[int] = None):
        """
        Initialize the lab.

        Args:
            scenario: Validated scenario
            workers: Thread cap, default from settings
        """
        self.scenario = scenario
        self.truth = TruthModel(scenario.truth)
        self.kernel = KernelSpec(family=scenario.kernel)
        self.scales = ScaleMatrix(scales=scenario.scale_values())
        self.workers = settings.worker_count(workers)
        self._fields: Dict[int, GeneratedField] = {}
        self._lock = threading.Lock()

    # ==================== Field generation ====================

    def _lattice(self, which_n: int) -> Tuple[int, ...]:
        if not 0 <= which_n < len(self.scenario.n_list):
            raise InvalidParameterError(
                f"which_N={which_n} outside 0..{len(self.scenario.n_list) - 1}"
            )
        return tuple(self.scenario.n_list[which_n])

    def _build_field(self, which_n: int) -> GeneratedField:
        scenario = self.scenario
        shape = self._lattice(which_n)
        n = int(np.prod(shape))
        d, m = scenario.d, scenario.dependence_range
        rng = stream(scenario.seed, DESIGN_STREAM, which_n)

        if scenario.location_law == LocationLaw.MA_SMOOTHED:
            probabilities = np.column_stack(
                [stats.norm.cdf(stationary_field(rng, shape, m, True).ravel()) for _ in range(d)]
            )
        else:
            probabilities = rng.uniform(size=(n, d))
        u = self.truth.location_quantile(probabilities)

        smoothed = scenario.covariate_law == CovariateLaw.MA_SMOOTHED
        x = self.truth.gamma_at(u)
        offset = 1 if self.truth.intercept else 0
        for k in range(offset, self.truth.p):
            x[:, k] += self.truth.noise_scale * stationary_field(rng, shape, m, smoothed).ravel()

        mean = np.sum(x * self.truth.beta_at(u), axis=1)
        noise_sd = np.sqrt(self.truth.sigma_at(u))
        epsilon = stream(scenario.seed, RESPONSE_STREAM, which_n).standard_normal(n)
        index = np.indices(shape).reshape(len(shape), -1).T + 1
        dataset = Dataset(
            lattice_sizes=shape,
            intercept=self.truth.intercept,
            index=index,
            u=u,
            x=x,
            y=mean + noise_sd * epsilon,
        )
        design = FrozenDesign(
            which_n=which_n,
            lattice_sizes=shape,
            n_total=n,
            seed=scenario.seed,
            checksum=dataset.design_checksum(),
        )
        logger.debug(f"Generated field which_N={which_n} shape={shape}")
        return GeneratedField(dataset, design, mean, noise_sd)

    def generate_field(self, which_n: int) -> GeneratedField:
        """
        Sample (X, U, y) on lattice n_list[which_n]; identical for identical
        scenario and which_N.
        """
        with self._lock:
            if which_n not in self._fields:
                self._fields[which_n] = self._build_field(which_n)
            return self._fields[which_n]

    # ==================== Conditional Monte Carlo ====================

    def _estimator(self, estimator: EstimatorName, h: float) -> Tuple[LocalLinearEstimator, List[float]]:
        estimator = EstimatorName(estimator)
        if estimator == EstimatorName.GWLE:
            config = FitConfig(
                kernel=self.kernel,
                scales=self.scales,
                bandwidth=h,
                ridge_fallback=self.scenario.ridge_fallback,
            )
            return GWLEEstimator(config), [h] * self.scenario.d
        bandwidths = BandwidthMatrix(
            bandwidths=tuple(h * b for b in self.scenario.factor_values())
        )
        model = MLWEEstimator(
            bandwidths, kernel=self.kernel, ridge_fallback=self.scenario.ridge_fallback
        )
        return model, list(bandwidths.bandwidths)

    def _replica_noise(self, field: GeneratedField, which_n: int, h_index: int) -> np.ndarray:
        n = field.dataset.n_records
        noise = np.empty((self.scenario.replicas, n))
        for r in range(self.scenario.replicas):
            noise[r] = stream(self.scenario.seed, REPLICA_STREAM, which_n, h_index, r).standard_normal(n)
        return noise * field.noise_sd

    def _theory(self, point: np.ndarray, h: float, n_total: int):
        try:
            return (
                theoretical_bias(self.truth, point, h, self.scales, self.kernel).tolist(),
                theoretical_variance(self.truth, point, h, self.scales, self.kernel, n_total).tolist(),
                sandwich_variance(self.truth, point, h, self.scales, self.kernel, n_total).tolist(),
            )
        except NumericalError as e:
            logger.warning(f"No theoretical moments at {tuple(point)}: {e}")
            return None, None, None

    def run_conditional_mc(
        self,
        h: float,
        which_n: int,
        estimator: EstimatorName = EstimatorName.GWLE,
        h_index: int = 0,
    ) -> List[McCell]:
        """
        Conditional bias and variance at every eval point with the design frozen
        and only the noise redrawn across replicas.

        Args:
            h: Nominal bandwidth
            which_n: Index into n_list
            estimator: gwle or mlwe
            h_index: Counter keying the replica noise

        Returns:
            One McCell per eval point; failed points are marked, not raised
        """
        scenario = self.scenario
        field = self.generate_field(which_n)
        dataset = field.dataset
        model, bandwidths = self._estimator(estimator, h)
        replicas = scenario.replicas
        noiseless = not np.any(field.noise_sd > 0.0)
        noise = None if noiseless else self._replica_noise(field, which_n, h_index)

        cells = []
        for j, point in enumerate(scenario.eval_points):
            point = np.asarray(point, dtype=float)
            base = dict(
                estimator=EstimatorName(estimator).value,
                h=h,
                bandwidths=bandwidths,
                h_index=h_index,
                which_n=which_n,
                lattice_sizes=list(field.design.lattice_sizes),
                n_total=field.design.n_total,
                eval_index=j,
                eval_point=point.tolist(),
                replicas=replicas,
                design_checksum=field.design.checksum,
            )
            try:
                smoother = model.smoother(dataset, point)
            except GWLEError as e:
                logger.warning(f"MC cell failed at {tuple(point)} (h={h:.4g}): {e}")
                cells.append(McCell(status="failed", reason=f"{type(e).__name__}: {e}", **base))
                continue

            center = smoother @ field.mean
            p = dataset.p
            if noiseless:
                estimate_mean = center
                variance = np.zeros((p, p))
            else:
                estimates = center + noise @ smoother.T
                estimate_mean = estimates.mean(axis=0)
                variance = None
                if replicas >= 2:
                    variance = np.cov(estimates, rowvar=False, ddof=1).reshape(p, p)
                    variance = 0.5 * (variance + variance.T)

            truth_beta = self.truth.beta(point)
            bias = estimate_mean - truth_beta
            mse = float(bias @ bias + (np.trace(variance) if variance is not None else 0.0))
            theory = (None, None, None)
            if EstimatorName(estimator) == EstimatorName.GWLE:
                theory = self._theory(point, h, field.design.n_total)
            cells.append(
                McCell(
                    truth=truth_beta.tolist(),
                    empirical_bias=bias.tolist(),
                    empirical_variance=None if variance is None else variance.tolist(),
                    theoretical_bias=theory[0],
                    theoretical_variance=theory[1],
                    sandwich_variance=theory[2],
                    mse=mse,
                    **base,
                )
            )
        ok = sum(cell.ok for cell in cells)
        logger.info(
            f"MC cell {EstimatorName(estimator).value} h={h:.4g} N={field.design.n_total}: "
            f"{ok}/{len(cells)} eval points"
        )
        return cells

    # ==================== Sweeps ====================

    def _run_all(self, tasks: List[Tuple[float, int, EstimatorName, int]]) -> List[List[McCell]]:
        for which_n in sorted({task[1] for task in tasks}):
            self.generate_field(which_n)
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(lambda task: self.run_conditional_mc(*task), tasks))

    def simulate(self) -> Tuple[List[McCell], List[ExponentFit]]:
        """Every (estimator, N, h) cell of the scenario plus the fitted exponents."""
        scenario = self.scenario
        if not scenario.h_list:
            raise InvalidParameterError("simulate needs a nonempty h_list")
        tasks = [
            (h, which_n, estimator, h_index)
            for estimator in scenario.estimators
            for which_n in range(len(scenario.n_list))
            for h_index, h in enumerate(scenario.h_list)
        ]
        cells = [cell for batch in self._run_all(tasks) for cell in batch]
        return cells, fit_scaling_exponents(cells)

    def compare_estimators(self) -> Tuple[RatioSeries, List[McCell]]:
        """
        Variance ratio tr Var(GWLE) / tr Var(MLWE) across n_list under the
        scenario's rate regime, with its Spearman trend against N.
        """
        scenario = self.scenario
        if set(scenario.estimators) != {EstimatorName.GWLE, EstimatorName.MLWE}:
            raise InvalidParameterError("compare needs both gwle and mlwe in estimators")
        if len(scenario.n_list) < 3:
            raise InvalidParameterError("compare needs at least 3 lattice sizes")
        d = scenario.d
        rates = scenario.rates
        plan = []
        for which_n, shape in enumerate(scenario.n_list):
            n_total = int(np.prod(shape))
            h_gwle = rates.gwle_constant * n_total ** rates.gwle_rate(d)
            h_mlwe = rates.mlwe_constant * n_total ** rates.mlwe_rate(d)
            for h in (h_gwle, h_mlwe / min(scenario.factor_values())):
                for point in scenario.eval_points:
                    try:
                        scenario.check_interior(point, h)
                    except ValueError as e:
                        logger.warning(f"Comparison bandwidth reaches the boundary: {e}")
            plan.append((which_n, n_total, h_gwle, h_mlwe))

        tasks = []
        for which_n, _, h_gwle, h_mlwe in plan:
            tasks.append((h_gwle, which_n, EstimatorName.GWLE, 0))
            tasks.append((h_mlwe, which_n, EstimatorName.MLWE, 0))
        batches = self._run_all(tasks)

        points = []
        for position, (which_n, n_total, h_gwle, h_mlwe) in enumerate(plan):
            gwle_cells, mlwe_cells = batches[2 * position], batches[2 * position + 1]
            point = RatioPoint(
                which_n=which_n,
                n_total=n_total,
                h_gwle=h_gwle,
                h_mlwe=[h_mlwe * b for b in scenario.factor_values()],
            )
            traces = [
                [_variance_trace(cell) for cell in batch]
                for batch in (gwle_cells, mlwe_cells)
            ]
            if all(cell.ok for cell in gwle_cells + mlwe_cells) and None not in traces[0] + traces[1]:
                point.trace_gwle = float(np.sum(traces[0]))
                point.trace_mlwe = float(np.sum(traces[1]))
                if point.trace_mlwe > 0.0:
                    point.ratio = point.trace_gwle / point.trace_mlwe
            points.append(point)

        series = RatioSeries(points=points)
        defined = [(pt.n_total, pt.ratio) for pt in points if pt.ratio is not None]
        if len(defined) >= 2 and len({ratio for _, ratio in defined}) > 1:
            result = stats.spearmanr([n for n, _ in defined], [r for _, r in defined])
            series.spearman = float(result.correlation)
            series.spearman_pvalue = float(result.pvalue)
        logger.info(f"Compared estimators over {len(points)} sample sizes")
        return series, [cell for batch in batches for cell in batch]

    def imse_grid_search(
        self,
        h_grid: Sequence[float],
        which_n: int = 0,
        estimator: EstimatorName = EstimatorName.GWLE,
    ) -> Tuple[float, List[CvPoint]]:
        """
        Monte Carlo IMSE (mean over eval points of |bias|^2 + tr Var) at each
        grid bandwidth on the frozen design; returns the minimizer and profile.

        Raises:
            InvalidParameterError: If the grid is empty
            NumericalError: If every bandwidth has a failed eval point
        """
        grid = [float(h) for h in h_grid]
        if not grid:
            raise InvalidParameterError("h_grid must be nonempty")
        tasks = [(h, which_n, estimator, h_index) for h_index, h in enumerate(grid)]
        profile = []
        for h, cells in zip(grid, self._run_all(tasks)):
            failed = [cell for cell in cells if not cell.ok]
            if failed:
                profile.append(CvPoint(h=h, failed_points=len(failed), reason=failed[0].reason))
            else:
                profile.append(CvPoint(h=h, score=float(np.mean([cell.mse for cell in cells]))))
        scored = [point for point in profile if point.score is not None]
        if not scored:
            raise NumericalError("Every bandwidth in the IMSE grid failed")
        best = min(scored, key=lambda point: point.score)
        logger.info(f"IMSE grid minimizer h={best.h:.6g}")
        return best.h, profile


# ==================== Module-level operations ====================


def generate_field(scenario: SimulationScenario, which_n: int) -> GeneratedField:
    """Sample the design and responses for n_list[which_n]."""
    return MonteCarloLab(scenario, workers=1).generate_field(which_n)


def run_conditional_mc(
    scenario: SimulationScenario,
    h: float,
    which_n: int,
    estimator: EstimatorName = EstimatorName.GWLE,
) -> List[McCell]:
    """Conditional Monte Carlo cells for one (h, N, estimator)."""
    return MonteCarloLab(scenario, workers=1).run_conditional_mc(h, which_n, estimator)


def compare_estimators(scenario: SimulationScenario, workers: Optional[int] = None) -> RatioSeries:
    """Variance-ratio series of the rate-regime comparison."""
    return MonteCarloLab(scenario, workers=workers).compare_estimators()[0]
