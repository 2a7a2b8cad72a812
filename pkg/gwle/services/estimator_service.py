"""
Geographically weighted local linear estimation.

The local system at u0 is the weighted least squares problem on the augmented
design (x, (u - u0) (x) x). It is solved in the bandwidth-rescaled form: slope
columns are divided by h before the Gram matrix is formed, the Gram matrix is
Jacobi-equilibrated, and the equilibrated system is solved with a
rank-revealing QR (LAPACK gelsy). The solution is mapped back to the
unscaled coefficients, so the estimate equals the direct normal-equation
solve whenever the system is well posed.
"""

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from gwle.core.config import settings
from gwle.core.exceptions import (
    DimensionMismatchError,
    GWLEError,
    InsufficientSupportError,
    InvalidParameterError,
    SingularFitError,
)
from gwle.core.kernels import distance_weights
from gwle.schemas.dataset import Dataset
from gwle.schemas.fit import ConditionFlag, FitConfig, LocalFit, PointFailure, SurfaceResult
from gwle.schemas.kernel import KernelSpec

logger = logging.getLogger(__name__)


def build_augmented_row(x: Sequence[float], u: Sequence[float], u0: Sequence[float]) -> np.ndarray:
    """
    Augmented row (x, (u_1 - u0_1) x, ..., (u_d - u0_d) x) of length (d+1)p.

    Raises:
        DimensionMismatchError: If u and u0 differ in length
    """
    x = np.asarray(x, dtype=float).ravel()
    u = np.asarray(u, dtype=float).ravel()
    u0 = np.asarray(u0, dtype=float).ravel()
    if u.size != u0.size:
        raise DimensionMismatchError(f"u has length {u.size} but u0 has length {u0.size}")
    return np.concatenate([x] + [delta * x for delta in (u - u0)])


def build_augmented_design(x: np.ndarray, u: np.ndarray, u0: Sequence[float]) -> np.ndarray:
    """Row-stacked augmented rows for x (n, p) and u (n, d)."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    u0 = np.asarray(u0, dtype=float).ravel()
    if u.ndim != 2 or u.shape[1] != u0.size or x.shape[0] != u.shape[0]:
        raise DimensionMismatchError(
            f"design needs u of shape (n, {u0.size}) aligned with x"
        )
    delta = u - u0
    return np.hstack([x] + [delta[:, [s]] * x for s in range(u0.size)])


def _equilibrate(gram: np.ndarray) -> Tuple[np.ndarray, np.ndarray, float]:
    diagonal = np.diag(gram).copy()
    diagonal[diagonal <= 0.0] = 1.0
    jacobi = 1.0 / np.sqrt(diagonal)
    balanced = gram * jacobi[:, None] * jacobi[None, :]
    condition = float(np.linalg.cond(balanced))
    if not np.isfinite(condition):
        condition = float("inf")
    return balanced, jacobi, condition


class LocalOperator(NamedTuple):
    """Linear map from the supported responses to the local coefficients."""

    u0: np.ndarray
    support: np.ndarray
    operator: np.ndarray
    effective_n: float
    condition: float
    condition_flag: ConditionFlag


class LocalLinearEstimator(ABC):
    """
    Weighted local linear least squares shared by the distance-kernel and
    product-kernel estimators. Subclasses supply the weights and the bandwidth
    used for the slope-column rescaling.
    """

    name = "local_linear"

    def __init__(
        self,
        kernel: KernelSpec,
        ridge_fallback: float = 0.0,
        min_effective_neighbors: Optional[int] = None,
        condition_threshold: Optional[float] = None,
    ):
        """
        Initialize the estimator.

        Args:
            kernel: Kernel family
            ridge_fallback: Ridge factor for degenerate systems, 0 disables it
            min_effective_neighbors: Support threshold, default (d+1)p
            condition_threshold: Condition estimate above which a system is degenerate
        """
        if ridge_fallback < 0.0:
            raise InvalidParameterError("ridge_fallback must be nonnegative")
        self.kernel = kernel
        self.ridge_fallback = float(ridge_fallback)
        self.min_effective_neighbors = min_effective_neighbors
        self.condition_threshold = (
            settings.CONDITION_THRESHOLD if condition_threshold is None else condition_threshold
        )

    @property
    @abstractmethod
    def dimension(self) -> int:
        """Number of location coordinates d."""

    @property
    @abstractmethod
    def rescale_bandwidth(self) -> float:
        """Bandwidth dividing the slope columns."""

    @abstractmethod
    def weights(self, points: np.ndarray, u0: np.ndarray) -> np.ndarray:
        """Kernel weight of every row of points relative to u0."""

    def required_support(self, d: int, p: int) -> int:
        if self.min_effective_neighbors is not None:
            return self.min_effective_neighbors
        return (d + 1) * p

    def _check_location(self, dataset: Dataset, u0: Sequence[float]) -> np.ndarray:
        u0 = np.asarray(u0, dtype=float).ravel()
        if dataset.d != self.dimension or u0.size != dataset.d:
            raise DimensionMismatchError(
                f"dataset has d={dataset.d}, estimator d={self.dimension}, u0 length {u0.size}"
            )
        if not np.all(np.isfinite(u0)):
            raise InvalidParameterError("target location must be finite")
        return u0

    def local_operator(
        self,
        dataset: Dataset,
        u0: Sequence[float],
        exclude: Optional[int] = None,
    ) -> LocalOperator:
        """
        Factor the local system at u0.

        Args:
            dataset: Sample
            u0: Target location
            exclude: Record position given zero weight (leave-one-out)

        Returns:
            LocalOperator whose operator (q, n_support) maps y[support] to theta

        Raises:
            InsufficientSupportError: No positive weights, or too few without a ridge
            SingularFitError: Ill-conditioned system without a ridge
        """
        u0 = self._check_location(dataset, u0)
        d, p = dataset.d, dataset.p
        weights = self.weights(dataset.u, u0)
        if exclude is not None:
            weights[exclude] = 0.0
        support = np.flatnonzero(weights > 0.0)
        required = self.required_support(d, p)
        if support.size == 0:
            raise InsufficientSupportError(u0, 0.0, 0, required)

        w = weights[support]
        effective_n = float(w.sum() ** 2 / np.dot(w, w))
        design = build_augmented_design(dataset.x[support], dataset.u[support], u0)
        rescale = np.concatenate([np.ones(p), np.full(d * p, 1.0 / self.rescale_bandwidth)])
        scaled = design * rescale
        weighted = scaled * w[:, None]
        gram = scaled.T @ weighted
        balanced, jacobi, condition = _equilibrate(gram)

        flag = ConditionFlag.WELL_POSED
        insufficient = support.size < required
        if insufficient or condition > self.condition_threshold:
            if self.ridge_fallback <= 0.0:
                if insufficient:
                    raise InsufficientSupportError(u0, effective_n, support.size, required)
                raise SingularFitError(u0, condition)
            penalty = self.ridge_fallback * float(np.mean(np.diag(gram)))
            gram[p:, p:] += penalty * np.eye(d * p)
            balanced, jacobi, condition = _equilibrate(gram)
            flag = ConditionFlag.RIDGE_APPLIED
            logger.warning(
                f"Ridge fallback engaged at u0={tuple(u0)}: {support.size} weighted "
                f"observations, condition {condition:.3e}"
            )

        rhs = (weighted * jacobi).T
        solution = linalg.lstsq(balanced, rhs, lapack_driver="gelsy")[0]
        operator = solution * (jacobi * rescale)[:, None]
        return LocalOperator(u0, support, operator, effective_n, condition, flag)

    def fit_local(
        self,
        dataset: Dataset,
        u0: Sequence[float],
        exclude: Optional[int] = None,
    ) -> LocalFit:
        """
        Local linear estimate at u0.

        Args:
            dataset: Sample
            u0: Target location
            exclude: Record position left out of the fit

        Returns:
            LocalFit with beta_hat, the slope block and diagnostics
        """
        local = self.local_operator(dataset, u0, exclude=exclude)
        theta = local.operator @ dataset.y[local.support]
        p, d = dataset.p, dataset.d
        return LocalFit(
            u0=tuple(float(v) for v in local.u0),
            beta_hat=theta[:p],
            gradient_hat=theta[p:].reshape(d, p),
            effective_n=local.effective_n,
            positive_weights=int(local.support.size),
            condition=local.condition,
            condition_flag=local.condition_flag,
        )

    def smoother(self, dataset: Dataset, u0: Sequence[float]) -> np.ndarray:
        """
        The (p, n) matrix L with beta_hat(u0) = L y for every response on this design.
        """
        local = self.local_operator(dataset, u0)
        full = np.zeros((dataset.p, dataset.n_records))
        full[:, local.support] = local.operator[: dataset.p]
        return full

    def fit_surface(
        self,
        dataset: Dataset,
        targets: Sequence[Sequence[float]],
        workers: Optional[int] = None,
    ) -> SurfaceResult:
        """
        Fit every target; failures are recorded per target instead of aborting.

        Args:
            dataset: Sample
            targets: Nonempty list of locations
            workers: Thread cap, default from settings

        Returns:
            SurfaceResult in target order
        """
        targets = [tuple(float(v) for v in np.ravel(t)) for t in targets]
        if not targets:
            raise InvalidParameterError("targets must be nonempty")

        def fit_one(item: Tuple[int, Tuple[float, ...]]):
            position, u0 = item
            try:
                return self.fit_local(dataset, u0), None
            except GWLEError as e:
                logger.debug(f"Target {position} failed: {e}")
                return None, PointFailure(
                    index=position, u0=u0, error=type(e).__name__, message=str(e)
                )

        with ThreadPoolExecutor(max_workers=settings.worker_count(workers)) as pool:
            outcomes = list(pool.map(fit_one, enumerate(targets)))

        fits = [fit for fit, _ in outcomes]
        failures = [failure for _, failure in outcomes if failure is not None]
        if failures:
            logger.warning(f"{len(failures)} of {len(targets)} targets failed")
        logger.info(f"Fitted {self.name} surface at {len(targets) - len(failures)} targets")
        return SurfaceResult(fits=fits, failures=failures)


class GWLEEstimator(LocalLinearEstimator):
    """Local linear estimator with distance-kernel weights K(d(u, u0)/h)/h."""

    name = "gwle"

    def __init__(self, config: FitConfig, condition_threshold: Optional[float] = None):
        super().__init__(
            kernel=config.kernel,
            ridge_fallback=config.ridge_fallback,
            min_effective_neighbors=config.min_effective_neighbors,
            condition_threshold=condition_threshold,
        )
        self.config = config

    @property
    def dimension(self) -> int:
        return self.config.scales.d

    @property
    def rescale_bandwidth(self) -> float:
        return self.config.bandwidth

    def weights(self, points: np.ndarray, u0: np.ndarray) -> np.ndarray:
        return distance_weights(
            points, u0, self.config.bandwidth, self.config.scales, self.config.kernel
        )


# ==================== Module-level operations ====================


def fit_local(dataset: Dataset, u0: Sequence[float], config: FitConfig) -> LocalFit:
    """Distance-kernel local linear fit at u0."""
    return GWLEEstimator(config).fit_local(dataset, u0)


def fit_surface(
    dataset: Dataset,
    targets: Sequence[Sequence[float]],
    config: FitConfig,
    workers: Optional[int] = None,
) -> SurfaceResult:
    """Distance-kernel fits at every target, in target order."""
    return GWLEEstimator(config).fit_surface(dataset, targets, workers=workers)


def smoother_matrix(dataset: Dataset, u0: Sequence[float], config: FitConfig) -> np.ndarray:
    """The (p, n) linear smoother of the distance-kernel fit at u0."""
    return GWLEEstimator(config).smoother(dataset, u0)


def fit_local_direct(dataset: Dataset, u0: Sequence[float], config: FitConfig) -> np.ndarray:
    """
    beta_hat from the unscaled normal equations (X~' W X~)^-1 X~' W y.

    Kept as an independent reference for the rescaled solver.
    """
    u0 = np.asarray(u0, dtype=float).ravel()
    weights = distance_weights(dataset.u, u0, config.bandwidth, config.scales, config.kernel)
    design = build_augmented_design(dataset.x, dataset.u, u0)
    gram = design.T @ (design * weights[:, None])
    moment = design.T @ (weights * dataset.y)
    return np.linalg.solve(gram, moment)[: dataset.p]


def predict(fit: LocalFit, x: Sequence[float]) -> float:
    """
    Fitted mean x . beta_hat at the fit's location.

    Raises:
        DimensionMismatchError: If x does not have length p
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size != fit.beta_hat.size:
        raise DimensionMismatchError(
            f"x has length {x.size}, fit has p={fit.beta_hat.size}"
        )
    return float(np.dot(x, fit.beta_hat))


def surface_rows(result: SurfaceResult, targets: Sequence[Sequence[float]], d: int, p: int) -> List[dict]:
    """Flatten a surface into rows u1..ud, beta1..betap, grad_s_k, effective_n, flag."""
    rows = []
    failures = {failure.index: failure for failure in result.failures}
    for position, u0 in enumerate(targets):
        row = {f"u{s + 1}": float(u0[s]) for s in range(d)}
        fit = result.fits[position]
        for k in range(p):
            row[f"beta{k + 1}"] = float(fit.beta_hat[k]) if fit is not None else float("nan")
        for s in range(d):
            for k in range(p):
                value = float(fit.gradient_hat[s, k]) if fit is not None else float("nan")
                row[f"grad_{s + 1}_{k + 1}"] = value
        row["effective_n"] = fit.effective_n if fit is not None else float("nan")
        row["flag"] = (
            fit.condition_flag.value if fit is not None else f"failed:{failures[position].error}"
        )
        rows.append(row)
    return rows
