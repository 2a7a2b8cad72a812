"""
Product-kernel local linear estimator with a diagonal bandwidth matrix.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from gwle.core.kernels import product_weights
from gwle.schemas.dataset import Dataset
from gwle.schemas.fit import LocalFit
from gwle.schemas.kernel import BandwidthMatrix, KernelSpec
from gwle.services.estimator_service import LocalLinearEstimator

logger = logging.getLogger(__name__)


class MLWEEstimator(LocalLinearEstimator):
    """
    Local linear estimator weighted by prod_s K((u_s - u0_s)/h_s)/h_s.

    Same augmented design, ridge policy and solver as the distance-kernel
    estimator; slope columns are rescaled by the geometric mean |H|^(1/d).
    """

    name = "mlwe"

    def __init__(
        self,
        bandwidths: BandwidthMatrix,
        kernel: Optional[KernelSpec] = None,
        ridge_fallback: float = 0.0,
        min_effective_neighbors: Optional[int] = None,
        condition_threshold: Optional[float] = None,
    ):
        super().__init__(
            kernel=kernel or KernelSpec(),
            ridge_fallback=ridge_fallback,
            min_effective_neighbors=min_effective_neighbors,
            condition_threshold=condition_threshold,
        )
        self.bandwidths = bandwidths

    @property
    def dimension(self) -> int:
        return self.bandwidths.d

    @property
    def rescale_bandwidth(self) -> float:
        return self.bandwidths.geometric_mean

    def weights(self, points: np.ndarray, u0: np.ndarray) -> np.ndarray:
        return product_weights(points, u0, self.bandwidths, self.kernel)


def mlwe_fit_local(
    dataset: Dataset,
    u0: Sequence[float],
    bandwidths: BandwidthMatrix,
    kernel: Optional[KernelSpec] = None,
    ridge_fallback: float = 0.0,
) -> LocalFit:
    """Product-kernel local linear fit at u0."""
    estimator = MLWEEstimator(bandwidths, kernel=kernel, ridge_fallback=ridge_fallback)
    return estimator.fit_local(dataset, u0)
