"""
Distance function with scale parameters, kernel weights and kernel moments.

Moments are computed by adaptive quadrature (QUADPACK through scipy) over the
exact support of compact kernels and over [-R, R] for the gaussian, where the
tail mass beyond R = 9 is below 1e-18.
"""

import logging
import math
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from gwle.core.config import settings
from gwle.core.exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    QuadratureError,
)
from gwle.schemas.kernel import (
    BandwidthMatrix,
    KernelFamily,
    KernelMoments,
    KernelSpec,
    RadialMoments,
    ScaleMatrix,
)

logger = logging.getLogger(__name__)


def distance(u1: Sequence[float], u2: Sequence[float], scales: ScaleMatrix) -> float:
    """
    Scaled distance sqrt(sum_s (a_s * (u1_s - u2_s))^2).

    Args:
        u1: First location
        u2: Second location
        scales: Scale parameters a_1..a_d

    Returns:
        Nonnegative distance

    Raises:
        DimensionMismatchError: If the locations and scales disagree in length
    """
    u1 = np.asarray(u1, dtype=float).ravel()
    u2 = np.asarray(u2, dtype=float).ravel()
    if u1.shape != u2.shape or u1.size != scales.d:
        raise DimensionMismatchError(
            f"distance needs two locations of length {scales.d}, "
            f"got {u1.size} and {u2.size}"
        )
    return float(np.sqrt(np.sum((scales.array * (u1 - u2)) ** 2)))


def scaled_distances(points: np.ndarray, u0: Sequence[float], scales: ScaleMatrix) -> np.ndarray:
    """Vectorized distance from every row of points to u0."""
    points = np.asarray(points, dtype=float)
    u0 = np.asarray(u0, dtype=float).ravel()
    if points.ndim != 2 or points.shape[1] != scales.d or u0.size != scales.d:
        raise DimensionMismatchError(
            f"expected points of shape (n, {scales.d}) and u0 of length {scales.d}"
        )
    return np.sqrt(np.sum((scales.array * (points - u0)) ** 2, axis=1))


def kernel_weight(dist, h: float, kernel: KernelSpec):
    """
    K(dist / h) / h.

    Args:
        dist: Nonnegative distance (scalar or array)
        h: Bandwidth
        kernel: Kernel family

    Returns:
        Weight with the shape of dist

    Raises:
        InvalidParameterError: If h is not positive or a distance is negative
    """
    if not (h > 0.0 and math.isfinite(h)):
        raise InvalidParameterError(f"bandwidth must be positive and finite, got {h}")
    dist_arr = np.asarray(dist, dtype=float)
    if np.any(dist_arr < 0.0):
        raise InvalidParameterError("distances must be nonnegative")
    weight = kernel.evaluate(dist_arr / h) / h
    if np.ndim(dist) == 0:
        return float(weight)
    return weight


def distance_weights(
    points: np.ndarray,
    u0: Sequence[float],
    h: float,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    floor: Optional[float] = None,
) -> np.ndarray:
    """Distance-kernel weights K_h(d(u_i, u0)/h) with values below the floor set to 0."""
    weights = kernel_weight(scaled_distances(points, u0, scales), h, kernel)
    floor = settings.WEIGHT_FLOOR if floor is None else floor
    weights[weights < floor] = 0.0
    return weights


def product_weights(
    points: np.ndarray,
    u0: Sequence[float],
    bandwidths: BandwidthMatrix,
    kernel: KernelSpec,
    floor: Optional[float] = None,
) -> np.ndarray:
    """Product-kernel weights prod_s K((u_is - u0_s)/h_s)/h_s."""
    points = np.asarray(points, dtype=float)
    u0 = np.asarray(u0, dtype=float).ravel()
    if points.ndim != 2 or points.shape[1] != bandwidths.d or u0.size != bandwidths.d:
        raise DimensionMismatchError(
            f"expected points of shape (n, {bandwidths.d}) and u0 of length {bandwidths.d}"
        )
    h = bandwidths.array
    factors = kernel.evaluate((points - u0) / h) / h
    weights = np.prod(factors, axis=1)
    floor = settings.WEIGHT_FLOOR if floor is None else floor
    weights[weights < floor] = 0.0
    return weights


# ==================== Quadrature ====================


def _integrate(func: Callable[[float], float], lower: float, upper: float, quantity: str) -> float:
    result = integrate.quad(
        func,
        lower,
        upper,
        epsabs=settings.QUADRATURE_EPSABS,
        epsrel=settings.QUADRATURE_EPSREL,
        limit=settings.QUADRATURE_LIMIT,
        full_output=1,
    )
    value, abserr = result[0], result[1]
    if len(result) > 3:
        raise QuadratureError(f"Quadrature for {quantity} did not converge: {result[3]}")
    if not math.isfinite(value) or abserr > 100.0 * settings.QUADRATURE_EPSABS + 1e-10 * abs(value):
        raise QuadratureError(
            f"Quadrature for {quantity} is unreliable (value {value}, error {abserr:.3e})"
        )
    return float(value)


def _radius(kernel: KernelSpec) -> float:
    support = kernel.support
    return settings.GAUSSIAN_RADIUS if support is None else support


@lru_cache(maxsize=None)
def _one_dimensional_moments(kernel: KernelSpec) -> Tuple[Tuple[float, ...], float]:
    radius = _radius(kernel)
    profile = lambda z: float(kernel.evaluate(z))
    kappas = tuple(
        _integrate(lambda z, lam=lam: z ** lam * profile(z), -radius, radius, f"kappa_{lam}")
        for lam in range(5)
    )
    kappa_sq = _integrate(lambda z: profile(z) ** 2, -radius, radius, "integral of K^2")
    return kappas, kappa_sq


def kernel_moments(kernel: KernelSpec, dimension: int = 1) -> KernelMoments:
    """
    Kernel moment constants by numerical quadrature.

    Args:
        kernel: Kernel family
        dimension: d used for kappa_d = (integral of K^2)^d

    Returns:
        KernelMoments with kappa_0..kappa_4, the 1-D integral of K^2 and kappa_d

    Raises:
        QuadratureError: If any integral fails to converge
    """
    if dimension < 1:
        raise InvalidParameterError(f"dimension must be at least 1, got {dimension}")
    try:
        kappas, kappa_sq = _one_dimensional_moments(kernel)
    except QuadratureError:
        raise
    except Exception as e:
        logger.error(f"Failed to integrate kernel moments for {kernel.family.value}: {e}")
        raise
    return KernelMoments(
        family=kernel.family,
        dimension=dimension,
        kappa_lambda={lam: value for lam, value in enumerate(kappas)},
        kappa_sq_1d=kappa_sq,
        kappa_d=kappa_sq ** dimension,
    )


@lru_cache(maxsize=None)
def _radial_moments(kernel: KernelSpec, dimension: int) -> RadialMoments:
    radius = _radius(kernel)
    sphere = 2.0 * math.pi ** (dimension / 2.0) / special.gamma(dimension / 2.0)
    profile = lambda r: float(kernel.evaluate(r))
    d = dimension
    mass = sphere * _integrate(lambda r: profile(r) * r ** (d - 1), 0.0, radius, "radial mass")
    mu2 = sphere / d * _integrate(lambda r: profile(r) * r ** (d + 1), 0.0, radius, "radial mu2")
    nu0 = sphere * _integrate(lambda r: profile(r) ** 2 * r ** (d - 1), 0.0, radius, "radial nu0")
    nu2 = sphere / d * _integrate(
        lambda r: profile(r) ** 2 * r ** (d + 1), 0.0, radius, "radial nu2"
    )
    return RadialMoments(
        family=kernel.family,
        dimension=d,
        mass=mass,
        mu2=mu2 / mass,
        nu0=nu0 / mass ** 2,
        nu2=nu2 / mass ** 2,
    )


def radial_moments(kernel: KernelSpec, dimension: int) -> RadialMoments:
    """
    Moments of the unit-mass radial kernel K(|v|) / m_d in dimension d.

    These are the constants that govern the distance-kernel estimator; for the
    gaussian they coincide with kappa_2 and (integral of K^2)^d.
    """
    if dimension < 1:
        raise InvalidParameterError(f"dimension must be at least 1, got {dimension}")
    return _radial_moments(kernel, dimension)


def product_constant(kernel: KernelSpec, dimension: int) -> float:
    """
    Constant c with K(|v|) = c * prod_r K(v_r) for every v in R^d.

    Raises:
        InvalidParameterError: For families without the product identity
    """
    if kernel.family != KernelFamily.GAUSSIAN:
        raise InvalidParameterError(
            f"{kernel.family.value} kernel does not factorize over coordinates"
        )
    return (2.0 * math.pi) ** ((dimension - 1) / 2.0)
