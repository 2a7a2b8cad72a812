"""
Pydantic schemas for kernels, scale parameters and bandwidth matrices.
"""

import math
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class KernelFamily(str, Enum):
    """Supported one-dimensional kernel profiles."""

    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"
    QUARTIC = "quartic"


class KernelSpec(BaseModel):
    """
    A kernel family. Each 1-D profile is symmetric, bounded and integrates to 1.
    """

    model_config = ConfigDict(frozen=True)

    family: KernelFamily = Field(
        default=KernelFamily.GAUSSIAN,
        description="Kernel profile name"
    )

    @property
    def support(self) -> Optional[float]:
        """Half-width of the compact support, None for the gaussian."""
        if self.family == KernelFamily.GAUSSIAN:
            return None
        return 1.0

    def evaluate(self, z):
        """
        Evaluate the 1-D profile K(z).

        Args:
            z: Scalar or array of arguments

        Returns:
            K(z) with the same shape as z
        """
        z = np.asarray(z, dtype=float)
        if self.family == KernelFamily.GAUSSIAN:
            return np.exp(-0.5 * z * z) / _SQRT_2PI
        inside = np.abs(z) <= 1.0
        one_minus = 1.0 - z * z
        if self.family == KernelFamily.EPANECHNIKOV:
            return np.where(inside, 0.75 * one_minus, 0.0)
        return np.where(inside, 0.9375 * one_minus * one_minus, 0.0)


class KernelMoments(BaseModel):
    """Moment constants of a 1-D kernel, computed by quadrature."""

    family: KernelFamily
    dimension: int = Field(..., ge=1)
    kappa_lambda: Dict[int, float] = Field(
        ...,
        description="lambda -> integral of z^lambda K(z) dz, lambda = 0..4"
    )
    kappa_sq_1d: float = Field(..., description="Integral of K(z)^2 dz")
    kappa_d: float = Field(..., description="kappa_sq_1d ** dimension")

    @property
    def kappa2(self) -> float:
        return self.kappa_lambda[2]


class RadialMoments(BaseModel):
    """
    Moments of the d-dimensional radial kernel K(|v|) rescaled to unit mass.
    """

    family: KernelFamily
    dimension: int = Field(..., ge=1)
    mass: float = Field(..., gt=0, description="Integral of K(|v|) dv before rescaling")
    mu2: float = Field(..., description="Integral of v_1^2 K dv")
    nu0: float = Field(..., description="Integral of K^2 dv")
    nu2: float = Field(..., description="Integral of v_1^2 K^2 dv")

    def marginal_moment(self, order: int) -> float:
        """Integral of v_s^order K dv for order 0..3."""
        return {0: 1.0, 1: 0.0, 2: self.mu2, 3: 0.0}[order]

    def squared_moment(self, order: int) -> float:
        """Integral of v_s^order K^2 dv for order 0..2."""
        return {0: self.nu0, 1: 0.0, 2: self.nu2}[order]


def _check_positive(values: Sequence[float], label: str) -> Tuple[float, ...]:
    values = tuple(float(v) for v in values)
    if not values:
        raise ValueError(f"{label} must not be empty")
    for v in values:
        if not math.isfinite(v) or v <= 0.0:
            raise ValueError(f"{label} must be finite and strictly positive, got {v}")
    return values


class ScaleMatrix(BaseModel):
    """
    Diagonal scale parameters a_1..a_d.

    Distances are sqrt(sum((a_s * du_s)^2)): each a_s is a linear scale on
    its axis. Use from_quadratic_form to build scales from the diagonal of a
    quadratic form du Lambda du^T.
    """

    model_config = ConfigDict(frozen=True)

    scales: Tuple[float, ...] = Field(..., description="Strictly positive a_s")

    @field_validator("scales", mode="before")
    @classmethod
    def validate_scales(cls, v):
        return _check_positive(v, "scales")

    @classmethod
    def identity(cls, d: int) -> "ScaleMatrix":
        return cls(scales=(1.0,) * d)

    @classmethod
    def from_quadratic_form(cls, diagonal: Sequence[float]) -> "ScaleMatrix":
        """
        Build linear scales from the diagonal of a quadratic-form metric.

        Args:
            diagonal: Entries lambda_s of du Lambda du^T

        Returns:
            ScaleMatrix with a_s = sqrt(lambda_s)
        """
        diagonal = _check_positive(diagonal, "quadratic form diagonal")
        return cls(scales=tuple(math.sqrt(v) for v in diagonal))

    @property
    def d(self) -> int:
        return len(self.scales)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.scales, dtype=float)

    @property
    def det(self) -> float:
        return float(np.prod(self.array))

    def scaled(self, factor: float) -> "ScaleMatrix":
        """Multiply every scale by a common positive factor."""
        return ScaleMatrix(scales=tuple(factor * a for a in self.scales))


class BandwidthMatrix(BaseModel):
    """Diagonal bandwidth matrix H = diag(h_1..h_d) of the product-kernel estimator."""

    model_config = ConfigDict(frozen=True)

    bandwidths: Tuple[float, ...] = Field(..., description="Strictly positive h_s")

    @field_validator("bandwidths", mode="before")
    @classmethod
    def validate_bandwidths(cls, v):
        return _check_positive(v, "bandwidths")

    @classmethod
    def matching(cls, h: float, scales: ScaleMatrix) -> "BandwidthMatrix":
        """h_s = h / a_s, the configuration whose gaussian weights match GWLE."""
        return cls(bandwidths=tuple(h / a for a in scales.scales))

    @property
    def d(self) -> int:
        return len(self.bandwidths)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.bandwidths, dtype=float)

    @property
    def det(self) -> float:
        return float(np.prod(self.array))

    @property
    def geometric_mean(self) -> float:
        return float(self.det ** (1.0 / self.d))
