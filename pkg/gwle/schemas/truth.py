"""
Pydantic schemas for the known data-generating model used in simulation mode.

Scenario files name built-in function families only: polynomial coefficient
functions, constant or quadratic error variance, uniform or product-beta
location density and affine covariate means.
"""

from enum import Enum
from typing import List, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator


class Monomial(BaseModel):
    """coef * prod_s u_s ** powers[s]."""

    coef: float
    powers: Tuple[int, ...] = Field(..., min_length=1)

    @field_validator("powers")
    @classmethod
    def validate_powers(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(power < 0 for power in v):
            raise ValueError("monomial powers must be nonnegative")
        return v


class CoefficientSpec(BaseModel):
    """A coefficient function beta_k(u) as a sum of monomials."""

    terms: List[Monomial] = Field(default_factory=list)


class SigmaFamily(str, Enum):
    CONSTANT = "constant"
    QUADRATIC = "quadratic"


class SigmaSpec(BaseModel):
    """Error variance sigma(u) = level (+ sum_s curvature_s (u_s - center_s)^2)."""

    family: SigmaFamily = SigmaFamily.CONSTANT
    level: float = Field(default=1.0, ge=0)
    curvature: Tuple[float, ...] = ()
    center: Tuple[float, ...] = ()

    @field_validator("curvature")
    @classmethod
    def validate_curvature(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if any(c < 0 for c in v):
            raise ValueError("sigma curvature must be nonnegative")
        return v


class DensityFamily(str, Enum):
    UNIFORM = "uniform"
    PRODUCT_BETA = "product_beta"


class DensitySpec(BaseModel):
    """Location density f(u) on the box [lower, upper]."""

    family: DensityFamily = DensityFamily.UNIFORM
    lower: Tuple[float, ...] = Field(..., min_length=1)
    upper: Tuple[float, ...] = Field(..., min_length=1)
    alpha: Tuple[float, ...] = ()
    beta: Tuple[float, ...] = ()

    @model_validator(mode="after")
    def validate_box(self) -> "DensitySpec":
        if len(self.lower) != len(self.upper):
            raise ValueError("density lower and upper bounds differ in length")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("density bounds need lower < upper on every axis")
        if self.family == DensityFamily.PRODUCT_BETA:
            d = len(self.lower)
            if len(self.alpha) != d or len(self.beta) != d:
                raise ValueError("product_beta needs alpha and beta of length d")
            if any(a <= 0 for a in self.alpha + self.beta):
                raise ValueError("beta shape parameters must be positive")
        return self


class AffineMean(BaseModel):
    """Conditional covariate mean offset + slope . u."""

    offset: float = 0.0
    slope: Tuple[float, ...] = ()


class CovariateSpec(BaseModel):
    """
    Covariates x_k = Gamma_k(u) + noise_scale * z_k with unit-variance z_k;
    column 1 is the constant 1 when intercept is set.
    """

    intercept: bool = True
    means: List[AffineMean] = Field(default_factory=list)
    noise_scale: float = Field(default=1.0, ge=0)


class TruthSpec(BaseModel):
    """Complete known model: beta(u), sigma(u), f(u) and the covariate law."""

    dimension: int = Field(..., ge=1, description="Location dimension d")
    beta: List[CoefficientSpec] = Field(..., min_length=1)
    sigma: SigmaSpec = Field(default_factory=SigmaSpec)
    density: DensitySpec
    covariates: CovariateSpec = Field(default_factory=CovariateSpec)

    @property
    def p(self) -> int:
        return len(self.beta)

    @model_validator(mode="after")
    def validate_dimensions(self) -> "TruthSpec":
        d = self.dimension
        for k, coefficient in enumerate(self.beta, start=1):
            for term in coefficient.terms:
                if len(term.powers) != d:
                    raise ValueError(f"beta{k} has a monomial with {len(term.powers)} powers, d={d}")
        if len(self.density.lower) != d:
            raise ValueError(f"density box has {len(self.density.lower)} axes, d={d}")
        if len(self.sigma.curvature) not in (0, d) or len(self.sigma.center) not in (0, d):
            raise ValueError("sigma curvature and center must be empty or of length d")
        random_count = self.p - (1 if self.covariates.intercept else 0)
        if len(self.covariates.means) != random_count:
            raise ValueError(
                f"covariates declare {len(self.covariates.means)} means, "
                f"{random_count} non-intercept covariates expected"
            )
        for mean in self.covariates.means:
            if len(mean.slope) not in (0, d):
                raise ValueError("covariate mean slope must be empty or of length d")
        if random_count > 0 and self.covariates.noise_scale <= 0:
            raise ValueError("noise_scale must be positive when covariates are random")
        return self
