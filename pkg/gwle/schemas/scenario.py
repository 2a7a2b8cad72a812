"""
Pydantic schema for Monte Carlo scenario files.
"""

from enum import Enum
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, field_validator, model_validator

from gwle.schemas.kernel import KernelFamily
from gwle.schemas.truth import TruthSpec


class LocationLaw(str, Enum):
    IID_UNIFORM = "iid_uniform"
    MA_SMOOTHED = "ma_smoothed"


class CovariateLaw(str, Enum):
    IID_GAUSSIAN = "iid_gaussian"
    MA_SMOOTHED = "ma_smoothed"


class EstimatorName(str, Enum):
    GWLE = "gwle"
    MLWE = "mlwe"


class RateRegime(BaseModel):
    """
    Bandwidth rates used when comparing estimators across sample sizes:
    h = C_g N^e_g for GWLE and h_s = C_m N^e_m b_s for MLWE. Exponents
    default to -1/(d+2) and -1/(d+4).
    """

    gwle_constant: float = Field(default=1.0, gt=0)
    mlwe_constant: float = Field(default=1.0, gt=0)
    gwle_exponent: Optional[float] = Field(default=None, lt=0)
    mlwe_exponent: Optional[float] = Field(default=None, lt=0)

    def gwle_rate(self, d: int) -> float:
        return self.gwle_exponent if self.gwle_exponent is not None else -1.0 / (d + 2)

    def mlwe_rate(self, d: int) -> float:
        return self.mlwe_exponent if self.mlwe_exponent is not None else -1.0 / (d + 4)


class SimulationScenario(BaseModel):
    """A complete, seeded Monte Carlo experiment."""

    truth: TruthSpec
    n_list: List[Tuple[int, ...]] = Field(
        ...,
        min_length=1,
        description="Lattice shapes N_1..N_M swept over; which_N indexes this list"
    )
    dependence_range: int = Field(default=0, ge=0, description="m of the m-dependent field")
    location_law: LocationLaw = LocationLaw.IID_UNIFORM
    covariate_law: CovariateLaw = CovariateLaw.IID_GAUSSIAN
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    replicas: int = Field(default=200, ge=1)
    h_list: List[float] = Field(default_factory=list)
    estimators: List[EstimatorName] = Field(default_factory=lambda: [EstimatorName.GWLE])
    kernel: KernelFamily = KernelFamily.GAUSSIAN
    scales: Optional[Tuple[float, ...]] = Field(
        default=None,
        description="GWLE scales a_s, default all ones"
    )
    mlwe_factors: Optional[Tuple[float, ...]] = Field(
        default=None,
        description="MLWE h_s = h * b_s, default b_s = 1 / a_s"
    )
    ridge_fallback: float = Field(default=0.0, ge=0)
    eval_points: List[Tuple[float, ...]] = Field(..., min_length=1)
    rates: RateRegime = Field(default_factory=RateRegime)

    @field_validator("n_list")
    @classmethod
    def validate_lattices(cls, v: List[Tuple[int, ...]]) -> List[Tuple[int, ...]]:
        dims = {len(shape) for shape in v}
        if len(dims) != 1 or 0 in dims:
            raise ValueError("every lattice shape needs the same nonzero number of axes")
        if any(n < 1 for shape in v for n in shape):
            raise ValueError("lattice sizes must be positive")
        return v

    @field_validator("h_list")
    @classmethod
    def validate_h_list(cls, v: List[float]) -> List[float]:
        if any(h <= 0 for h in v):
            raise ValueError("bandwidths must be positive")
        return v

    @model_validator(mode="after")
    def validate_geometry(self) -> "SimulationScenario":
        d = self.truth.dimension
        for name in ("scales", "mlwe_factors"):
            values = getattr(self, name)
            if values is not None and (len(values) != d or any(v <= 0 for v in values)):
                raise ValueError(f"{name} must hold {d} positive values")
        if any(len(point) != d for point in self.eval_points):
            raise ValueError(f"eval points must have length {d}")
        if self.h_list:
            for point in self.eval_points:
                self.check_interior(point, max(self.h_list))
        return self

    @property
    def d(self) -> int:
        return self.truth.dimension

    @property
    def p(self) -> int:
        return self.truth.p

    @property
    def m_dims(self) -> int:
        return len(self.n_list[0])

    def scale_values(self) -> Tuple[float, ...]:
        return self.scales if self.scales is not None else (1.0,) * self.d

    def factor_values(self) -> Tuple[float, ...]:
        if self.mlwe_factors is not None:
            return self.mlwe_factors
        return tuple(1.0 / a for a in self.scale_values())

    def check_interior(self, point: Tuple[float, ...], h: float) -> None:
        """
        Require the neighbourhood {u : |a (u - u0)| <= h} to lie inside the
        support, i.e. a margin of h / a_s on axis s.
        """
        lower, upper = self.truth.density.lower, self.truth.density.upper
        for s, a in enumerate(self.scale_values()):
            margin = h / a
            if point[s] - margin < lower[s] or point[s] + margin > upper[s]:
                raise ValueError(
                    f"eval point {tuple(point)} is within {margin:.4g} of the support "
                    f"boundary on axis {s + 1}"
                )


class FrozenDesign(BaseModel):
    """Identity of the (X, U) sample shared by every replica of a sweep cell."""

    which_n: int
    lattice_sizes: Tuple[int, ...]
    n_total: int
    seed: int
    checksum: str
