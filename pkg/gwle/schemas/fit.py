"""
Pydantic schemas for local fit configuration and results.
"""

from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from gwle.schemas.kernel import KernelSpec, ScaleMatrix


class ConditionFlag(str, Enum):
    """How the local system was solved."""

    WELL_POSED = "well_posed"
    RIDGE_APPLIED = "ridge_applied"


class FitConfig(BaseModel):
    """Kernel, scales and bandwidth of a distance-kernel local linear fit."""

    model_config = ConfigDict(frozen=True)

    kernel: KernelSpec = Field(default_factory=KernelSpec)
    scales: ScaleMatrix
    bandwidth: float = Field(..., gt=0, description="Bandwidth h")
    ridge_fallback: float = Field(default=0.0, ge=0, description="Slope-block ridge factor")
    min_effective_neighbors: Optional[int] = Field(
        default=None,
        ge=1,
        description="Minimum count of positively weighted observations, default (d+1)p"
    )

    def with_bandwidth(self, bandwidth: float) -> "FitConfig":
        return FitConfig(
            kernel=self.kernel,
            scales=self.scales,
            bandwidth=bandwidth,
            ridge_fallback=self.ridge_fallback,
            min_effective_neighbors=self.min_effective_neighbors,
        )


class LocalFit(BaseModel):
    """
    Local linear estimate at u0: beta_hat (p,), slope block gradient_hat (d, p)
    whose row s estimates d beta / d u_s, and solve diagnostics.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    u0: Tuple[float, ...]
    beta_hat: np.ndarray
    gradient_hat: np.ndarray
    effective_n: float = Field(..., description="Kish effective sample size of the weights")
    positive_weights: int = Field(..., ge=0)
    condition: float = Field(..., description="Condition number of the equilibrated system")
    condition_flag: ConditionFlag = ConditionFlag.WELL_POSED


class PointFailure(BaseModel):
    """A target location whose fit raised, tagged by its position in the target list."""

    index: int
    u0: Tuple[float, ...]
    error: str
    message: str


class SurfaceResult(BaseModel):
    """Fits over a list of targets; fits[i] is None exactly when target i failed."""

    fits: List[Optional[LocalFit]]
    failures: List[PointFailure] = Field(default_factory=list)

    @property
    def succeeded(self) -> List[LocalFit]:
        return [fit for fit in self.fits if fit is not None]
