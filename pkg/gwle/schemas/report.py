"""
Pydantic schemas for theoretical moments, Monte Carlo cells and reports.
All matrices are nested lists so reports serialize directly to JSON.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class TheoreticalMoments(BaseModel):
    """Limits of the rescaled moment blocks, their block inverse Q and phi = Q11 Q11^T."""

    a11: List[List[float]]
    a12: List[List[float]]
    a21: List[List[float]]
    a22: List[List[float]]
    q: List[List[float]]
    phi: List[List[float]]


class McCell(BaseModel):
    """Conditional Monte Carlo summary for one (estimator, h, N, eval point)."""

    estimator: str
    h: float = Field(..., description="Nominal bandwidth; MLWE uses h * b_s on axis s")
    bandwidths: List[float] = Field(..., description="Per-axis bandwidths actually used")
    h_index: int
    which_n: int
    lattice_sizes: List[int]
    n_total: int
    eval_index: int
    eval_point: List[float]
    status: str = Field(default="ok", description="ok or failed")
    reason: Optional[str] = None
    replicas: int
    design_checksum: str
    truth: Optional[List[float]] = None
    empirical_bias: Optional[List[float]] = None
    empirical_variance: Optional[List[List[float]]] = None
    theoretical_bias: Optional[List[float]] = None
    theoretical_variance: Optional[List[List[float]]] = None
    sandwich_variance: Optional[List[List[float]]] = None
    mse: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class ExponentFit(BaseModel):
    """Least-squares slope of log(quantity) against log(axis)."""

    estimator: str = ""
    quantity: str = Field(default="", description="bias or variance")
    axis: str = Field(default="", description="h or N")
    fixed: Optional[float] = Field(default=None, description="Value held fixed on the other axis")
    slope: float
    intercept: float
    stderr: float
    r_squared: float
    n_points: int


class RatioPoint(BaseModel):
    which_n: int
    n_total: int
    h_gwle: float
    h_mlwe: List[float]
    trace_gwle: Optional[float] = None
    trace_mlwe: Optional[float] = None
    ratio: Optional[float] = Field(default=None, description="None when undefined")


class RatioSeries(BaseModel):
    """tr Var(GWLE) / tr Var(MLWE) across sample sizes, with its rank trend."""

    points: List[RatioPoint]
    spearman: Optional[float] = None
    spearman_pvalue: Optional[float] = None


class MonteCarloReport(BaseModel):
    """Everything a simulate or compare run produces."""

    version: str
    command: str
    generated_at: Optional[str] = None
    seed: int
    replicas: int
    scenario: dict
    cells: List[McCell] = Field(default_factory=list)
    exponents: List[ExponentFit] = Field(default_factory=list)
    variance_ratio_series: Optional[RatioSeries] = None


class CvPoint(BaseModel):
    """Leave-one-out score at one candidate bandwidth."""

    h: float
    score: Optional[float] = None
    failed_points: int = 0
    reason: Optional[str] = None


class BandwidthReport(BaseModel):
    """Output of the bandwidth command."""

    version: str
    method: str
    h: float
    n_total: Optional[int] = None
    profile: List[CvPoint] = Field(default_factory=list)


class MomentsReport(BaseModel):
    """Output of the moments command."""

    version: str
    kernel: str
    dimension: int
    kappa: Dict[str, float] = Field(..., description="lambda -> integral of z^lambda K(z) dz")
    kappa2: float
    kappa_sq_1d: float
    kappa_d: float
    radial: Dict[str, float]
    product_constant: Optional[float] = None
