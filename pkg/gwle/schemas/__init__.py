"""
Pydantic schemas for datasets, kernels, fits, truth models, scenarios and reports.
"""

from .dataset import Dataset, LatticeIndex, Observation, ValidationReport, Violation
from .fit import ConditionFlag, FitConfig, LocalFit, PointFailure, SurfaceResult
from .kernel import (
    BandwidthMatrix,
    KernelFamily,
    KernelMoments,
    KernelSpec,
    RadialMoments,
    ScaleMatrix,
)
from .report import (
    BandwidthReport,
    CvPoint,
    ExponentFit,
    McCell,
    MomentsReport,
    MonteCarloReport,
    RatioPoint,
    RatioSeries,
    TheoreticalMoments,
)
from .scenario import (
    CovariateLaw,
    EstimatorName,
    FrozenDesign,
    LocationLaw,
    RateRegime,
    SimulationScenario,
)
from .truth import TruthSpec

__all__ = [
    # Dataset schemas
    "Dataset",
    "LatticeIndex",
    "Observation",
    "ValidationReport",
    "Violation",
    # Fit schemas
    "ConditionFlag",
    "FitConfig",
    "LocalFit",
    "PointFailure",
    "SurfaceResult",
    # Kernel schemas
    "BandwidthMatrix",
    "KernelFamily",
    "KernelMoments",
    "KernelSpec",
    "RadialMoments",
    "ScaleMatrix",
    # Report schemas
    "BandwidthReport",
    "CvPoint",
    "ExponentFit",
    "McCell",
    "MomentsReport",
    "MonteCarloReport",
    "RatioPoint",
    "RatioSeries",
    "TheoreticalMoments",
    # Scenario schemas
    "CovariateLaw",
    "EstimatorName",
    "FrozenDesign",
    "LocationLaw",
    "RateRegime",
    "SimulationScenario",
    "TruthSpec",
]
