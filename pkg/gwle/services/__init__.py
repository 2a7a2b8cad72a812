"""
Service layer: estimators, asymptotics, bandwidth selection and simulation.
"""

from .estimator_service import GWLEEstimator, LocalLinearEstimator
from .mlwe_service import MLWEEstimator
from .simulation_service import MonteCarloLab
from .truth_model import TruthModel

__all__ = [
    "GWLEEstimator",
    "LocalLinearEstimator",
    "MLWEEstimator",
    "MonteCarloLab",
    "TruthModel",
]
