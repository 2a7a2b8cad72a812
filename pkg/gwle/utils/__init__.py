"""
Utility functions and validators.
"""

from .validators import (
    ValidationError,
    DatasetValidator,
    FloatListValidator,
    GridValidator,
    parse_points,
    validate_dataset,
)

__all__ = [
    "ValidationError",
    "DatasetValidator",
    "FloatListValidator",
    "GridValidator",
    "parse_points",
    "validate_dataset",
]
