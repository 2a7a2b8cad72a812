"""
Exception hierarchy shared by services and the command line.
Each error carries the process exit code the CLI reports for it.
"""

from typing import Any, Dict, Optional, Sequence


class GWLEError(Exception):
    """Base class for every error raised deliberately by the toolkit."""

    exit_code = 1

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable form written by --json-errors."""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
        }


# ==================== Validation errors (exit 1) ====================


class DimensionMismatchError(GWLEError, ValueError):
    """Vector or matrix shapes disagree with the declared dimensions."""


class InvalidParameterError(GWLEError, ValueError):
    """A parameter lies outside its admissible range."""


class DatasetFormatError(GWLEError, ValueError):
    """A dataset file cannot be parsed into the documented schema."""


class CommandLineError(GWLEError):
    """Bad command-line usage; the message includes the usage text."""


# ==================== Numerical errors (exit 2) ====================


def _format_point(u0: Optional[Sequence[float]]) -> str:
    if u0 is None:
        return "?"
    return "(" + ", ".join(f"{float(v):.6g}" for v in u0) + ")"


class NumericalError(GWLEError):
    """A computation could not produce a trustworthy number."""

    exit_code = 2


class SingularFitError(NumericalError):
    """The local weighted system is singular and no ridge fallback is configured."""

    def __init__(self, u0: Optional[Sequence[float]], condition: float):
        self.u0 = None if u0 is None else tuple(float(v) for v in u0)
        self.condition = float(condition)
        super().__init__(
            f"Singular local system at u0={_format_point(u0)} "
            f"(condition estimate {self.condition:.3e}); set a positive ridge fallback"
        )

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload.update({"u0": self.u0, "condition": self.condition})
        return payload


class InsufficientSupportError(NumericalError):
    """Too few observations carry positive weight around the target location."""

    def __init__(
        self,
        u0: Optional[Sequence[float]],
        effective_n: float,
        positive_count: int,
        required: int,
    ):
        self.u0 = None if u0 is None else tuple(float(v) for v in u0)
        self.effective_n = float(effective_n)
        self.positive_count = int(positive_count)
        self.required = int(required)
        super().__init__(
            f"Insufficient support at u0={_format_point(u0)}: "
            f"effective_n={self.effective_n:.6g}, {self.positive_count} weighted "
            f"observations, {self.required} required"
        )

    def to_dict(self) -> Dict[str, Any]:
        payload = super().to_dict()
        payload.update(
            {
                "u0": self.u0,
                "effective_n": self.effective_n,
                "positive_count": self.positive_count,
                "required": self.required,
            }
        )
        return payload


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge, which signals a malformed kernel."""


class NoFiniteOptimumError(NumericalError):
    """The bandwidth objective has no interior minimizer."""


class AllBandwidthsFailedError(NumericalError):
    """Every candidate bandwidth produced a failed fit."""
