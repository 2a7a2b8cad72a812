"""
Validation utilities for datasets and command-line values.
"""

import logging
import math
import re
from typing import List, Optional, Sequence

import numpy as np

from gwle.core.exceptions import GWLEError
from gwle.schemas.dataset import Dataset, ValidationReport, Violation

logger = logging.getLogger(__name__)

# Lattices whose longest side exceeds this multiple of the shortest are flagged.
IMBALANCE_RATIO = 4.0


class ValidationError(GWLEError, ValueError):
    """Custom exception for validation errors."""
    pass


class DatasetValidator:
    """Validator for lattice-indexed samples."""

    @staticmethod
    def validate(dataset: Dataset) -> ValidationReport:
        """
        Check a dataset against the lattice, finiteness and intercept rules.

        Args:
            dataset: Dataset to validate

        Returns:
            ValidationReport listing every violation; never raises
        """
        violations: List[Violation] = []
        warnings: List[str] = []
        sizes = np.asarray(dataset.lattice_sizes, dtype=np.int64)
        n_total = dataset.n_total

        if dataset.n_records != n_total:
            violations.append(
                Violation(
                    kind="count_mismatch",
                    message=f"{dataset.n_records} records, lattice holds {n_total}",
                )
            )

        index = dataset.index
        in_range = np.all((index >= 1) & (index <= sizes), axis=1)
        for position in np.flatnonzero(~in_range):
            violations.append(
                Violation(
                    kind="index_out_of_range",
                    message=f"lattice index {tuple(int(c) for c in index[position])} "
                    f"outside {tuple(int(n) for n in sizes)}",
                    record=int(position),
                )
            )

        seen = {}
        for position in np.flatnonzero(in_range):
            key = tuple(int(c) for c in index[position])
            if key in seen:
                violations.append(
                    Violation(
                        kind="duplicate_index",
                        message=f"lattice index {key} repeats record {seen[key]}",
                        record=int(position),
                    )
                )
            else:
                seen[key] = int(position)

        missing = n_total - len(seen)
        if missing > 0:
            violations.append(
                Violation(
                    kind="missing_index",
                    message=f"{missing} lattice positions have no record",
                )
            )

        finite = (
            np.all(np.isfinite(dataset.u), axis=1)
            & np.all(np.isfinite(dataset.x), axis=1)
            & np.isfinite(dataset.y)
        )
        for position in np.flatnonzero(~finite):
            violations.append(
                Violation(
                    kind="non_finite",
                    message="record has a non-finite entry",
                    record=int(position),
                )
            )

        if dataset.intercept:
            for position in np.flatnonzero(dataset.x[:, 0] != 1.0):
                violations.append(
                    Violation(
                        kind="intercept",
                        message=f"x1 = {dataset.x[position, 0]!r}, intercept requires 1",
                        record=int(position),
                    )
                )

        ratio = float(sizes.max() / sizes.min())
        if ratio > IMBALANCE_RATIO:
            message = (
                f"lattice sizes {tuple(int(n) for n in sizes)} are unbalanced "
                f"(ratio {ratio:.3g}); asymptotics assume every side grows"
            )
            warnings.append(message)
            logger.warning(message)

        report = ValidationReport(
            passed=not violations,
            n_records=dataset.n_records,
            n_total=n_total,
            violations=violations,
            warnings=warnings,
        )
        logger.info(
            f"Validated dataset: {'pass' if report.passed else 'fail'} "
            f"({len(violations)} violations)"
        )
        return report


def validate_dataset(dataset: Dataset) -> ValidationReport:
    """Report-style dataset validation."""
    return DatasetValidator.validate(dataset)


class FloatListValidator:
    """Parser for comma-separated real vectors such as --scales and --H."""

    @staticmethod
    def parse(value: str, label: str, length: Optional[int] = None, positive: bool = False) -> List[float]:
        """
        Parse "a,b,c" into floats.

        Args:
            value: Raw flag value
            label: Flag name used in messages
            length: Required length, if known
            positive: Require every entry > 0

        Returns:
            List of floats

        Raises:
            ValidationError: If parsing or a constraint fails
        """
        if value is None or not value.strip():
            raise ValidationError(f"{label} cannot be empty")
        try:
            values = [float(part) for part in re.split(r"\s*,\s*", value.strip())]
        except ValueError:
            raise ValidationError(f"{label} must be a comma-separated list of numbers, got '{value}'")
        if any(not math.isfinite(v) for v in values):
            raise ValidationError(f"{label} entries must be finite")
        if positive and any(v <= 0 for v in values):
            raise ValidationError(f"{label} entries must be strictly positive")
        if length is not None and len(values) != length:
            raise ValidationError(f"{label} needs {length} values, got {len(values)}")
        return values


class GridValidator:
    """Parser for lo:hi:n bandwidth grids."""

    @staticmethod
    def parse(value: str) -> List[float]:
        """
        Parse "lo:hi:n" into n evenly spaced values from lo to hi.

        Raises:
            ValidationError: If the grid is malformed or not positive
        """
        parts = (value or "").split(":")
        if len(parts) != 3:
            raise ValidationError(f"--h-grid must look like lo:hi:n, got '{value}'")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ValidationError(f"--h-grid must look like lo:hi:n, got '{value}'")
        if n < 1:
            raise ValidationError("--h-grid needs at least one point")
        if not (0 < lo <= hi) or not math.isfinite(hi):
            raise ValidationError("--h-grid needs 0 < lo <= hi")
        if n == 1:
            return [lo]
        return [float(h) for h in np.linspace(lo, hi, n)]


def parse_points(rows: Sequence[Sequence[float]], d: int) -> List[tuple]:
    """Check that every target location has d finite coordinates."""
    points = []
    for row in rows:
        point = tuple(float(v) for v in row)
        if len(point) != d or not all(math.isfinite(v) for v in point):
            raise ValidationError(f"target {point} must have {d} finite coordinates")
        points.append(point)
    if not points:
        raise ValidationError("targets must be nonempty")
    return points
