"""
Pydantic schemas for lattice-indexed samples and their validation reports.
"""

import hashlib
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class LatticeIndex(BaseModel):
    """Position i on the sampling lattice, 1-based in every coordinate."""

    model_config = ConfigDict(frozen=True)

    coords: Tuple[int, ...] = Field(..., min_length=1)

    @field_validator("coords")
    @classmethod
    def validate_coords(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(c < 1 for c in v):
            raise ValueError("lattice coordinates are 1-based and must be positive")
        return v


class Observation(BaseModel):
    """One observation (x, u, y): covariate row, location and response."""

    model_config = ConfigDict(frozen=True)

    x: Tuple[float, ...] = Field(..., min_length=1, description="Covariate row, length p")
    u: Tuple[float, ...] = Field(..., min_length=1, description="Location, length d")
    y: float = Field(..., description="Scalar response")


def _frozen_array(value: Any, dtype) -> np.ndarray:
    array = np.array(value, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


class Dataset(BaseModel):
    """
    A sample on an M-dimensional rectangular lattice.

    Arrays are stored row-aligned and read-only: index (n, M), u (n, d),
    x (n, p) and y (n,). Shape consistency is enforced here; lattice coverage,
    finiteness and the intercept column are checked by validate_dataset.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    lattice_sizes: Tuple[int, ...] = Field(..., min_length=1)
    intercept: bool = Field(default=False, description="Column 1 of x is identically 1")
    index: np.ndarray
    u: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @field_validator("lattice_sizes")
    @classmethod
    def validate_lattice_sizes(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(n < 1 for n in v):
            raise ValueError("lattice sizes must be positive")
        return v

    @field_validator("index", mode="before")
    @classmethod
    def freeze_index(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, np.int64)

    @field_validator("u", "x", "y", mode="before")
    @classmethod
    def freeze_floats(cls, v: Any) -> np.ndarray:
        return _frozen_array(v, float)

    @model_validator(mode="after")
    def validate_shapes(self) -> "Dataset":
        n = self.y.shape[0] if self.y.ndim == 1 else -1
        if n < 0:
            raise ValueError("y must be a 1-D array")
        for name in ("index", "u", "x"):
            array = getattr(self, name)
            if array.ndim != 2 or array.shape[0] != n:
                raise ValueError(f"{name} must be a 2-D array with {n} rows")
        if self.index.shape[1] != len(self.lattice_sizes):
            raise ValueError(
                f"index has {self.index.shape[1]} columns, lattice declares "
                f"M={len(self.lattice_sizes)}"
            )
        if self.u.shape[1] < 1 or self.x.shape[1] < 1:
            raise ValueError("u and x need at least one column")
        return self

    @classmethod
    def from_records(
        cls,
        lattice_sizes: Sequence[int],
        records: Sequence[Tuple[LatticeIndex, Observation]],
        intercept: bool = False,
    ) -> "Dataset":
        """Build a dataset from (LatticeIndex, Observation) pairs."""
        return cls(
            lattice_sizes=tuple(lattice_sizes),
            intercept=intercept,
            index=[r[0].coords for r in records],
            u=[r[1].u for r in records],
            x=[r[1].x for r in records],
            y=[r[1].y for r in records],
        )

    @property
    def m_dims(self) -> int:
        return len(self.lattice_sizes)

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    @property
    def d(self) -> int:
        return int(self.u.shape[1])

    @property
    def n_records(self) -> int:
        return int(self.y.shape[0])

    @property
    def n_total(self) -> int:
        """N~ = product of the lattice sizes."""
        return int(np.prod(self.lattice_sizes))

    @property
    def records(self) -> List[Tuple[LatticeIndex, Observation]]:
        return [
            (
                LatticeIndex(coords=tuple(int(c) for c in self.index[i])),
                Observation(
                    x=tuple(float(v) for v in self.x[i]),
                    u=tuple(float(v) for v in self.u[i]),
                    y=float(self.y[i]),
                ),
            )
            for i in range(self.n_records)
        ]

    def design_checksum(self) -> str:
        """SHA-256 over the design (index, U, X); the response is excluded."""
        digest = hashlib.sha256()
        for array in (self.index, self.u, self.x):
            digest.update(np.ascontiguousarray(array).tobytes())
        return digest.hexdigest()

    def with_response(self, y: np.ndarray) -> "Dataset":
        """Same design, new response vector."""
        return self.model_copy(update={"y": _frozen_array(y, float)})

    def permuted(self, order: Sequence[int]) -> "Dataset":
        """Records reordered by the given permutation."""
        order = np.asarray(order, dtype=int)
        return Dataset(
            lattice_sizes=self.lattice_sizes,
            intercept=self.intercept,
            index=self.index[order],
            u=self.u[order],
            x=self.x[order],
            y=self.y[order],
        )

    def same_as(self, other: "Dataset") -> bool:
        """Structural equality of metadata and every array."""
        return (
            self.lattice_sizes == other.lattice_sizes
            and self.intercept == other.intercept
            and all(
                np.array_equal(getattr(self, name), getattr(other, name))
                for name in ("index", "u", "x", "y")
            )
        )


class Violation(BaseModel):
    """A single dataset invariant violation."""

    kind: str = Field(..., description="missing_index, duplicate_index, non_finite, ...")
    message: str
    record: Optional[int] = Field(default=None, description="0-based record position")


class ValidationReport(BaseModel):
    """Result of validate_dataset: pass, or the list of violations."""

    passed: bool
    n_records: int
    n_total: int
    violations: List[Violation] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)

    @property
    def kinds(self) -> List[str]:
        return sorted({v.kind for v in self.violations})
