"""
Dataset persistence: CSV table plus optional JSON sidecar.

The CSV header names the columns i1..iM, u1..ud, x1..xp and y; the sidecar
<csv>.json may declare {"intercept": bool, "lattice_sizes": [N_1, ..., N_M]}.
Without declared sizes the lattice is taken as the per-axis maximum index.
"""

import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError as PydanticValidationError

from gwle.core.exceptions import DatasetFormatError
from gwle.schemas.dataset import Dataset

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_COLUMN = re.compile(r"^(i|u|x)([1-9][0-9]*)$")
FLOAT_FORMAT = "%.17g"


class DatasetSidecar(BaseModel):
    """Metadata stored next to a dataset CSV."""

    intercept: bool = False
    lattice_sizes: Optional[List[int]] = None


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def _column_groups(columns: List[str]) -> Dict[str, List[str]]:
    groups: Dict[str, Dict[int, str]] = {"i": {}, "u": {}, "x": {}}
    unknown = []
    for name in columns:
        if name == "y":
            continue
        match = _COLUMN.match(name)
        if match is None:
            unknown.append(name)
            continue
        groups[match.group(1)][int(match.group(2))] = name
    if unknown:
        raise DatasetFormatError(f"Unknown columns: {', '.join(unknown)}")
    if "y" not in columns:
        raise DatasetFormatError("Missing response column 'y'")
    ordered = {}
    for prefix, found in groups.items():
        if not found:
            raise DatasetFormatError(f"No '{prefix}' columns in header")
        if sorted(found) != list(range(1, len(found) + 1)):
            raise DatasetFormatError(
                f"'{prefix}' columns must be numbered 1..{len(found)} without gaps"
            )
        ordered[prefix] = [found[k] for k in range(1, len(found) + 1)]
    return ordered


class DatasetFile:
    """Reads and writes datasets as CSV via pandas."""

    @staticmethod
    def read(path: PathLike, intercept: Optional[bool] = None) -> Dataset:
        """
        Load a dataset.

        Args:
            path: CSV path
            intercept: Overrides the sidecar flag when given

        Returns:
            Dataset; lattice coverage is not checked here (see validate_dataset)

        Raises:
            DatasetFormatError: If the header or any cell cannot be parsed
            OSError: If the file cannot be read
        """
        path = Path(path)
        sidecar = DatasetFile.read_sidecar(path)
        try:
            frame = pd.read_csv(path, float_precision="round_trip")
        except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
            raise DatasetFormatError(f"Cannot parse {path}: {e}")

        columns = [str(c).strip() for c in frame.columns]
        frame.columns = columns
        groups = _column_groups(columns)
        try:
            index_frame = frame[groups["i"]]
            if index_frame.isna().to_numpy().any():
                raise ValueError("lattice index cells must not be empty")
            index = index_frame.to_numpy(dtype=float)
            if not np.all(index == np.round(index)):
                raise ValueError("lattice index cells must be integers")
            index = index.astype(np.int64)
            u = frame[groups["u"]].to_numpy(dtype=float)
            x = frame[groups["x"]].to_numpy(dtype=float)
            y = frame["y"].to_numpy(dtype=float)
        except ValueError as e:
            raise DatasetFormatError(f"Bad cell in {path}: {e}")

        if sidecar.lattice_sizes is not None:
            lattice_sizes = tuple(sidecar.lattice_sizes)
            if len(lattice_sizes) != index.shape[1]:
                raise DatasetFormatError(
                    f"sidecar declares M={len(lattice_sizes)}, header has {index.shape[1]} index columns"
                )
        elif index.shape[0]:
            lattice_sizes = tuple(int(v) for v in np.maximum(index.max(axis=0), 1))
        else:
            raise DatasetFormatError(f"{path} holds no records")

        try:
            dataset = Dataset(
                lattice_sizes=lattice_sizes,
                intercept=sidecar.intercept if intercept is None else intercept,
                index=index,
                u=u,
                x=x,
                y=y,
            )
        except PydanticValidationError as e:
            raise DatasetFormatError(f"Inconsistent dataset in {path}: {e}")
        logger.info(
            f"Loaded {dataset.n_records} records from {path} "
            f"(M={dataset.m_dims}, d={dataset.d}, p={dataset.p})"
        )
        return dataset

    @staticmethod
    def read_sidecar(path: PathLike) -> DatasetSidecar:
        """Sidecar metadata, defaults when the file is absent."""
        meta = sidecar_path(path)
        if not meta.exists():
            return DatasetSidecar()
        try:
            return DatasetSidecar.model_validate_json(meta.read_text())
        except PydanticValidationError as e:
            raise DatasetFormatError(f"Bad sidecar {meta}: {e}")

    @staticmethod
    def columns(dataset: Dataset) -> Tuple[List[str], List[str], List[str]]:
        return (
            [f"i{k + 1}" for k in range(dataset.m_dims)],
            [f"u{s + 1}" for s in range(dataset.d)],
            [f"x{k + 1}" for k in range(dataset.p)],
        )

    @staticmethod
    def write(dataset: Dataset, path: PathLike) -> None:
        """Write the CSV with 17 significant digits and the sidecar."""
        path = Path(path)
        index_cols, u_cols, x_cols = DatasetFile.columns(dataset)
        frame = pd.concat(
            [
                pd.DataFrame(dataset.index, columns=index_cols),
                pd.DataFrame(dataset.u, columns=u_cols),
                pd.DataFrame(dataset.x, columns=x_cols),
                pd.DataFrame({"y": dataset.y}),
            ],
            axis=1,
        )
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        sidecar = DatasetSidecar(
            intercept=dataset.intercept,
            lattice_sizes=list(dataset.lattice_sizes),
        )
        sidecar_path(path).write_text(sidecar.model_dump_json(indent=2))
        logger.info(f"Wrote {dataset.n_records} records to {path}")


def read_points(path: PathLike) -> List[Tuple[float, ...]]:
    """
    Target locations from a CSV with columns u1..ud (other columns ignored).

    Raises:
        DatasetFormatError: If no u columns are present
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise DatasetFormatError(f"Cannot parse {path}: {e}")
    found = {}
    for name in frame.columns:
        match = _COLUMN.match(str(name).strip())
        if match is not None and match.group(1) == "u":
            found[int(match.group(2))] = name
    if not found or sorted(found) != list(range(1, len(found) + 1)):
        raise DatasetFormatError(f"{path} needs target columns u1..ud")
    try:
        values = frame[[found[s] for s in sorted(found)]].to_numpy(dtype=float)
    except ValueError as e:
        raise DatasetFormatError(f"Bad target cell in {path}: {e}")
    return [tuple(float(v) for v in row) for row in values]
