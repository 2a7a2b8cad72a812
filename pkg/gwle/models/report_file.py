"""
Report persistence: nested JSON reports and flat CSV tables.
"""

import json
import logging
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import pandas as pd
from pydantic import BaseModel

from gwle.schemas.report import McCell

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

FLOAT_FORMAT = "%.17g"


def timestamp() -> str:
    """UTC time of report generation, ISO 8601."""
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


def cell_row(cell: McCell) -> Dict[str, Any]:
    """Flatten one Monte Carlo cell into scalar CSV columns."""
    row: Dict[str, Any] = {
        "estimator": cell.estimator,
        "h": cell.h,
        "h_index": cell.h_index,
        "which_n": cell.which_n,
        "n_total": cell.n_total,
        "eval_index": cell.eval_index,
        "status": cell.status,
        "replicas": cell.replicas,
        "mse": cell.mse,
    }
    for s, value in enumerate(cell.eval_point):
        row[f"u{s + 1}"] = value
    for s, value in enumerate(cell.bandwidths):
        row[f"h{s + 1}"] = value
    for name in ("truth", "empirical_bias", "theoretical_bias"):
        for k, value in enumerate(getattr(cell, name) or []):
            row[f"{name}_{k + 1}"] = value
    for name in ("empirical_variance", "theoretical_variance", "sandwich_variance"):
        matrix = getattr(cell, name)
        for k, line in enumerate(matrix or []):
            for j, value in enumerate(line):
                row[f"{name}_{k + 1}_{j + 1}"] = value
    row["reason"] = cell.reason or ""
    return row


class ReportFile:
    """Writes reports with exact float formatting."""

    @staticmethod
    def dumps(report: Union[BaseModel, Dict[str, Any]]) -> str:
        """
        JSON text with sorted keys. Floats use the shortest repr that round-trips,
        so every value is exact to 17 significant digits.
        """
        payload = report.model_dump(mode="json") if isinstance(report, BaseModel) else report
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @staticmethod
    def write_json(report: Union[BaseModel, Dict[str, Any]], path: Optional[PathLike] = None) -> str:
        """Write the JSON report to path (when given) and return the text."""
        text = ReportFile.dumps(report)
        if path is not None:
            Path(path).write_text(text)
            logger.info(f"Wrote report {path}")
        return text

    @staticmethod
    def write_csv(rows: Sequence[Dict[str, Any]], path: PathLike) -> None:
        """Flat table with %.17g floats; columns follow first appearance."""
        columns: List[str] = []
        for row in rows:
            for name in row:
                if name not in columns:
                    columns.append(name)
        pd.DataFrame(list(rows), columns=columns).to_csv(path, index=False, float_format=FLOAT_FORMAT)
        logger.info(f"Wrote {len(rows)} rows to {path}")

    @staticmethod
    def write_cells(cells: Sequence[McCell], path: PathLike) -> None:
        ReportFile.write_csv([cell_row(cell) for cell in cells], path)
