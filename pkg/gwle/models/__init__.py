"""
File persistence for datasets and reports.
"""

from .dataset_file import DatasetFile, DatasetSidecar, read_points
from .report_file import ReportFile

__all__ = [
    "DatasetFile",
    "DatasetSidecar",
    "read_points",
    "ReportFile",
]
