"""
Tests for dataset schemas, validation and CSV persistence.
"""

import json

import numpy as np
import pytest

from gwle.core.exceptions import DatasetFormatError
from gwle.models.dataset_file import DatasetFile, read_points, sidecar_path
from gwle.schemas.dataset import Dataset, LatticeIndex, Observation
from gwle.utils.validators import (
    FloatListValidator,
    GridValidator,
    ValidationError,
    validate_dataset,
)


def full_lattice(make_dataset, rng, shape=(4, 4), intercept=True):
    n = int(np.prod(shape))
    u = rng.uniform(size=(n, 2))
    x = np.column_stack([np.ones(n), rng.normal(size=n)])
    y = rng.normal(size=n)
    return make_dataset(shape, u, x, y, intercept=intercept)


# ==================== Validation ====================


class TestValidateDataset:
    """Test suite for validate_dataset."""

    def test_full_lattice_passes(self, make_dataset, rng):
        """Test that a full 4 x 4 lattice with finite records passes."""
        report = validate_dataset(full_lattice(make_dataset, rng))
        assert report.passed is True
        assert report.n_records == 16
        assert report.n_total == 16
        assert report.violations == []

    def test_missing_record(self, make_dataset, rng):
        """Test that 15 records on a 4 x 4 lattice fail with a missing index."""
        dataset = full_lattice(make_dataset, rng)
        short = Dataset(
            lattice_sizes=(4, 4),
            intercept=True,
            index=dataset.index[:15],
            u=dataset.u[:15],
            x=dataset.x[:15],
            y=dataset.y[:15],
        )
        report = validate_dataset(short)
        assert report.passed is False
        assert "missing_index" in report.kinds
        assert "count_mismatch" in report.kinds

    def test_non_finite_response(self, make_dataset, rng):
        """Test that a non-finite y is reported with its record position."""
        dataset = full_lattice(make_dataset, rng)
        y = dataset.y.copy()
        y[5] = np.inf
        report = validate_dataset(dataset.with_response(y))
        assert report.passed is False
        assert report.kinds == ["non_finite"]
        assert report.violations[0].record == 5

    def test_duplicate_index(self, make_dataset, rng):
        """Test that a repeated lattice index is reported."""
        dataset = full_lattice(make_dataset, rng)
        index = dataset.index.copy()
        index[3] = index[2]
        broken = Dataset(
            lattice_sizes=(4, 4),
            intercept=True,
            index=index,
            u=dataset.u,
            x=dataset.x,
            y=dataset.y,
        )
        report = validate_dataset(broken)
        assert "duplicate_index" in report.kinds
        assert "missing_index" in report.kinds

    def test_index_out_of_range(self, make_dataset, rng):
        """Test that an index beyond N_k is reported."""
        dataset = full_lattice(make_dataset, rng)
        index = dataset.index.copy()
        index[0] = (5, 1)
        broken = Dataset(
            lattice_sizes=(4, 4), intercept=True, index=index, u=dataset.u, x=dataset.x, y=dataset.y
        )
        assert "index_out_of_range" in validate_dataset(broken).kinds

    def test_intercept_violation(self, make_dataset, rng):
        """Test that an intercept column other than 1 is reported."""
        dataset = full_lattice(make_dataset, rng)
        x = dataset.x.copy()
        x[7, 0] = 0.5
        broken = Dataset(
            lattice_sizes=(4, 4), intercept=True, index=dataset.index, u=dataset.u, x=x, y=dataset.y
        )
        report = validate_dataset(broken)
        assert report.kinds == ["intercept"]
        assert report.violations[0].record == 7

    def test_unbalanced_lattice_warns(self, make_dataset, rng):
        """Test that very unbalanced lattices pass with a warning."""
        report = validate_dataset(full_lattice(make_dataset, rng, shape=(1, 10)))
        assert report.passed is True
        assert len(report.warnings) == 1

    def test_total_equals_record_count(self, affine_dataset):
        """Test that N~ from the lattice sizes equals the record count."""
        assert affine_dataset.n_total == affine_dataset.n_records == 400


class TestDatasetSchema:
    """Test suite for the Dataset model."""

    def test_arrays_are_read_only(self, affine_dataset):
        """Test that stored arrays cannot be mutated."""
        with pytest.raises(ValueError):
            affine_dataset.y[0] = 1.0

    def test_records_round_trip(self, affine_dataset):
        """Test that from_records(records) rebuilds an equal dataset."""
        rebuilt = Dataset.from_records(
            affine_dataset.lattice_sizes, affine_dataset.records, intercept=True
        )
        assert rebuilt.same_as(affine_dataset)

    def test_shape_mismatch_rejected(self):
        """Test that row counts must agree."""
        with pytest.raises(ValueError):
            Dataset(
                lattice_sizes=(2,),
                index=[[1], [2]],
                u=[[0.1], [0.2]],
                x=[[1.0]],
                y=[0.0, 1.0],
            )

    def test_lattice_index_is_one_based(self):
        """Test that zero coordinates are rejected."""
        with pytest.raises(ValueError):
            LatticeIndex(coords=(0, 1))
        assert Observation(x=(1.0,), u=(0.5,), y=2.0).y == 2.0

    def test_checksum_ignores_response(self, affine_dataset):
        """Test that the design checksum depends on (index, U, X) only."""
        other = affine_dataset.with_response(np.zeros(affine_dataset.n_records))
        assert other.design_checksum() == affine_dataset.design_checksum()
        assert affine_dataset.permuted(np.arange(400)[::-1]).design_checksum() != affine_dataset.design_checksum()


# ==================== Persistence ====================


class TestDatasetFile:
    """Test suite for CSV persistence."""

    def test_write_then_read(self, noisy_dataset, tmp_path):
        """Test that write then read yields a structurally equal dataset."""
        path = tmp_path / "sample.csv"
        DatasetFile.write(noisy_dataset, path)
        loaded = DatasetFile.read(path)
        assert loaded.same_as(noisy_dataset)
        assert json.loads(sidecar_path(path).read_text())["intercept"] is True

    def test_header_layout(self, noisy_dataset, tmp_path):
        """Test the column order i, u, x, y."""
        path = tmp_path / "sample.csv"
        DatasetFile.write(noisy_dataset, path)
        header = path.read_text().splitlines()[0]
        assert header == "i1,i2,u1,u2,x1,x2,y"

    def test_without_sidecar(self, tmp_path):
        """Test that the lattice is inferred from the indices without a sidecar."""
        path = tmp_path / "bare.csv"
        path.write_text("i1,u1,x1,y\n1,0.1,1,2.0\n2,0.2,1,2.5\n3,0.3,1,2.7\n")
        dataset = DatasetFile.read(path)
        assert dataset.lattice_sizes == (3,)
        assert dataset.intercept is False
        assert validate_dataset(dataset).passed is True

    def test_missing_response_column(self, tmp_path):
        """Test that a header without y is rejected."""
        path = tmp_path / "bad.csv"
        path.write_text("i1,u1,x1\n1,0.1,1\n")
        with pytest.raises(DatasetFormatError):
            DatasetFile.read(path)

    def test_unknown_column(self, tmp_path):
        """Test that unrecognised columns are rejected."""
        path = tmp_path / "bad.csv"
        path.write_text("i1,u1,x1,z,y\n1,0.1,1,3,2\n")
        with pytest.raises(DatasetFormatError):
            DatasetFile.read(path)

    def test_non_numeric_cell(self, tmp_path):
        """Test that text in a numeric column is a format error."""
        path = tmp_path / "bad.csv"
        path.write_text("i1,u1,x1,y\n1,abc,1,2\n")
        with pytest.raises(DatasetFormatError):
            DatasetFile.read(path)

    def test_read_points(self, tmp_path):
        """Test that target files are read from their u columns."""
        path = tmp_path / "targets.csv"
        path.write_text("u1,u2,label\n0.5,0.5,a\n0.25,0.75,b\n")
        assert read_points(path) == [(0.5, 0.5), (0.25, 0.75)]


# ==================== Flag parsers ====================


class TestParsers:
    """Test suite for command-line value parsers."""

    def test_float_list(self):
        """Test comma-separated floats with a length check."""
        assert FloatListValidator.parse("1, 2.5,3", "--scales", length=3) == [1.0, 2.5, 3.0]
        with pytest.raises(ValidationError):
            FloatListValidator.parse("1,2", "--scales", length=3)
        with pytest.raises(ValidationError):
            FloatListValidator.parse("1,-2", "--scales", positive=True)
        with pytest.raises(ValidationError):
            FloatListValidator.parse("1,x", "--scales")

    def test_grid(self):
        """Test lo:hi:n linspace parsing."""
        assert GridValidator.parse("0.1:0.5:5") == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
        assert GridValidator.parse("0.3:0.3:1") == [0.3]
        for bad in ("0.1:0.5", "0:0.5:3", "0.5:0.1:3", "0.1:0.5:0"):
            with pytest.raises(ValidationError):
                GridValidator.parse(bad)
