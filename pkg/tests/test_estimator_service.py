"""
Tests for the distance-kernel local linear estimator.
"""

import numpy as np
import pytest

from gwle.core.exceptions import (
    DimensionMismatchError,
    InsufficientSupportError,
    SingularFitError,
)
from gwle.schemas.fit import ConditionFlag, FitConfig
from gwle.schemas.kernel import ScaleMatrix
from gwle.services.estimator_service import (
    GWLEEstimator,
    LocalLinearEstimator,
    build_augmented_design,
    build_augmented_row,
    fit_local,
    fit_local_direct,
    fit_surface,
    predict,
    smoother_matrix,
    surface_rows,
)


INTERIOR_TARGETS = [(a, b) for a in (0.3, 0.5, 0.7) for b in (0.3, 0.5, 0.7)]


def relative_difference(a, b):
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / np.linalg.norm(b))


# ==================== Local fit ====================


class TestFitLocal:
    """Test suite for single-point fits."""

    def test_augmented_row_layout(self):
        """Test the row (x, (u1 - u01) x, (u2 - u02) x)."""
        row = build_augmented_row([1.0, 2.0], [0.5, 1.0], [0.25, 0.0])
        np.testing.assert_allclose(row, [1.0, 2.0, 0.25, 0.5, 1.0, 2.0])

    def test_affine_truth_is_exact(self, affine_dataset, affine_beta, gwle_config):
        """Test that affine coefficients are recovered to 1e-8 without noise."""
        errors = [
            np.max(np.abs(fit_local(affine_dataset, u0, gwle_config).beta_hat - affine_beta(u0)))
            for u0 in INTERIOR_TARGETS
        ]
        assert max(errors) <= 1e-8

    def test_affine_gradient_is_exact(self, affine_dataset, gwle_config):
        """Test that the slope block holds d beta_k / d u_s."""
        fit = fit_local(affine_dataset, (0.5, 0.5), gwle_config)
        np.testing.assert_allclose(fit.gradient_hat, [[2.0, 1.0], [-1.0, 3.0]], atol=1e-8)

    def test_matches_direct_normal_equations(self, noisy_dataset, gaussian_kernel, unit_scales, rng):
        """Test the rescaled solver against the unscaled normal equations on 50 systems."""
        for _ in range(50):
            u0 = rng.uniform(0.3, 0.7, size=2)
            config = FitConfig(
                kernel=gaussian_kernel, scales=unit_scales, bandwidth=float(rng.uniform(0.25, 0.5))
            )
            rescaled = fit_local(noisy_dataset, u0, config).beta_hat
            direct = fit_local_direct(noisy_dataset, u0, config)
            assert relative_difference(rescaled, direct) <= 1e-10

    @pytest.mark.parametrize("c", [0.1, 3.0, 10.0])
    def test_joint_scale_invariance(self, noisy_dataset, gaussian_kernel, c):
        """Test that (scales, h) -> (c scales, c h) leaves beta_hat unchanged."""
        scales = ScaleMatrix(scales=(1.5, 0.7))
        base = FitConfig(kernel=gaussian_kernel, scales=scales, bandwidth=0.4)
        moved = FitConfig(kernel=gaussian_kernel, scales=scales.scaled(c), bandwidth=0.4 * c)
        for u0 in INTERIOR_TARGETS:
            a = fit_local(noisy_dataset, u0, base).beta_hat
            b = fit_local(noisy_dataset, u0, moved).beta_hat
            assert relative_difference(b, a) <= 1e-12

    def test_record_order_is_irrelevant(self, noisy_dataset, gwle_config, rng):
        """Test that permuting the records leaves beta_hat unchanged."""
        shuffled = noisy_dataset.permuted(rng.permutation(noisy_dataset.n_records))
        for u0 in INTERIOR_TARGETS:
            a = fit_local(noisy_dataset, u0, gwle_config).beta_hat
            b = fit_local(shuffled, u0, gwle_config).beta_hat
            assert relative_difference(b, a) <= 1e-12

    def test_huge_bandwidth_is_global_fit(self, noisy_dataset, gwle_config):
        """Test that h = 1e6 reproduces unweighted least squares on the augmented design."""
        u0 = (0.5, 0.5)
        fit = fit_local(noisy_dataset, u0, gwle_config.with_bandwidth(1e6))
        design = build_augmented_design(noisy_dataset.x, noisy_dataset.u, u0)
        theta, *_ = np.linalg.lstsq(design, noisy_dataset.y, rcond=None)
        assert relative_difference(fit.beta_hat, theta[: noisy_dataset.p]) <= 1e-8

    def test_diagnostics(self, noisy_dataset, gwle_config):
        """Test effective_n, positive weights and the well-posed flag."""
        fit = fit_local(noisy_dataset, (0.5, 0.5), gwle_config)
        assert fit.condition_flag == ConditionFlag.WELL_POSED
        assert 0.0 < fit.effective_n <= fit.positive_weights <= noisy_dataset.n_records
        assert np.isfinite(fit.condition)
        assert fit.u0 == (0.5, 0.5)

    def test_wrong_target_dimension(self, noisy_dataset, gwle_config):
        """Test that a 3-D target is rejected for 2-D data."""
        with pytest.raises(DimensionMismatchError):
            fit_local(noisy_dataset, (0.5, 0.5, 0.5), gwle_config)

    def test_predict(self, affine_dataset, affine_beta, gwle_config):
        """Test x . beta_hat and its length check."""
        fit = fit_local(affine_dataset, (0.4, 0.6), gwle_config)
        assert predict(fit, [1.0, 2.0]) == pytest.approx(float(np.dot([1.0, 2.0], affine_beta((0.4, 0.6)))))
        with pytest.raises(DimensionMismatchError):
            predict(fit, [1.0])


# ==================== Degenerate systems ====================


class TestDegenerateSystems:
    """Test suite for support and conditioning failures."""

    def test_no_support(self, noisy_dataset, epanechnikov_kernel, unit_scales):
        """Test that a target with no positive weights raises even with a ridge."""
        config = FitConfig(
            kernel=epanechnikov_kernel, scales=unit_scales, bandwidth=0.1, ridge_fallback=0.1
        )
        with pytest.raises(InsufficientSupportError) as excinfo:
            fit_local(noisy_dataset, (5.0, 5.0), config)
        assert excinfo.value.positive_count == 0
        assert excinfo.value.exit_code == 2

    def test_too_few_neighbours(self, noisy_dataset, epanechnikov_kernel, unit_scales):
        """Test that fewer than (d+1)p weighted records raise without a ridge."""
        config = FitConfig(kernel=epanechnikov_kernel, scales=unit_scales, bandwidth=0.03)
        u0 = noisy_dataset.u[0]
        with pytest.raises(InsufficientSupportError) as excinfo:
            fit_local(noisy_dataset, u0, config)
        assert excinfo.value.positive_count < 6

    def test_collinear_locations(self, make_dataset, rng, gaussian_kernel, unit_scales):
        """Test that locations on a line make the slope block singular unless a ridge is set."""
        n = 100
        u = np.column_stack([rng.uniform(size=n), np.full(n, 0.5)])
        x = np.column_stack([np.ones(n), rng.normal(size=n)])
        y = x @ np.array([1.0, 2.0]) + 0.1 * rng.normal(size=n)
        dataset = make_dataset((10, 10), u, x, y, intercept=True)
        config = FitConfig(kernel=gaussian_kernel, scales=unit_scales, bandwidth=0.3)
        with pytest.raises(SingularFitError):
            fit_local(dataset, (0.5, 0.5), config)

        ridged = FitConfig(
            kernel=gaussian_kernel, scales=unit_scales, bandwidth=0.3, ridge_fallback=1e-3
        )
        fit = fit_local(dataset, (0.5, 0.5), ridged)
        assert fit.condition_flag == ConditionFlag.RIDGE_APPLIED
        assert np.all(np.isfinite(fit.beta_hat))
        np.testing.assert_allclose(fit.beta_hat, [1.0, 2.0], atol=0.2)


# ==================== Smoother and surfaces ====================


class TestSurface:
    """Test suite for smoother matrices and surfaces."""

    def test_smoother_reproduces_fit(self, noisy_dataset, gwle_config):
        """Test beta_hat = L y."""
        u0 = (0.45, 0.55)
        smoother = smoother_matrix(noisy_dataset, u0, gwle_config)
        assert smoother.shape == (2, noisy_dataset.n_records)
        np.testing.assert_allclose(
            smoother @ noisy_dataset.y,
            fit_local(noisy_dataset, u0, gwle_config).beta_hat,
            rtol=1e-12,
            atol=1e-12,
        )

    def test_leave_one_out_ignores_record(self, noisy_dataset, gwle_config):
        """Test that an excluded record does not influence the fit."""
        estimator = GWLEEstimator(gwle_config)
        u0 = noisy_dataset.u[10]
        held_out = estimator.fit_local(noisy_dataset, u0, exclude=10)
        y = noisy_dataset.y.copy()
        y[10] += 100.0
        moved = estimator.fit_local(noisy_dataset.with_response(y), u0, exclude=10)
        np.testing.assert_allclose(held_out.beta_hat, moved.beta_hat, rtol=1e-12)

    def test_surface_order_and_failures(self, noisy_dataset, epanechnikov_kernel, unit_scales):
        """Test that surfaces keep target order and record failed targets."""
        config = FitConfig(kernel=epanechnikov_kernel, scales=unit_scales, bandwidth=0.35)
        targets = [(0.5, 0.5), (9.0, 9.0), (0.4, 0.6)]
        result = fit_surface(noisy_dataset, targets, config, workers=2)
        assert result.fits[0] is not None and result.fits[2] is not None
        assert result.fits[1] is None
        assert [failure.index for failure in result.failures] == [1]
        assert result.failures[0].error == "InsufficientSupportError"
        assert result.fits[2].u0 == (0.4, 0.6)

        rows = surface_rows(result, targets, 2, 2)
        assert rows[1]["flag"] == "failed:InsufficientSupportError"
        assert np.isnan(rows[1]["beta1"])
        assert rows[0]["flag"] == "well_posed"
        assert list(rows[0].keys()) == [
            "u1", "u2", "beta1", "beta2",
            "grad_1_1", "grad_1_2", "grad_2_1", "grad_2_2",
            "effective_n", "flag",
        ]


class TestEstimatorBase:
    """Test suite for the shared local linear base class."""

    def test_incomplete_subclass_cannot_be_built(self, gaussian_kernel):
        """Test that a subclass without weights fails at construction."""

        class NoWeights(LocalLinearEstimator):
            @property
            def dimension(self) -> int:
                return 2

            @property
            def rescale_bandwidth(self) -> float:
                return 0.3

        with pytest.raises(TypeError):
            NoWeights(kernel=gaussian_kernel)

    def test_base_cannot_be_built(self, gaussian_kernel):
        """Test that the base class itself is abstract."""
        with pytest.raises(TypeError):
            LocalLinearEstimator(kernel=gaussian_kernel)
