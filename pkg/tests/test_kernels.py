"""
Tests for the distance function, kernel weights and kernel moments.
"""

import math

import numpy as np
import pytest

from gwle.core.exceptions import DimensionMismatchError, InvalidParameterError
from gwle.core.kernels import (
    distance,
    distance_weights,
    kernel_moments,
    kernel_weight,
    product_constant,
    product_weights,
    radial_moments,
    scaled_distances,
)
from gwle.schemas.kernel import BandwidthMatrix, KernelFamily, KernelSpec, ScaleMatrix


# ==================== Distance ====================


class TestDistance:
    """Test suite for the scaled distance."""

    def test_quadratic_form_example(self):
        """Test that diag(4, 9) in quadratic-form convention gives sqrt(13) between (0,0) and (1,1)."""
        scales = ScaleMatrix.from_quadratic_form([4.0, 9.0])
        assert distance((0.0, 0.0), (1.0, 1.0), scales) == pytest.approx(math.sqrt(13.0), rel=1e-15)

    def test_linear_scales(self):
        """Test that scales multiply coordinate differences before squaring."""
        scales = ScaleMatrix(scales=(2.0, 3.0))
        assert distance((0.0, 0.0), (1.0, 1.0), scales) == pytest.approx(math.sqrt(13.0))

    def test_symmetric_and_zero_on_diagonal(self):
        """Test symmetry and d(u, u) = 0."""
        scales = ScaleMatrix(scales=(0.5, 4.0, 1.5))
        u1, u2 = (0.1, -2.0, 3.0), (1.7, 0.4, -1.1)
        assert distance(u1, u2, scales) == distance(u2, u1, scales)
        assert distance(u1, u1, scales) == 0.0

    def test_dimension_mismatch(self):
        """Test that locations of the wrong length are rejected."""
        with pytest.raises(DimensionMismatchError):
            distance((0.0, 0.0), (1.0, 1.0, 1.0), ScaleMatrix.identity(2))

    def test_vectorized_matches_scalar(self, rng):
        """Test that scaled_distances agrees with distance row by row."""
        scales = ScaleMatrix(scales=(0.7, 2.5))
        points = rng.normal(size=(25, 2))
        u0 = (0.3, -0.2)
        expected = [distance(point, u0, scales) for point in points]
        np.testing.assert_allclose(scaled_distances(points, u0, scales), expected, rtol=1e-14)

    def test_triangle_inequality(self, rng):
        """Test d(a, c) <= d(a, b) + d(b, c) on random triples."""
        scales = ScaleMatrix(scales=(0.4, 2.2, 1.0))
        for _ in range(100):
            a, b, c = rng.normal(size=(3, 3))
            assert distance(a, c, scales) <= distance(a, b, scales) + distance(b, c, scales) + 1e-12

    def test_nonpositive_scale_rejected(self):
        """Test that zero or negative scales fail validation."""
        with pytest.raises(ValueError):
            ScaleMatrix(scales=(1.0, 0.0))
        with pytest.raises(ValueError):
            ScaleMatrix(scales=(-1.0, 2.0))


# ==================== Weights ====================


class TestKernelWeight:
    """Test suite for kernel weights."""

    def test_gaussian_at_zero(self, gaussian_kernel):
        """Test K(0)/h for the gaussian."""
        assert kernel_weight(0.0, 0.5, gaussian_kernel) == pytest.approx(2.0 / math.sqrt(2.0 * math.pi))

    def test_compact_support(self, epanechnikov_kernel):
        """Test that compact kernels vanish beyond distance h."""
        assert kernel_weight(1.01, 1.0, epanechnikov_kernel) == 0.0
        assert kernel_weight(0.5, 1.0, epanechnikov_kernel) == pytest.approx(0.75 * 0.75)

    def test_rejects_bad_bandwidth(self, gaussian_kernel):
        """Test that h <= 0 raises."""
        with pytest.raises(InvalidParameterError):
            kernel_weight(0.1, 0.0, gaussian_kernel)
        with pytest.raises(InvalidParameterError):
            kernel_weight(0.1, -1.0, gaussian_kernel)

    @pytest.mark.parametrize("family", list(KernelFamily))
    @pytest.mark.parametrize("c", [0.2, 3.0])
    def test_joint_rescaling(self, family, c):
        """Test K_{ch}(c dist) = K_h(dist) / c."""
        kernel = KernelSpec(family=family)
        dist = np.array([0.0, 0.1, 0.35, 0.6, 0.9, 1.2])
        np.testing.assert_allclose(
            kernel_weight(c * dist, c * 0.7, kernel), kernel_weight(dist, 0.7, kernel) / c, rtol=1e-12
        )

    def test_rejects_negative_distance(self, gaussian_kernel):
        """Test that negative distances raise."""
        with pytest.raises(InvalidParameterError):
            kernel_weight(-0.1, 1.0, gaussian_kernel)

    def test_weight_floor(self, gaussian_kernel, unit_scales):
        """Test that weights below the floor are set to exactly zero."""
        points = np.array([[0.0, 0.0], [50.0, 0.0]])
        weights = distance_weights(points, (0.0, 0.0), 0.1, unit_scales, gaussian_kernel)
        assert weights[0] > 0.0
        assert weights[1] == 0.0

    def test_product_matches_distance_for_gaussian(self, rng, gaussian_kernel):
        """Test K(|v|) = c prod K(v_r): product weights with h_s = h/a_s are proportional."""
        scales = ScaleMatrix(scales=(1.5, 0.5))
        h = 0.8
        points = rng.uniform(-1.0, 1.0, size=(30, 2))
        u0 = (0.1, 0.2)
        gwle = distance_weights(points, u0, h, scales, gaussian_kernel)
        mlwe = product_weights(points, u0, BandwidthMatrix.matching(h, scales), gaussian_kernel)
        ratio = gwle / mlwe
        np.testing.assert_allclose(ratio, ratio[0], rtol=1e-12)


# ==================== Moments ====================


class TestKernelMoments:
    """Test suite for quadrature moments."""

    @pytest.mark.parametrize("family", list(KernelFamily))
    def test_symmetric_unit_mass(self, family):
        """Test kappa_0 = 1 and kappa_1 = kappa_3 = 0 for every family."""
        moments = kernel_moments(KernelSpec(family=family))
        assert moments.kappa_lambda[0] == pytest.approx(1.0, abs=1e-10)
        assert abs(moments.kappa_lambda[1]) <= 1e-10
        assert abs(moments.kappa_lambda[3]) <= 1e-10

    def test_second_moments(self, gaussian_kernel, epanechnikov_kernel):
        """Test kappa_2 = 1 for the gaussian and 1/5 for the epanechnikov."""
        assert kernel_moments(gaussian_kernel).kappa2 == pytest.approx(1.0, abs=1e-10)
        assert kernel_moments(epanechnikov_kernel).kappa2 == pytest.approx(0.2, abs=1e-10)

    def test_quartic_constants(self):
        """Test kappa_2 = 1/7 and integral of K^2 = 5/7 for the quartic."""
        moments = kernel_moments(KernelSpec(family=KernelFamily.QUARTIC))
        assert moments.kappa2 == pytest.approx(1.0 / 7.0, abs=1e-10)
        assert moments.kappa_sq_1d == pytest.approx(5.0 / 7.0, abs=1e-10)

    def test_kappa_d(self, gaussian_kernel):
        """Test kappa_d = (1 / (2 sqrt(pi)))^d for the gaussian."""
        moments = kernel_moments(gaussian_kernel, dimension=3)
        assert moments.kappa_d == pytest.approx((0.5 / math.sqrt(math.pi)) ** 3, rel=1e-10)

    def test_radial_gaussian_matches_product(self, gaussian_kernel):
        """Test that the unit-mass radial gaussian has mu2 = 1 and nu0 = (int K^2)^d."""
        radial = radial_moments(gaussian_kernel, 2)
        assert radial.mass == pytest.approx(product_constant(gaussian_kernel, 2), rel=1e-9)
        assert radial.mu2 == pytest.approx(1.0, rel=1e-9)
        assert radial.nu0 == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-9)
        assert radial.nu2 == pytest.approx(0.5 / (4.0 * math.pi), rel=1e-9)

    def test_radial_one_dimension(self, epanechnikov_kernel):
        """Test that the 1-D radial kernel reduces to the profile itself."""
        radial = radial_moments(epanechnikov_kernel, 1)
        assert radial.mass == pytest.approx(1.0, abs=1e-10)
        assert radial.mu2 == pytest.approx(0.2, abs=1e-10)
        assert radial.nu0 == pytest.approx(0.6, abs=1e-10)

    def test_product_constant_only_gaussian(self, epanechnikov_kernel):
        """Test that non-gaussian families do not factorize."""
        with pytest.raises(InvalidParameterError):
            product_constant(epanechnikov_kernel, 2)
