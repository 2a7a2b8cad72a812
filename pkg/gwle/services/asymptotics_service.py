"""
Leading-term conditional bias and variance of the distance-kernel estimator,
the block moment matrices behind them, and finite-sample moment statistics
whose limits those blocks are.

Conventions: the moment blocks are normalized by N h^(d-1) after slope
columns are divided by h, so

    A = det^-1 [[Omega f,            h mu2 [a_s^-2 d_s(Omega f)]  ],
                [h mu2 [..]^T,       mu2 diag(a_s^-2) (x) Omega f ]].

The leading-order versions drop the O(h) off-diagonal blocks, which makes
every scaling law in h, N and the scales an exact identity.
"""

import logging
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from gwle.core.exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    NumericalError,
)
from gwle.core.kernels import kernel_moments, radial_moments, scaled_distances
from gwle.schemas.dataset import Dataset
from gwle.schemas.kernel import KernelSpec, ScaleMatrix
from gwle.schemas.report import TheoreticalMoments
from gwle.services.truth_model import TruthModel

logger = logging.getLogger(__name__)


class Lemma(str, Enum):
    """Moment statistics: plain weights (L1), curvature-weighted (L2), squared weights (L3)."""

    L1 = "L1"
    L2 = "L2"
    L3 = "L3"


def _check(truth: TruthModel, u0: Sequence[float], h: float, scales: ScaleMatrix) -> np.ndarray:
    u0 = np.asarray(u0, dtype=float).ravel()
    if u0.size != truth.d or scales.d != truth.d:
        raise DimensionMismatchError(
            f"truth has d={truth.d}, u0 length {u0.size}, scales length {scales.d}"
        )
    if not h > 0.0:
        raise InvalidParameterError(f"bandwidth must be positive, got {h}")
    return u0


def _invert(matrix: np.ndarray, label: str) -> np.ndarray:
    try:
        inverse = np.linalg.inv(matrix)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"{label} is singular: {e}") from e
    if not np.all(np.isfinite(inverse)):
        raise NumericalError(f"{label} is singular")
    return inverse


def block_inverse(a11: np.ndarray, a12: np.ndarray, a21: np.ndarray, a22: np.ndarray) -> np.ndarray:
    """
    Inverse of [[A11, A12], [A21, A22]] through the Schur complement of A11.

    With Xi = (A22 - A21 A11^-1 A12)^-1:
        Q = [[A11^-1 (I + A12 Xi A21 A11^-1), -A11^-1 A12 Xi],
             [-Xi A21 A11^-1,                  Xi            ]]

    Raises:
        NumericalError: If A11 or the Schur complement is singular
    """
    a11_inv = _invert(a11, "A11")
    xi = _invert(a22 - a21 @ a11_inv @ a12, "Schur complement")
    top_left = a11_inv @ (np.eye(a11.shape[0]) + a12 @ xi @ a21 @ a11_inv)
    top_right = -a11_inv @ a12 @ xi
    bottom_left = -xi @ a21 @ a11_inv
    return np.block([[top_left, top_right], [bottom_left, xi]])


def theoretical_moments(
    truth: TruthModel,
    u0: Sequence[float],
    h: float,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    leading_order: bool = True,
    include_det: bool = True,
) -> TheoreticalMoments:
    """
    Limits of the rescaled moment blocks at u0, their block inverse Q and
    phi = Q11 Q11^T.

    Args:
        truth: Known model
        u0: Interior location
        h: Bandwidth
        scales: Scale parameters
        kernel: Kernel family, supplies kappa_2
        leading_order: Drop the O(h) off-diagonal blocks
        include_det: Carry the det(Lambda)^-1 factor in A (phi never carries it)

    Returns:
        TheoreticalMoments with A blocks, Q and phi
    """
    u0 = _check(truth, u0, h, scales)
    d, p = truth.d, truth.p
    kappa2 = kernel_moments(kernel).kappa2
    a_inv2 = scales.array ** -2.0
    factor = 1.0 / scales.det if include_det else 1.0

    f = truth.density(u0)
    omega = truth.omega(u0)
    omega_f = omega * f
    if f <= 0.0:
        raise NumericalError(f"location density vanishes at u0={tuple(u0)}")

    a11 = factor * omega_f
    a22 = factor * kappa2 * np.kron(np.diag(a_inv2), omega_f)
    if leading_order:
        a12 = np.zeros((p, d * p))
    else:
        d_omega = truth.omega_gradient(u0)
        df = truth.density_gradient(u0)
        derivative = [d_omega[s] * f + omega * df[s] for s in range(d)]
        a12 = factor * h * kappa2 * np.hstack([a_inv2[s] * derivative[s] for s in range(d)])
    a21 = a12.T

    q = block_inverse(a11, a12, a21, a22)
    q11_free = q[:p, :p] * factor
    phi = q11_free @ q11_free.T
    return TheoreticalMoments(
        a11=a11.tolist(),
        a12=a12.tolist(),
        a21=a21.tolist(),
        a22=a22.tolist(),
        q=q.tolist(),
        phi=(0.5 * (phi + phi.T)).tolist(),
    )


def _bias_driver(truth: TruthModel, u0: np.ndarray, h: float, scales: ScaleMatrix, kappa2: float) -> np.ndarray:
    """A2 = 1/2 det^-1 kappa2 h^2 f Omega sum_s a_s^-2 beta_ss, zero slope block."""
    curvature = (scales.array ** -2.0) @ truth.beta_second_derivatives(u0)
    intercept_block = (
        0.5 / scales.det * kappa2 * h * h * truth.density(u0) * truth.omega(u0) @ curvature
    )
    return np.concatenate([intercept_block, np.zeros(truth.d * truth.p)])


def theoretical_bias(
    truth: TruthModel,
    u0: Sequence[float],
    h: float,
    scales: ScaleMatrix,
    kernel: KernelSpec,
) -> np.ndarray:
    """
    Leading-term conditional bias at an interior u0, assembled as the first p
    rows of Q A2.

    Returns:
        p-vector

    Raises:
        NumericalError: If Omega(u0) f(u0) is singular
    """
    try:
        u0 = _check(truth, u0, h, scales)
        kappa2 = kernel_moments(kernel).kappa2
        moments = theoretical_moments(truth, u0, h, scales, kernel)
        q = np.asarray(moments.q)
        return (q @ _bias_driver(truth, u0, h, scales, kappa2))[: truth.p]
    except (NumericalError, DimensionMismatchError, InvalidParameterError):
        raise
    except Exception as e:
        logger.error(f"Failed to assemble theoretical bias: {e}")
        raise


def closed_form_bias(
    truth: TruthModel,
    u0: Sequence[float],
    h: float,
    scales: ScaleMatrix,
    kernel: KernelSpec,
) -> np.ndarray:
    """
    Bias in the closed form (kappa2 h^2 / 2) Omega^-1 sum_s a_s^-2 beta_ss.

    Agrees with theoretical_bias when Omega is the 1x1 identity; for general
    Omega the two differ by the factor Omega^-1 and the difference is reported.
    """
    u0 = _check(truth, u0, h, scales)
    kappa2 = kernel_moments(kernel).kappa2
    curvature = (scales.array ** -2.0) @ truth.beta_second_derivatives(u0)
    return 0.5 * kappa2 * h * h * _invert(truth.omega(u0), "Omega(u0)") @ curvature


def theoretical_variance(
    truth: TruthModel,
    u0: Sequence[float],
    h: float,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    n_total: int,
) -> np.ndarray:
    """
    Leading-term conditional variance
    (det(Lambda) N h^(d-1))^-1 phi kappa sigma f Omega, with kappa = (int K^2)^d.

    Returns:
        Symmetric (p, p) matrix
    """
    if n_total < 1:
        raise InvalidParameterError(f"N_total must be at least 1, got {n_total}")
    u0 = _check(truth, u0, h, scales)
    d = truth.d
    kappa = kernel_moments(kernel, d).kappa_d
    phi = np.asarray(theoretical_moments(truth, u0, h, scales, kernel).phi)
    inner = kappa * truth.sigma(u0) * truth.density(u0) * truth.omega(u0)
    variance = (phi @ inner) / (scales.det * n_total * h ** (d - 1))
    return 0.5 * (variance + variance.T)


def sandwich_variance(
    truth: TruthModel,
    u0: Sequence[float],
    h: float,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    n_total: int,
) -> np.ndarray:
    """
    Conditional variance N^-1 [Q Psi Q^T]_11 built from the unit-mass radial
    kernel, where Psi is the limit of the squared-weight moment blocks:

        Psi11 = h^-d det^-1 nu0 sigma f Omega
        Psi22 = h^-d det^-1 nu2 sigma f diag(a_s^-2) (x) Omega

    Its leading behaviour is det(Lambda) nu0 sigma Omega^-1 / (N h^d f).
    """
    if n_total < 1:
        raise InvalidParameterError(f"N_total must be at least 1, got {n_total}")
    u0 = _check(truth, u0, h, scales)
    d, p = truth.d, truth.p
    radial = radial_moments(kernel, d)
    f = truth.density(u0)
    omega = truth.omega(u0)
    a_inv2 = np.diag(scales.array ** -2.0)
    a11 = f * omega / scales.det
    a22 = radial.mu2 / scales.det * np.kron(a_inv2, f * omega)
    zeros = np.zeros((p, d * p))
    q = block_inverse(a11, zeros, zeros.T, a22)

    sigma_f = truth.sigma(u0) * f
    psi11 = radial.nu0 * sigma_f * omega / (scales.det * h ** d)
    psi22 = radial.nu2 * sigma_f * np.kron(a_inv2, omega) / (scales.det * h ** d)
    psi = np.block([[psi11, zeros], [zeros.T, psi22]])
    variance = (q @ psi @ q.T)[:p, :p] / n_total
    return 0.5 * (variance + variance.T)


# ==================== Moment statistics ====================

_LAMBDA_RANGE = {Lemma.L1: (0, 1, 2), Lemma.L2: (0, 1), Lemma.L3: (0, 1, 2)}


def _l_range(lemma: Lemma, d: int) -> tuple:
    if lemma == Lemma.L3:
        return (d - 1, d, d + 1)
    return (d - 1, d + 1)


def _check_lemma(lemma: Lemma, lam: int, s: int, l: int, d: int) -> int:
    lemma = Lemma(lemma)
    if lam not in _LAMBDA_RANGE[lemma]:
        raise InvalidParameterError(
            f"{lemma.value} takes lambda in {_LAMBDA_RANGE[lemma]}, got {lam}"
        )
    if l not in _l_range(lemma, d):
        raise InvalidParameterError(f"{lemma.value} takes l in {_l_range(lemma, d)}, got {l}")
    if not 1 <= s <= d:
        raise InvalidParameterError(f"dimension index s must lie in 1..{d}, got {s}")
    return s - 1


def lemma_moment_stat(
    dataset: Dataset,
    u0: Sequence[float],
    h: float,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    lemma: Lemma,
    lam: int,
    s: int,
    l: int,
    truth: Optional[TruthModel] = None,
) -> np.ndarray:
    """
    Finite-sample moment statistic at u0 with unit-mass weights
    w_i = K(d(U_i, u0)/h) / (h m_d):

        L1: N^-1 sum w_i h^-l (U_is - u0_s)^lam x_i' x_i
        L2: N^-1 sum w_i h^-l (U_is - u0_s)^lam x_i' x_i Pi(U_i, u0),
            Pi_k = (U_i - u0) H beta_k(u0) (U_i - u0)^T
        L3: (N h^2l)^-1 sum w_i^2 (U_is - u0_s)^lam sigma(U_i) x_i' x_i

    Args:
        s: 1-based dimension index
        truth: Required for L2 (Hessians) and L3 (sigma)

    Returns:
        (p, p) matrix for L1 and L3, p-vector for L2

    Raises:
        InvalidParameterError: For (lambda, l) outside the statistic's range
    """
    lemma = Lemma(lemma)
    d = dataset.d
    axis = _check_lemma(lemma, lam, s, l, d)
    if scales.d != d:
        raise DimensionMismatchError(f"scales have length {scales.d}, dataset d={d}")
    if lemma != Lemma.L1 and truth is None:
        raise InvalidParameterError(f"{lemma.value} needs the truth model")

    u0 = np.asarray(u0, dtype=float).ravel()
    mass = radial_moments(kernel, d).mass
    weights = kernel.evaluate(scaled_distances(dataset.u, u0, scales) / h) / (h * mass)
    delta = dataset.u - u0
    n = dataset.n_records
    outer = np.einsum("ik,il->ikl", dataset.x, dataset.x)

    if lemma == Lemma.L1:
        factor = weights * h ** (-l) * delta[:, axis] ** lam
        return np.einsum("i,ikl->kl", factor, outer) / n
    if lemma == Lemma.L2:
        hessian = truth.beta_hessian(u0)
        curvature = np.einsum("is,kst,it->ik", delta, hessian, delta)
        factor = weights * h ** (-l) * delta[:, axis] ** lam
        return np.einsum("i,ikl,il->k", factor, outer, curvature) / n
    factor = weights ** 2 * delta[:, axis] ** lam * truth.sigma_at(dataset.u)
    return np.einsum("i,ikl->kl", factor, outer) / (n * h ** (2 * l))


def lemma_moment_limit(
    truth: TruthModel,
    u0: Sequence[float],
    h: float,
    scales: ScaleMatrix,
    kernel: KernelSpec,
    lemma: Lemma,
    lam: int,
    s: int,
    l: int,
) -> np.ndarray:
    """
    Leading term of lemma_moment_stat:

        L1: det^-1 a_s^-lam h^(lam+d-l-1) [mu_lam Omega f + h a_s^-1 mu_(lam+1) d_s(Omega f)]
        L2: det^-1 h^(d+1-l) mu2 Omega f sum_t a_t^-2 beta_tt for lam = 0, zero for lam = 1
        L3: det^-1 a_s^-lam h^(lam+d-2l-2) nu_lam sigma f Omega
    """
    lemma = Lemma(lemma)
    u0 = _check(truth, u0, h, scales)
    d = truth.d
    axis = _check_lemma(lemma, lam, s, l, d)
    radial = radial_moments(kernel, d)
    a = scales.array
    f = truth.density(u0)
    omega = truth.omega(u0)

    if lemma == Lemma.L1:
        derivative = truth.omega_gradient(u0)[axis] * f + omega * truth.density_gradient(u0)[axis]
        leading = radial.marginal_moment(lam) * omega * f
        correction = h / a[axis] * radial.marginal_moment(lam + 1) * derivative
        return (leading + correction) * h ** (lam + d - l - 1) / (scales.det * a[axis] ** lam)
    if lemma == Lemma.L2:
        if lam == 1:
            return np.zeros(truth.p)
        curvature = (a ** -2.0) @ truth.beta_second_derivatives(u0)
        return h ** (d + 1 - l) * radial.mu2 * f * (omega @ curvature) / scales.det
    scale = h ** (lam + d - 2 * l - 2) / (scales.det * a[axis] ** lam)
    return scale * radial.squared_moment(lam) * truth.sigma(u0) * f * omega
