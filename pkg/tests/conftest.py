"""
Pytest configuration and fixtures for testing.
Provides kernels, seeded datasets, truth models and scenarios.
"""

import numpy as np
import pytest

from gwle.schemas.dataset import Dataset
from gwle.schemas.fit import FitConfig
from gwle.schemas.kernel import KernelFamily, KernelSpec, ScaleMatrix
from gwle.schemas.scenario import SimulationScenario
from gwle.schemas.truth import TruthSpec
from gwle.services.truth_model import TruthModel


# Seed shared by the randomized fixtures
SEED = 20240601

# Interior evaluation grid of the benchmark scenario on [0, 3]^2
BENCHMARK_POINTS = [(a, b) for a in (1.2, 1.5, 1.8) for b in (1.2, 1.5, 1.8)]


def lattice_index(shape):
    """1-based lattice coordinates in C order, one row per position."""
    return np.indices(shape).reshape(len(shape), -1).T + 1


@pytest.fixture
def rng():
    """
    Provide a seeded numpy generator.
    """
    return np.random.default_rng(SEED)


@pytest.fixture
def gaussian_kernel():
    """
    Provide the gaussian kernel.
    """
    return KernelSpec(family=KernelFamily.GAUSSIAN)


@pytest.fixture
def epanechnikov_kernel():
    """
    Provide the epanechnikov kernel.
    """
    return KernelSpec(family=KernelFamily.EPANECHNIKOV)


@pytest.fixture
def unit_scales():
    """
    Provide identity scales in two dimensions.
    """
    return ScaleMatrix.identity(2)


@pytest.fixture
def make_dataset():
    """
    Provide a factory building a dataset on a full lattice.

    The factory takes (shape, u, x, y, intercept) and fills the lattice index.
    """

    def factory(shape, u, x, y, intercept=False):
        return Dataset(
            lattice_sizes=tuple(shape),
            intercept=intercept,
            index=lattice_index(shape),
            u=u,
            x=x,
            y=y,
        )

    return factory


@pytest.fixture
def affine_dataset(rng, make_dataset):
    """
    Provide a noiseless 20 x 20 sample whose coefficients are affine in u.

    d = 2, p = 2 with an intercept; beta1 = 1 + 2 u1 - u2 and
    beta2 = -0.5 + u1 + 3 u2 on locations uniform over [0, 1]^2.
    """
    shape = (20, 20)
    n = 400
    u = rng.uniform(size=(n, 2))
    x = np.column_stack([np.ones(n), rng.normal(1.0, 1.0, size=n)])
    beta = np.column_stack([1.0 + 2.0 * u[:, 0] - u[:, 1], -0.5 + u[:, 0] + 3.0 * u[:, 1]])
    y = np.sum(x * beta, axis=1)
    return make_dataset(shape, u, x, y, intercept=True)


@pytest.fixture
def affine_beta():
    """
    Provide the coefficient functions of affine_dataset.
    """

    def beta(u0):
        u1, u2 = u0
        return np.array([1.0 + 2.0 * u1 - u2, -0.5 + u1 + 3.0 * u2])

    return beta


@pytest.fixture
def noisy_dataset(rng, make_dataset):
    """
    Provide a 15 x 15 sample with curved coefficients and unit noise.
    """
    shape = (15, 15)
    n = 225
    u = rng.uniform(size=(n, 2))
    x = np.column_stack([np.ones(n), rng.normal(size=n)])
    beta = np.column_stack([np.sin(3.0 * u[:, 0]) + u[:, 1] ** 2, np.cos(2.0 * u[:, 1])])
    y = np.sum(x * beta, axis=1) + rng.normal(size=n)
    return make_dataset(shape, u, x, y, intercept=True)


@pytest.fixture
def gwle_config(gaussian_kernel, unit_scales):
    """
    Provide a gaussian fit configuration with h = 0.3.
    """
    return FitConfig(kernel=gaussian_kernel, scales=unit_scales, bandwidth=0.3)


@pytest.fixture
def benchmark_truth_spec():
    """
    Provide the benchmark truth: beta(u) = u1^2 + u2^2, intercept only,
    sigma = 0.25 and uniform locations on [0, 3]^2.
    """
    return TruthSpec.model_validate(
        {
            "dimension": 2,
            "beta": [
                {
                    "terms": [
                        {"coef": 1.0, "powers": [2, 0]},
                        {"coef": 1.0, "powers": [0, 2]},
                    ]
                }
            ],
            "sigma": {"family": "constant", "level": 0.25},
            "density": {"family": "uniform", "lower": [0.0, 0.0], "upper": [3.0, 3.0]},
            "covariates": {"intercept": True, "means": []},
        }
    )


@pytest.fixture
def benchmark_truth(benchmark_truth_spec):
    """
    Provide the benchmark TruthModel.
    """
    return TruthModel(benchmark_truth_spec)


@pytest.fixture
def regression_truth_spec():
    """
    Provide a truth with a random covariate: beta1 = 1 + u1 u2, beta2 = u1^2 - u2,
    quadratic sigma and product-beta locations on [0, 1]^2.
    """
    return TruthSpec.model_validate(
        {
            "dimension": 2,
            "beta": [
                {"terms": [{"coef": 1.0, "powers": [0, 0]}, {"coef": 1.0, "powers": [1, 1]}]},
                {"terms": [{"coef": 1.0, "powers": [2, 0]}, {"coef": -1.0, "powers": [0, 1]}]},
            ],
            "sigma": {
                "family": "quadratic",
                "level": 0.5,
                "curvature": [1.0, 2.0],
                "center": [0.5, 0.5],
            },
            "density": {
                "family": "product_beta",
                "lower": [0.0, 0.0],
                "upper": [1.0, 1.0],
                "alpha": [2.0, 3.0],
                "beta": [2.0, 2.0],
            },
            "covariates": {
                "intercept": True,
                "means": [{"offset": 0.5, "slope": [1.0, -0.5]}],
                "noise_scale": 0.8,
            },
        }
    )


@pytest.fixture
def regression_truth(regression_truth_spec):
    """
    Provide the TruthModel with a random covariate.
    """
    return TruthModel(regression_truth_spec)


@pytest.fixture
def benchmark_scenario(benchmark_truth_spec):
    """
    Provide a factory for benchmark scenarios; keyword arguments override fields.
    """

    def factory(**overrides):
        payload = {
            "truth": benchmark_truth_spec.model_dump(),
            "n_list": [[12, 12]],
            "dependence_range": 0,
            "seed": 7,
            "replicas": 50,
            "h_list": [0.3],
            "estimators": ["gwle"],
            "kernel": "gaussian",
            "eval_points": BENCHMARK_POINTS,
        }
        payload.update(overrides)
        return SimulationScenario.model_validate(payload)

    return factory
