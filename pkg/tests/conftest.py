import numpy as np
import pytest

from lisretrieval.forward import LinearModel
from lisretrieval.gaussian import GaussianPrior, InverseProblem, NoiseModel
from lisretrieval.synthetic import SyntheticConfig, build_synthetic_problem


def random_spd(n, rng, cond=10.0):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return q @ np.diag(np.geomspace(1.0, 1.0 / cond, n)) @ q.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_linear(rng):
    """3-state, 5-datum affine problem with correlated prior and noise."""
    n, m = 3, 5
    prior = GaussianPrior.from_covariance(rng.normal(size=n), random_spd(n, rng))
    noise = NoiseModel.from_covariance(0.1 * random_spd(m, rng))
    model = LinearModel(rng.normal(size=(m, n)), rng.normal(size=m))
    y = model(prior.mean) + rng.normal(size=m)
    return InverseProblem(model, prior, noise, y)


@pytest.fixture(scope="session")
def synthetic():
    return build_synthetic_problem(SyntheticConfig(), seed=0)
