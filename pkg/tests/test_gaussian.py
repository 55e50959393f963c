import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lisretrieval.errors import DimensionError, NumericalError
from lisretrieval.forward import LinearModel
from lisretrieval.gaussian import (GaussianPrior, InverseProblem, NoiseModel, build_empirical_prior, log_likelihood,
                                   log_posterior, log_prior, read_ensemble, whiten_jacobian, write_ensemble)
from lisretrieval.synthetic import (SyntheticConfig, bundled_ensemble_path, make_grid, synthetic_ensemble)

from conftest import random_spd


def test_log_prior_trivial():
    prior = GaussianPrior.from_covariance(np.zeros(2), np.eye(2))
    assert log_prior(np.zeros(2), prior) == 0.0
    assert log_prior(np.array([3.0, 4.0]), prior) == pytest.approx(-12.5, abs=1e-14)


def test_log_prior_dense_oracle(rng):
    cov = random_spd(5, rng)
    prior = GaussianPrior.from_covariance(rng.normal(size=5), cov)
    x = rng.normal(size=5)
    d = x - prior.mean
    assert log_prior(x, prior) == pytest.approx(-0.5 * d @ np.linalg.inv(cov) @ d, rel=1e-10)


def test_log_prior_rejects_bad_input():
    prior = GaussianPrior.from_covariance(np.zeros(2), np.eye(2))
    with pytest.raises(ValueError):
        log_prior(np.array([np.nan, 0.0]), prior)
    with pytest.raises(DimensionError):
        log_prior(np.zeros(3), prior)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
def test_log_prior_maximized_at_mean(delta):
    rng = np.random.default_rng(0)
    prior = GaussianPrior.from_covariance(rng.normal(size=4), random_spd(4, rng))
    assert log_prior(prior.mean + np.array(delta), prior) <= log_prior(prior.mean, prior) == 0.0


def test_log_likelihood_trivial():
    model = LinearModel(np.array([[1.0]]))
    p = InverseProblem(model, GaussianPrior.from_covariance([0.0], [[1.0]]),
                       NoiseModel.from_covariance([[4.0]]), np.array([3.0]))
    assert log_likelihood([3.0], p) == 0.0
    assert log_likelihood([1.0], p) == pytest.approx(-0.5, abs=1e-15)


def test_log_likelihood_dense_oracle(small_linear):
    x = np.array([0.3, -1.0, 2.0])
    r = small_linear.data - small_linear.forward(x)
    expected = -0.5 * r @ np.linalg.inv(small_linear.noise.covariance) @ r
    assert log_likelihood(x, small_linear) == pytest.approx(expected, rel=1e-10)


def test_log_likelihood_reports_wavelength_index():
    class Broken:
        state_dim, data_dim = 1, 3

        def __call__(self, x):
            return np.array([0.0, np.inf, 0.0])

    p = InverseProblem(Broken(), GaussianPrior.from_covariance([0.0], [[1.0]]),
                       NoiseModel.isotropic(1.0, 3), np.zeros(3))
    with pytest.raises(NumericalError) as err:
        log_likelihood([0.0], p)
    assert err.value.index == 1


def test_log_posterior(small_linear, rng):
    p = small_linear.with_data(small_linear.forward(small_linear.prior.mean))
    assert log_posterior(p.prior.mean, p) == 0.0
    for x in rng.normal(size=(20, 3)):
        assert log_posterior(x, small_linear) == pytest.approx(
            log_prior(x, small_linear.prior) + log_likelihood(x, small_linear), rel=1e-14)


def test_log_posterior_shift_invariance(small_linear, rng):
    shift = 7.5
    fwd = small_linear.forward
    shifted = InverseProblem(LinearModel(fwd.matrix, fwd.offset + shift), small_linear.prior,
                             small_linear.noise, small_linear.data + shift)
    for x in rng.normal(size=(5, 3)):
        assert log_posterior(x, shifted) == pytest.approx(log_posterior(x, small_linear), rel=1e-10)


def test_whiten_jacobian_cases(rng):
    j = rng.normal(size=(4, 3))
    np.testing.assert_array_equal(
        whiten_jacobian(j, GaussianPrior.from_covariance(np.zeros(3), np.eye(3)), NoiseModel.isotropic(1.0, 4)), j)
    out = whiten_jacobian(np.eye(3), GaussianPrior.from_covariance(np.zeros(3), 4 * np.eye(3)),
                          NoiseModel.isotropic(1.0, 3))
    np.testing.assert_allclose(out, 2 * np.eye(3), atol=1e-15)


def test_whiten_jacobian_dense_oracle_and_identity(rng):
    for _ in range(10):
        sp, so = random_spd(3, rng), random_spd(3, rng)
        prior, noise = GaussianPrior.from_covariance(np.zeros(3), sp), NoiseModel.from_covariance(so)
        j = rng.normal(size=(3, 3))
        jt = whiten_jacobian(j, prior, noise)
        np.testing.assert_allclose(jt, np.linalg.inv(noise.chol) @ j @ prior.chol, rtol=1e-10, atol=1e-12)
        lhs = jt.T @ jt
        rhs = prior.chol.T @ j.T @ np.linalg.inv(so) @ j @ prior.chol
        assert np.max(np.abs(lhs - rhs)) <= 1e-9 * max(1.0, np.max(np.abs(rhs)))


def test_cholesky_reproduction(rng):
    cov = random_spd(6, rng, cond=1e4)
    prior = GaussianPrior.from_covariance(np.zeros(6), cov)
    assert np.linalg.norm(prior.chol @ prior.chol.T - cov) / np.linalg.norm(cov) < 1e-10


def test_non_pd_prior_raises():
    with pytest.raises(NumericalError):
        GaussianPrior.from_covariance(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_empirical_prior_identical_profiles():
    prof = np.linspace(0, 1, 4)
    prior = build_empirical_prior(np.vstack([prof, prof]), jitter=1e-3)
    np.testing.assert_allclose(prior.covariance, 1e-3 * np.eye(4))
    np.testing.assert_array_equal(prior.mean, prof)


def test_empirical_prior_monte_carlo(rng):
    ens = rng.standard_normal((20000, 4))
    prior = build_empirical_prior(ens)
    # entrywise sampling sd ~ 1/sqrt(N) = 0.007
    np.testing.assert_allclose(prior.covariance, np.eye(4), atol=0.04)
    rec = prior.chol @ prior.chol.T
    assert np.linalg.norm(rec - prior.covariance) / np.linalg.norm(prior.covariance) < 1e-10


def test_empirical_prior_requires_two_rows():
    with pytest.raises(ValueError):
        build_empirical_prior(np.ones((1, 3)))


def test_bundled_ensemble_spectrum_decays_smoothly():
    profiles, alt = read_ensemble(bundled_ensemble_path())
    grid = make_grid(SyntheticConfig())
    np.testing.assert_allclose(alt, grid.midpoints)
    np.testing.assert_array_equal(profiles, synthetic_ensemble(grid))
    s = np.linalg.svd(build_empirical_prior(profiles).covariance, compute_uv=False)[:20]
    assert np.all(np.diff(s) < 0)
    assert s[19] > 1e-6 * s[0]
    # no cliff: consecutive ratios stay bounded
    assert np.max(s[:-1] / s[1:]) < 10


def test_ensemble_io_roundtrip(tmp_path, rng):
    prof = rng.normal(size=(3, 5))
    write_ensemble(tmp_path / "e.txt", prof, np.arange(5.0))
    back, alt = read_ensemble(tmp_path / "e.txt")
    np.testing.assert_array_equal(back, prof)
    np.testing.assert_array_equal(alt, np.arange(5.0))
    write_ensemble(tmp_path / "f.txt", prof)
    back, alt = read_ensemble(tmp_path / "f.txt")
    assert alt is None and back.shape == (3, 5)


def test_symmetry_check_tolerates_roundoff_only(rng):
    q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    cov = 1e-2 * q @ np.diag(np.geomspace(1.0, 0.2, 6)) @ q.T
    GaussianPrior.from_covariance(np.zeros(6), cov)
    bad = cov.copy()
    bad[0, 1] += 1e-6
    with pytest.raises(ValueError):
        GaussianPrior.from_covariance(np.zeros(6), bad)
