import numpy as np
import pytest

from lisretrieval.errors import DimensionError
from lisretrieval.gaussian import GaussianPrior, log_likelihood
from lisretrieval.laplace import gauss_newton_map
from lisretrieval.linear import exact_posterior, random_linear_problem
from lisretrieval.prior_reduction import build_prior_basis, lift, reduced_log_posterior_prired, write_basis

from conftest import random_spd


def test_identity_prior_full_rank():
    b = build_prior_basis(GaussianPrior.from_covariance(np.zeros(4), np.eye(4)), 4)
    np.testing.assert_allclose(b.basis.T @ b.basis, np.eye(4), atol=1e-12)


def test_dominant_axis():
    b = build_prior_basis(GaussianPrior.from_covariance(np.zeros(2), np.diag([4.0, 1.0])), 1)
    np.testing.assert_allclose(b.basis[:, 0], [2.0, 0.0], atol=1e-14)


def test_eckart_young(rng):
    cov = random_spd(6, rng)
    b = build_prior_basis(GaussianPrior.from_covariance(np.zeros(6), cov), 3)
    s = np.linalg.svd(cov, compute_uv=False)
    assert np.linalg.norm(b.basis @ b.basis.T - cov, 2) == pytest.approx(s[3], abs=1e-9)
    gram = b.basis.T @ b.basis
    np.testing.assert_allclose(gram, np.diag(s[:3]), atol=1e-9)


def test_sign_convention_and_rank_check(rng):
    prior = GaussianPrior.from_covariance(np.zeros(5), random_spd(5, rng))
    b = build_prior_basis(prior, 5)
    for col in b.vectors.T:
        assert col[np.argmax(np.abs(col))] > 0
    for r in (0, 6):
        with pytest.raises(ValueError):
            build_prior_basis(prior, r)


def test_lift(rng):
    prior = GaussianPrior.from_covariance(rng.normal(size=5), random_spd(5, rng))
    b = build_prior_basis(prior, 2)
    np.testing.assert_array_equal(lift(np.zeros(2), b, prior), prior.mean)
    np.testing.assert_allclose(lift(np.array([1.0, 0.0]), b, prior),
                               prior.mean + np.sqrt(b.singular_values[0]) * b.vectors[:, 0])
    with pytest.raises(DimensionError):
        lift(np.zeros(3), b, prior)


def test_lifted_standard_normal_covariance(rng):
    prior = GaussianPrior.from_covariance(rng.normal(size=5), random_spd(5, rng))
    b = build_prior_basis(prior, 3)
    x = lift(rng.standard_normal((3, 10_000)), b, prior)
    target = b.basis @ b.basis.T
    assert np.linalg.norm(np.cov(x) - target, 2) / np.linalg.norm(target, 2) < 0.05


def test_reduced_posterior_definition(small_linear, rng):
    b = build_prior_basis(small_linear.prior, 2)
    p0 = small_linear.with_data(small_linear.forward(small_linear.prior.mean))
    assert reduced_log_posterior_prired(np.zeros(2), p0, b) == 0.0
    for a in rng.normal(size=(20, 2)):
        expected = log_likelihood(lift(a, b, small_linear.prior), small_linear) - 0.5 * a @ a
        assert reduced_log_posterior_prired(a, small_linear, b) == expected


def test_reduced_map_matches_conjugate_oracle():
    problem, _ = random_linear_problem(n=6, seed=4)
    b = build_prior_basis(problem.prior, 3)
    # conjugate posterior on alpha with design G P_r and unit prior, dense inverses
    g = problem.forward.matrix @ b.basis
    so_inv = np.linalg.inv(problem.noise.covariance)
    resid = problem.data - problem.forward(problem.prior.mean)
    alpha = np.linalg.solve(g.T @ so_inv @ g + np.eye(3), g.T @ so_inv @ resid)
    from scipy.optimize import minimize
    res = minimize(lambda a: -reduced_log_posterior_prired(a, problem, b), np.zeros(3),
                   method="BFGS", options={"gtol": 1e-10})
    np.testing.assert_allclose(res.x, alpha, atol=1e-5)


def test_full_rank_matches_exact_posterior():
    from lisretrieval.linear import prired_posterior

    problem, _ = random_linear_problem(n=6, seed=5)
    b = build_prior_basis(problem.prior, 6)
    approx = prired_posterior(problem, b)
    exact = exact_posterior(problem)
    np.testing.assert_allclose(approx.mean, exact.mean, atol=1e-8)
    np.testing.assert_allclose(approx.cov, exact.cov, atol=1e-8)


def test_write_basis(tmp_path, rng):
    write_basis(tmp_path / "b.csv", rng.normal(size=(5, 2)), "u")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "layer,u1,u2" and len(lines) == 6
