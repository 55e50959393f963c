"""Gauss-Newton MAP estimate and the Laplace (Gaussian) posterior approximation."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, solve_triangular

from .errors import NumericalError
from .gaussian import InverseProblem, log_posterior

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LaplaceApprox:
    map_point: np.ndarray
    post_cov: np.ndarray
    post_chol: np.ndarray
    iterations: int
    converged: bool


def _whitened_system(w, problem):
    prior, noise = problem.prior, problem.noise
    x = prior.mean + prior.chol @ w
    jt = solve_triangular(noise.chol, problem.forward.jacobian(x), lower=True) @ prior.chol
    r = noise.whiten(problem.data - problem.forward(x))
    return x, jt, r


def gauss_newton_map(problem: InverseProblem, x_init=None, max_iter: int = 50,
                     tol: float = 1e-8, max_halvings: int = 10) -> LaplaceApprox:
    """Maximize the posterior by Gauss-Newton iteration.

    Each step solves ``(H + Sigma_pr^{-1}) dx = J^T Sigma_obs^{-1} (y - F(x)) - Sigma_pr^{-1}(x - x0)``,
    carried out in prior-whitened coordinates where the system matrix is
    ``Jt^T Jt + I``.  A step that lowers the log-posterior is halved up to
    ``max_halvings`` times.  Iteration stops when ``|dx| / (1 + |x|) < tol``;
    ``iterations`` counts the steps actually applied.
    """
    prior = problem.prior
    x = prior.mean.copy() if x_init is None else np.asarray(x_init, dtype=float).copy()
    if not np.all(np.isfinite(x)):
        raise NumericalError("initial point is not finite")
    w = prior.whiten(x)
    n = prior.dim
    converged = False
    iterations = 0
    current = log_posterior(x, problem)

    for _ in range(max_iter):
        x, jt, r = _whitened_system(w, problem)
        a = jt.T @ jt + np.eye(n)
        dw = cho_solve(cho_factor(a, lower=True), jt.T @ r - w)
        dx = prior.chol @ dw
        if not np.all(np.isfinite(dx)):
            raise NumericalError("Gauss-Newton step is not finite")
        if np.linalg.norm(dx) / (1.0 + np.linalg.norm(x)) < tol:
            converged = True
            break
        step = 1.0
        for _ in range(max_halvings + 1):
            trial = log_posterior(x + step * dx, problem)
            if np.isfinite(trial) and trial >= current:
                break
            step *= 0.5
        else:
            logger.debug("step halving exhausted at iteration %d", iterations)
        w = w + step * dw
        current = log_posterior(prior.mean + prior.chol @ w, problem)
        iterations += 1
        if not np.isfinite(current):
            raise NumericalError("Gauss-Newton iterate has non-finite posterior")

    x, jt, _ = _whitened_system(w, problem)
    a = jt.T @ jt + np.eye(n)
    # Sigma_post = L (Jt^T Jt + I)^{-1} L^T
    ca = cholesky(a, lower=True)
    m = solve_triangular(ca, prior.chol.T, lower=True)
    post_cov = m.T @ m
    post_cov = 0.5 * (post_cov + post_cov.T)
    try:
        post_chol = cholesky(post_cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("posterior covariance is not positive definite") from exc
    for arr in (x, post_cov, post_chol):
        arr.setflags(write=False)
    return LaplaceApprox(x, post_cov, post_chol, iterations, converged)


def laplace_samples(approx: LaplaceApprox, count: int = 1000, seed=None) -> np.ndarray:
    """Draws from N(map_point, post_cov) as an (n, count) matrix."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if not approx.converged:
        warnings.warn("sampling from a non-converged Laplace approximation", RuntimeWarning)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((approx.map_point.size, count))
    return approx.map_point[:, None] + approx.post_chol @ z
