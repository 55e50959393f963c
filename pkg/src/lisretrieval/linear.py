"""
Closed-form posteriors for affine forward models, used as oracles.

With ``F(x) = G x + c`` every object in the pipeline (full posterior, LIS
approximation, prior-reduced approximation) is Gaussian and can be written
down exactly.  The full posterior here uses dense inverses on purpose so it
stays independent of the whitened code paths it is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .forward import LinearModel
from .gaussian import GaussianPrior, InverseProblem, NoiseModel
from .lis import LisBasis
from .prior_reduction import PriorBasis


@dataclass(frozen=True)
class GaussianPosterior:
    mean: np.ndarray
    cov: np.ndarray

    def sample(self, count: int, seed=None) -> np.ndarray:
        """``count`` draws as a (count, n) matrix.  Works for singular covariances."""
        w, u = np.linalg.eigh(0.5 * (self.cov + self.cov.T))
        root = u * np.sqrt(np.clip(w, 0.0, None))
        rng = np.random.default_rng(seed)
        return self.mean[None, :] + rng.standard_normal((count, self.mean.size)) @ root.T


def exact_posterior(problem: InverseProblem) -> GaussianPosterior:
    g = problem.forward.matrix
    c = problem.forward.offset
    sp_inv = np.linalg.inv(problem.prior.covariance)
    so_inv = np.linalg.inv(problem.noise.covariance)
    cov = np.linalg.inv(g.T @ so_inv @ g + sp_inv)
    mean = cov @ (g.T @ so_inv @ (problem.data - c) + sp_inv @ problem.prior.mean)
    return GaussianPosterior(mean, 0.5 * (cov + cov.T))


def _reduced(problem, basis_matrix):
    # posterior of coefficients a in x = x0 + B a, a ~ N(0, I)
    g = problem.forward.matrix
    so_inv = np.linalg.inv(problem.noise.covariance)
    gb = g @ basis_matrix
    resid = problem.data - problem.forward(problem.prior.mean)
    cov = np.linalg.inv(gb.T @ so_inv @ gb + np.eye(basis_matrix.shape[1]))
    return cov @ gb.T @ so_inv @ resid, cov


def lis_posterior(problem: InverseProblem, basis: LisBasis) -> GaussianPosterior:
    """Exact state-space law of the LIS approximation (complement = prior)."""
    m_r, c_r = _reduced(problem, basis.Phi_r)
    mean = problem.prior.mean + basis.Phi_r @ m_r
    cov = basis.Phi_r @ c_r @ basis.Phi_r.T + basis.Phi_perp @ basis.Phi_perp.T
    return GaussianPosterior(mean, 0.5 * (cov + cov.T))


def prired_posterior(problem: InverseProblem, basis: PriorBasis) -> GaussianPosterior:
    """Exact state-space law of the prior-reduced approximation (rank-deficient for r < n)."""
    m_a, c_a = _reduced(problem, basis.basis)
    mean = problem.prior.mean + basis.basis @ m_a
    cov = basis.basis @ c_a @ basis.basis.T
    return GaussianPosterior(mean, 0.5 * (cov + cov.T))


def gaussian_hellinger(p: GaussianPosterior, q: GaussianPosterior) -> float:
    """Hellinger distance between two nondegenerate multivariate normals."""
    avg = 0.5 * (p.cov + q.cov)
    _, ld_p = np.linalg.slogdet(p.cov)
    _, ld_q = np.linalg.slogdet(q.cov)
    _, ld_a = np.linalg.slogdet(avg)
    d = p.mean - q.mean
    log_bc = 0.25 * ld_p + 0.25 * ld_q - 0.5 * ld_a - 0.125 * d @ np.linalg.solve(avg, d)
    return float(np.sqrt(max(0.0, 1.0 - np.exp(log_bc))))


def marginal_gaussian_hellinger(p: GaussianPosterior, q: GaussianPosterior) -> np.ndarray:
    """Per-coordinate Hellinger distance between the 1-d marginals.

    A zero-variance marginal against a nonzero one gives distance 1.
    """
    s1 = np.sqrt(np.clip(np.diag(p.cov), 0.0, None))
    s2 = np.sqrt(np.clip(np.diag(q.cov), 0.0, None))
    tot = s1**2 + s2**2
    with np.errstate(divide="ignore", invalid="ignore"):
        bc = np.sqrt(2 * s1 * s2 / tot) * np.exp(-0.25 * (p.mean - q.mean) ** 2 / tot)
    bc = np.where(tot > 0, bc, 1.0)
    return np.sqrt(np.clip(1.0 - bc, 0.0, 1.0))


def random_linear_problem(n: int = 10, m: int | None = None, decay: float = 0.5,
                          prior_length: float = 2.0, noise_sd: float = 0.1,
                          seed=0) -> tuple[InverseProblem, np.ndarray]:
    """Random affine problem whose whitened singular values decay like ``decay**k``.

    The prior is a smooth squared-exponential covariance (slow spectral decay
    plus a nugget) so that prior truncation is a poor approximation while the
    data inform only a few directions.  Returns ``(problem, truth)``.
    """
    m = 2 * n if m is None else m
    rng = np.random.default_rng(seed)
    t = np.arange(n, dtype=float)
    cov = np.exp(-0.5 * ((t[:, None] - t[None, :]) / prior_length) ** 2) + 0.05 * np.eye(n)
    sd = 1.0 + 0.5 * rng.random(n)
    cov = sd[:, None] * cov * sd[None, :]
    prior = GaussianPrior.from_covariance(rng.normal(size=n), cov)
    noise = NoiseModel.isotropic(noise_sd, m)

    # G = L_obs W diag(s) V^T L_pr^{-1} gives whitened singular values s
    w, _ = np.linalg.qr(rng.normal(size=(m, n)))
    v, _ = np.linalg.qr(rng.normal(size=(n, n)))
    s = 10.0 * decay ** np.arange(n)
    g = noise.chol @ (w * s) @ v.T @ np.linalg.inv(prior.chol)
    model = LinearModel(g, rng.normal(size=m))
    truth = prior.mean + prior.chol @ rng.normal(size=n)
    y = model(truth) + noise.chol @ rng.normal(size=m)
    return InverseProblem(model, prior, noise, y), truth
