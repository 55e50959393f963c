"""
Gaussian prior, Gaussian noise and the unnormalized log-densities built on them.

Quadratic forms are evaluated with triangular solves against the Cholesky
factors; no covariance is ever inverted explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cholesky, solve_triangular

from .errors import DimensionError, NumericalError
from .forward import check_finite_spectrum


def _chol(cov: np.ndarray, what: str) -> np.ndarray:
    try:
        return cholesky(cov, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"{what} covariance is not positive definite: {exc}") from exc


def _symmetric(cov, what: str) -> np.ndarray:
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DimensionError(f"{what} covariance must be square", axis=what)
    scale = float(np.max(np.abs(cov))) if cov.size else 0.0
    if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12 * scale:
        raise ValueError(f"{what} covariance is not symmetric")
    return 0.5 * (cov + cov.T)


@dataclass(frozen=True)
class GaussianPrior:
    """N(mean, covariance) with lower Cholesky factor ``chol``."""

    mean: np.ndarray
    covariance: np.ndarray
    chol: np.ndarray

    @classmethod
    def from_covariance(cls, mean, covariance) -> "GaussianPrior":
        mean = np.asarray(mean, dtype=float)
        cov = _symmetric(covariance, "prior")
        if mean.shape != (cov.shape[0],):
            raise DimensionError(
                f"prior mean has length {mean.size}, covariance is {cov.shape[0]}", axis="state"
            )
        chol = _chol(cov, "prior")
        for arr in (mean, cov, chol):
            arr.setflags(write=False)
        return cls(mean, cov, chol)

    @property
    def dim(self) -> int:
        return self.mean.size

    def whiten(self, x) -> np.ndarray:
        """``L^{-1} (x - mean)``; accepts a vector or an (n, k) matrix of columns."""
        x = np.asarray(x, dtype=float)
        centered = x - (self.mean if x.ndim == 1 else self.mean[:, None])
        return solve_triangular(self.chol, centered, lower=True, check_finite=False)

    def sample(self, count: int, seed=None) -> np.ndarray:
        """``count`` prior draws as an (n, count) matrix."""
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((self.dim, count))
        return self.mean[:, None] + self.chol @ z


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean Gaussian observation error N(0, covariance)."""

    covariance: np.ndarray
    chol: np.ndarray

    @classmethod
    def from_covariance(cls, covariance) -> "NoiseModel":
        cov = _symmetric(covariance, "noise")
        chol = _chol(cov, "noise")
        cov.setflags(write=False)
        chol.setflags(write=False)
        return cls(cov, chol)

    @classmethod
    def isotropic(cls, sigma: float, m: int) -> "NoiseModel":
        if not sigma > 0:
            raise ValueError("noise standard deviation must be positive")
        return cls.from_covariance(sigma**2 * np.eye(m))

    @property
    def dim(self) -> int:
        return self.covariance.shape[0]

    def whiten(self, r) -> np.ndarray:
        return solve_triangular(self.chol, r, lower=True, check_finite=False)

    def sample(self, count: int, seed=None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        return self.chol @ rng.standard_normal((self.dim, count))


@dataclass(frozen=True)
class InverseProblem:
    """``y = F(x) + eps`` with Gaussian prior on x and Gaussian eps.

    ``forward`` is any callable with a ``jacobian(x)`` method, e.g.
    :class:`~lisretrieval.forward.BeerLambertModel` or
    :class:`~lisretrieval.forward.LinearModel`.
    """

    forward: object
    prior: GaussianPrior
    noise: NoiseModel
    data: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.data, dtype=float)
        if y.shape != (self.noise.dim,):
            raise DimensionError(
                f"data has length {y.size}, noise model has {self.noise.dim}", axis="data"
            )
        n = getattr(self.forward, "state_dim", self.prior.dim)
        m = getattr(self.forward, "data_dim", self.noise.dim)
        if n != self.prior.dim:
            raise DimensionError(f"forward model state dim {n} != prior dim {self.prior.dim}", axis="state")
        if m != self.noise.dim:
            raise DimensionError(f"forward model data dim {m} != noise dim {self.noise.dim}", axis="data")
        y.setflags(write=False)
        object.__setattr__(self, "data", y)

    @property
    def state_dim(self) -> int:
        return self.prior.dim

    @property
    def data_dim(self) -> int:
        return self.noise.dim

    def with_data(self, data) -> "InverseProblem":
        return InverseProblem(self.forward, self.prior, self.noise, data)


def _vector(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise DimensionError(f"expected vector of length {n}, got shape {x.shape}", axis="state")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    return x


def log_prior(x, prior: GaussianPrior) -> float:
    """``-0.5 (x - x0)^T Sigma_pr^{-1} (x - x0)``, normalization dropped."""
    w = prior.whiten(_vector(x, prior.dim))
    return -0.5 * float(w @ w)


def misfit(x, problem: InverseProblem) -> float:
    """Data misfit ``0.5 (y - F(x))^T Sigma_obs^{-1} (y - F(x))``."""
    fx = check_finite_spectrum(problem.forward(_vector(x, problem.state_dim)))
    r = problem.noise.whiten(problem.data - fx)
    return 0.5 * float(r @ r)


def log_likelihood(x, problem: InverseProblem) -> float:
    return -misfit(x, problem)


def log_posterior(x, problem: InverseProblem) -> float:
    return log_likelihood(x, problem) + log_prior(x, problem.prior)


def whiten_jacobian(J, prior: GaussianPrior, noise: NoiseModel) -> np.ndarray:
    """Pre-whitened Jacobian ``L_obs^{-1} J L_pr``."""
    J = np.atleast_2d(np.asarray(J, dtype=float))
    if J.shape != (noise.dim, prior.dim):
        raise DimensionError(
            f"Jacobian shape {J.shape}, expected {(noise.dim, prior.dim)}", axis="jacobian"
        )
    if np.any(np.diag(noise.chol) == 0):
        raise NumericalError("noise Cholesky factor is singular")
    return solve_triangular(noise.chol, J, lower=True, check_finite=False) @ prior.chol


def build_empirical_prior(ensemble, jitter: float = 1e-6) -> GaussianPrior:
    """Gaussian prior from an ensemble of profiles (one profile per row).

    The sample covariance is regularized by ``jitter * mean(diag) * I`` so that
    rank-deficient ensembles still give a factorizable prior.  Two identical
    profiles give a pure jitter covariance; with zero variance everywhere the
    jitter is applied as an absolute scale.
    """
    ens = np.atleast_2d(np.asarray(ensemble, dtype=float))
    if ens.shape[0] < 2:
        raise ValueError("ensemble needs at least two profiles")
    if not np.all(np.isfinite(ens)):
        raise ValueError("ensemble contains non-finite values")
    mean = ens.mean(axis=0)
    cov = np.cov(ens, rowvar=False, ddof=1)
    cov = np.atleast_2d(cov)
    scale = float(np.mean(np.diag(cov)))
    if scale <= 0:
        scale = 1.0
    cov = cov + jitter * scale * np.eye(ens.shape[1])
    try:
        return GaussianPrior.from_covariance(mean, cov)
    except NumericalError as exc:
        raise NumericalError(
            f"empirical covariance not positive definite with jitter={jitter}; "
            "increase the jitter"
        ) from exc


def read_ensemble(path) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a whitespace-separated ensemble file.

    Returns ``(profiles, altitudes)``; ``altitudes`` is taken from an optional
    first row starting with ``#`` and is ``None`` when absent.
    """
    altitudes = None
    with open(Path(path)) as fh:
        first = fh.readline()
    if first.lstrip().startswith("#"):
        altitudes = np.array([float(v) for v in first.lstrip()[1:].split()])
    profiles = np.loadtxt(path, comments="#", ndmin=2)
    if altitudes is not None and altitudes.size != profiles.shape[1]:
        raise DimensionError("altitude header length does not match profile length", axis="layer")
    return profiles, altitudes


def write_ensemble(path, profiles, altitudes=None) -> None:
    profiles = np.atleast_2d(profiles)
    with open(Path(path), "w") as fh:
        if altitudes is not None:
            fh.write("# " + " ".join(repr(float(a)) for a in altitudes) + "\n")
        for row in profiles:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def write_prior(directory, prior: GaussianPrior) -> None:
    """Write ``prior_mean.csv`` and ``prior_covariance.csv`` into ``directory``."""
    directory = Path(directory)
    np.savetxt(directory / "prior_mean.csv", prior.mean[:, None], delimiter=",",
               header="mean", comments="", fmt="%.17g")
    header = ",".join(f"x{i}" for i in range(prior.dim))
    np.savetxt(directory / "prior_covariance.csv", prior.covariance, delimiter=",",
               header=header, comments="", fmt="%.17g")
