"""Dimension reduction by truncating the SVD of the prior covariance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .gaussian import GaussianPrior, InverseProblem, misfit


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    vectors = np.array(vectors, dtype=float, copy=True)
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclass(frozen=True)
class PriorBasis:
    """Columns ``sqrt(lambda_i) u_i`` for the ``rank`` leading prior modes.

    ``singular_values`` keeps the whole prior spectrum for diagnostics and
    ``vectors`` the full set of (sign-fixed) singular vectors.
    """

    rank: int
    basis: np.ndarray
    singular_values: np.ndarray
    vectors: np.ndarray


def build_prior_basis(prior: GaussianPrior, rank: int) -> PriorBasis:
    n = prior.dim
    if not 1 <= rank <= n:
        raise ValueError(f"rank must be in [1, {n}], got {rank}")
    u, s, _ = np.linalg.svd(prior.covariance, hermitian=True)
    u = fix_signs(u)
    basis = u[:, :rank] * np.sqrt(s[:rank])
    for arr in (basis, s, u):
        arr.setflags(write=False)
    return PriorBasis(rank, basis, s, u)


def lift(alpha, basis: PriorBasis, prior: GaussianPrior) -> np.ndarray:
    """``x0 + P_r alpha``.  ``alpha`` may be a vector or an (r, k) matrix."""
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[0] != basis.rank:
        raise DimensionError(
            f"alpha has leading dimension {alpha.shape[0]}, basis rank is {basis.rank}",
            axis="rank",
        )
    mean = prior.mean if alpha.ndim == 1 else prior.mean[:, None]
    return mean + basis.basis @ alpha


def reduced_log_posterior_prired(alpha, problem: InverseProblem, basis: PriorBasis) -> float:
    """Log-density of the reduced coefficients: ``-misfit(x0 + P_r a) - |a|^2 / 2``."""
    alpha = np.asarray(alpha, dtype=float)
    x = lift(alpha, basis, problem.prior)
    return -misfit(x, problem) - 0.5 * float(alpha @ alpha)


def write_basis(path, columns: np.ndarray, label: str = "v") -> None:
    """Columnar text export, one row per layer."""
    columns = np.atleast_2d(columns)
    header = "layer," + ",".join(f"{label}{i + 1}" for i in range(columns.shape[1]))
    rows = np.column_stack([np.arange(columns.shape[0]), columns])
    np.savetxt(path, rows, delimiter=",", header=header, comments="",
               fmt=["%d"] + ["%.17g"] * columns.shape[1])
