"""
Likelihood-informed subspace (LIS) construction and the LIS-reduced posterior.

The subspace is spanned by the leading right singular vectors ``V_r`` of a
(possibly averaged) prior- and noise-whitened Jacobian.  With ``L`` the prior
Cholesky factor,

    Phi_r = L V_r,        Theta_r = L^{-T} V_r,
    Phi_perp = L V_perp,  Theta_perp = L^{-T} V_perp,

so that ``Theta^T Phi = I`` and ``Phi_r Theta_r^T + Phi_perp Theta_perp^T = I``.
States are split around the prior mean, which makes both coordinate blocks
standard normal a priori.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionError, NumericalError
from .gaussian import GaussianPrior, InverseProblem, misfit, whiten_jacobian
from .prior_reduction import fix_signs


@dataclass(frozen=True)
class LisBasis:
    rank: int
    singular_values: np.ndarray
    V_r: np.ndarray
    V_perp: np.ndarray
    Phi_r: np.ndarray
    Theta_r: np.ndarray
    Phi_perp: np.ndarray
    Theta_perp: np.ndarray

    @property
    def dim(self) -> int:
        return self.V_r.shape[0]

    @property
    def projection(self) -> np.ndarray:
        """Oblique projector onto the LIS, ``Phi_r Theta_r^T``."""
        return self.Phi_r @ self.Theta_r.T


def whitened_jacobian(x, problem: InverseProblem) -> np.ndarray:
    return whiten_jacobian(problem.forward.jacobian(x), problem.prior, problem.noise)


def pp_hessian(x, problem: InverseProblem) -> np.ndarray:
    """Prior-preconditioned Gauss-Newton Hessian ``L^T J^T Sigma_obs^{-1} J L``."""
    jt = whitened_jacobian(x, problem)
    h = jt.T @ jt
    return 0.5 * (h + h.T)


def rayleigh(v, h_tilde) -> float:
    v = np.asarray(v, dtype=float)
    vv = float(v @ v)
    if vv == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector is undefined")
    return float(v @ np.asarray(h_tilde) @ v) / vv


def expected_jacobian(samples, problem: InverseProblem) -> np.ndarray:
    """Monte Carlo mean of whitened Jacobians over ``samples``.

    ``samples`` is an iterable of state vectors (rows of an array work);
    terms are accumulated in sample order so the result is reproducible.
    """
    total = None
    count = 0
    for x in samples:
        jt = whitened_jacobian(np.asarray(x, dtype=float), problem)
        total = jt if total is None else total + jt
        count += 1
    if count == 0:
        raise ValueError("expected_jacobian needs at least one sample")
    return total / count


def dof_signal(j_whitened, threshold: float = 1.0) -> int:
    """Number of whitened singular values >= ``threshold`` (ties count)."""
    s = np.linalg.svd(np.atleast_2d(j_whitened), compute_uv=False)
    return int(np.count_nonzero(s >= threshold))


def build_lis(j_hat, prior: GaussianPrior, rank: int | None = None,
              threshold: float | None = None) -> LisBasis:
    """LIS basis from a whitened Jacobian.

    Give either ``rank`` or ``threshold``; with neither, the threshold mode
    with ``threshold=1`` is used (keep singular values >= 1).
    """
    j_hat = np.atleast_2d(np.asarray(j_hat, dtype=float))
    m, n = j_hat.shape
    if n != prior.dim:
        raise DimensionError(f"J_hat has {n} columns, prior dimension is {prior.dim}", axis="state")
    if rank is not None and threshold is not None:
        raise ValueError("give rank or threshold, not both")
    if not np.all(np.isfinite(j_hat)):
        raise NumericalError("J_hat contains non-finite values")

    _, s, vt = np.linalg.svd(j_hat, full_matrices=True)
    sv = np.zeros(n)
    sv[: s.size] = s
    v = fix_signs(vt.T)

    if rank is None:
        tau = 1.0 if threshold is None else float(threshold)
        rank = int(np.count_nonzero(s >= tau))
        if rank == 0:
            raise ValueError(
                f"no singular values >= {tau}; no informative directions, supply the rank manually"
            )
    rank = int(rank)
    if not 1 <= rank <= min(m, n):
        raise ValueError(f"rank must be in [1, {min(m, n)}], got {rank}")

    L = prior.chol
    v_r, v_perp = v[:, :rank], v[:, rank:]
    theta = solve_triangular(L, v, lower=True, trans="T", check_finite=False)
    phi = L @ v
    arrays = dict(
        singular_values=sv,
        V_r=v_r, V_perp=v_perp,
        Phi_r=phi[:, :rank], Theta_r=theta[:, :rank],
        Phi_perp=phi[:, rank:], Theta_perp=theta[:, rank:],
    )
    for arr in arrays.values():
        arr.setflags(write=False)
    return LisBasis(rank=rank, **arrays)


def split(x, basis: LisBasis, prior: GaussianPrior) -> tuple[np.ndarray, np.ndarray]:
    """``(Theta_r^T (x - x0), Theta_perp^T (x - x0))``; columns of a matrix are split jointly."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != basis.dim:
        raise DimensionError(f"state has length {x.shape[0]}, basis dimension {basis.dim}", axis="state")
    d = x - (prior.mean if x.ndim == 1 else prior.mean[:, None])
    return basis.Theta_r.T @ d, basis.Theta_perp.T @ d


def recompose(x_r, x_perp, basis: LisBasis, prior: GaussianPrior) -> np.ndarray:
    """``x0 + Phi_r x_r + Phi_perp x_perp``.  ``x_perp=None`` means zero."""
    x_r = np.asarray(x_r, dtype=float)
    if x_r.shape[0] != basis.rank:
        raise DimensionError(f"x_r has length {x_r.shape[0]}, rank is {basis.rank}", axis="rank")
    out = basis.Phi_r @ x_r
    if x_perp is not None:
        x_perp = np.asarray(x_perp, dtype=float)
        if x_perp.shape[0] != basis.dim - basis.rank:
            raise DimensionError(
                f"x_perp has length {x_perp.shape[0]}, expected {basis.dim - basis.rank}",
                axis="complement",
            )
        out = out + basis.Phi_perp @ x_perp
    return out + (prior.mean if out.ndim == 1 else prior.mean[:, None])


def reduced_log_posterior_lis(x_r, problem: InverseProblem, basis: LisBasis) -> float:
    """``-misfit(x0 + Phi_r x_r) - |x_r|^2 / 2``; the complement carries no likelihood."""
    x_r = np.asarray(x_r, dtype=float)
    x = recompose(x_r, None, basis, problem.prior)
    return -misfit(x, problem) - 0.5 * float(x_r @ x_r)


def sample_complement(count: int, basis: LisBasis, seed=None) -> np.ndarray:
    """Standard-normal complement coordinates, shape ``(n - r, count)``."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((basis.dim - basis.rank, count))
