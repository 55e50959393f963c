"""
Adaptive Metropolis (Haario-style) random-walk sampler.

After ``adapt_start`` steps the Gaussian proposal covariance is replaced,
every ``adapt_interval`` steps, by ``scale * C_t + eps * I`` where ``C_t`` is
the running covariance of the chain (Welford updates) and ``scale`` defaults
to ``2.38**2 / d``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.linalg import cholesky

from .errors import ConfigError, NumericalError


@dataclass(frozen=True)
class SamplerConfig:
    chain_length: int = 100_000
    burn_in: int | None = None
    adapt_start: int = 1000
    adapt_interval: int = 100
    initial_proposal_cov: np.ndarray | None = None
    regularization_eps: float = 1e-10
    seed: int | None = 0
    scale: float | None = None

    def __post_init__(self):
        if self.chain_length < 1:
            raise ConfigError("chain_length must be positive")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", int(0.2 * self.chain_length))
        if not 0 <= self.burn_in < self.chain_length:
            raise ConfigError("burn_in must satisfy 0 <= burn_in < chain_length")
        if self.adapt_start < 1 or self.adapt_interval < 1:
            raise ConfigError("adapt_start and adapt_interval must be >= 1")
        if not self.regularization_eps > 0:
            raise ConfigError("regularization_eps must be positive")


@dataclass(frozen=True)
class Chain:
    samples: np.ndarray
    log_densities: np.ndarray
    accepted: np.ndarray
    wall_time_seconds: float
    burn_in: int = 0
    nan_count: int = 0
    frozen_adaptations: int = 0

    @property
    def dimension(self) -> int:
        return self.samples.shape[1]

    @property
    def length(self) -> int:
        return self.samples.shape[0]

    @property
    def kept(self) -> np.ndarray:
        """Samples after burn-in."""
        return self.samples[self.burn_in:]

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted[self.burn_in:]))


def _safe_eval(log_target, x) -> float:
    try:
        val = float(log_target(x))
    except (NumericalError, FloatingPointError, OverflowError):
        return float("nan")
    return val


def run_am(log_target: Callable[[np.ndarray], float], x_init, config: SamplerConfig) -> Chain:
    """Run one adaptive Metropolis chain.

    Proposals whose log-density is NaN (or whose evaluation raises a
    :class:`NumericalError`) are rejected and counted in ``nan_count``.
    """
    x = np.array(x_init, dtype=float, ndmin=1)
    if not np.all(np.isfinite(x)):
        raise NumericalError("initial point is not finite")
    lp = _safe_eval(log_target, x)
    if not np.isfinite(lp):
        raise NumericalError("log-density at the initial point is not finite")

    d = x.size
    n_steps = config.chain_length
    scale = 2.38**2 / d if config.scale is None else config.scale
    eps_eye = config.regularization_eps * np.eye(d)
    cov0 = 0.01 * np.eye(d) if config.initial_proposal_cov is None else np.atleast_2d(
        np.asarray(config.initial_proposal_cov, dtype=float))
    try:
        chol = cholesky(cov0 + eps_eye, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ConfigError("initial proposal covariance is not positive definite") from exc

    rng = np.random.default_rng(config.seed)
    z = rng.standard_normal((n_steps, d))
    log_u = np.log(rng.random(n_steps))

    samples = np.empty((n_steps, d))
    log_dens = np.empty(n_steps)
    accepted = np.zeros(n_steps, dtype=bool)
    nan_count = 0
    frozen = 0

    mean = x.copy()
    m2 = np.zeros((d, d))
    count = 1

    start = time.perf_counter()
    for i in range(n_steps):
        prop = x + chol @ z[i]
        lp_prop = _safe_eval(log_target, prop)
        if np.isnan(lp_prop):
            nan_count += 1
        elif log_u[i] < lp_prop - lp:
            x, lp = prop, lp_prop
            accepted[i] = True
        samples[i] = x
        log_dens[i] = lp

        count += 1
        delta = x - mean
        mean += delta / count
        m2 += np.outer(delta, x - mean)

        step = i + 1
        if step >= config.adapt_start and (step - config.adapt_start) % config.adapt_interval == 0:
            prop_cov = scale * (m2 / (count - 1)) + eps_eye
            try:
                chol = cholesky(prop_cov, lower=True, check_finite=False)
            except np.linalg.LinAlgError:
                frozen += 1
    wall = time.perf_counter() - start

    return Chain(samples, log_dens, accepted, wall, config.burn_in, nan_count, frozen)


def write_chain(path, samples, labels=None) -> None:
    """CSV export, one sample per row, header with dimension labels."""
    samples = np.atleast_2d(samples)
    if labels is None:
        labels = [f"x{i}" for i in range(samples.shape[1])]
    np.savetxt(Path(path), samples, delimiter=",", header=",".join(labels),
               comments="", fmt="%.10e")


def read_chain(path) -> np.ndarray:
    return np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
