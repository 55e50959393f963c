"""Effective sample size, sample speed, marginal histograms and Hellinger distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

DEFAULT_BINS = 50
QUANTILE_RANGE = (0.001, 0.999)


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if edges.ndim != 1 or edges.size != masses.size + 1:
            raise DimensionError("need len(bin_edges) == len(masses) + 1", axis="bin")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(masses < 0) or abs(masses.sum() - 1.0) > 1e-12:
            raise ValueError("masses must be nonnegative and sum to one")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "masses", masses)


@dataclass(frozen=True)
class EssReport:
    n_eff: np.ndarray
    n_samples: int
    wall_time: float

    @property
    def speeds(self) -> np.ndarray:
        return sample_speed(self.n_eff, self.wall_time)

    @property
    def min_n_eff(self) -> float:
        return float(np.min(self.n_eff))

    @property
    def speed(self) -> float:
        """Summary sample speed: worst-mixing coordinate."""
        return float(sample_speed(self.min_n_eff, self.wall_time))


def autocorr(series, max_lag: int | None = None) -> np.ndarray:
    """Biased (divide-by-N) autocorrelation, ``rho[0] == 1``."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if x.ndim != 1 or n < 2:
        raise ValueError("autocorrelation needs a 1-d series of length >= 2")
    if np.ptp(x) == 0:
        raise ValueError("autocorrelation of a constant series is undefined")
    x = x - x.mean()
    var = float(x @ x) / n
    if max_lag is None:
        max_lag = n - 1
    max_lag = min(int(max_lag), n - 1)
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, size)
    acov = np.fft.irfft(f * np.conj(f), size)[: max_lag + 1] / n
    return acov / var


def ess(series, max_lag: int | None = None) -> float:
    """``N / (1 + 2 sum_k rho_k)`` with initial-positive-sequence truncation.

    The sum runs over lags ``1 .. K*-1`` where ``K*`` is the first lag with
    ``rho[K*] + rho[K*+1] < 0``.  The result is clamped to ``[1, N]``.
    """
    n = np.asarray(series).size
    rho = autocorr(series, max_lag)
    pair = rho[1:-1] + rho[2:]
    neg = np.flatnonzero(pair < 0)
    k_star = neg[0] + 1 if neg.size else rho.size - 1
    tau = 1.0 + 2.0 * float(np.sum(rho[1:k_star]))
    if tau <= 0:
        return float(n)
    return float(np.clip(n / tau, 1.0, n))


def sample_speed(n_eff, wall_time: float):
    if not wall_time > 0:
        raise ValueError("wall time must be positive")
    return np.asarray(n_eff, dtype=float) / wall_time if np.ndim(n_eff) else float(n_eff) / wall_time


def ess_report(samples, wall_time: float) -> EssReport:
    """Per-coordinate ESS of an (N, d) sample matrix.

    Coordinates with zero variance get ``n_eff = N`` (they carry no
    autocorrelation to discount).
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    n = samples.shape[0]
    values = []
    for col in samples.T:
        try:
            values.append(ess(col))
        except ValueError:
            values.append(float(n))
    return EssReport(np.array(values), n, float(wall_time))


def shared_edges(columns, bins: int = DEFAULT_BINS, quantiles=QUANTILE_RANGE) -> np.ndarray:
    """Bin edges spanning the pooled quantile range of several 1-d samples."""
    pooled = np.concatenate([np.asarray(c, dtype=float).ravel() for c in columns])
    if pooled.size == 0:
        raise ValueError("cannot histogram an empty sample")
    lo, hi = np.quantile(pooled, quantiles)
    if not hi > lo:
        lo, hi = float(pooled.min()), float(pooled.max())
    if not hi > lo:
        return np.array([lo - 0.5, lo + 0.5])
    return np.linspace(lo, hi, bins + 1)


def histogram(values, edges) -> Histogram:
    """Mass histogram on ``edges``; values outside the range go to the end bins."""
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("cannot histogram an empty sample")
    edges = np.asarray(edges, dtype=float)
    k = edges.size - 1
    idx = np.searchsorted(edges, values, side="right") - 1
    idx = np.clip(idx, 0, k - 1)
    counts = np.bincount(idx, minlength=k).astype(float)
    return Histogram(edges, counts / counts.sum())


def marginal_histograms(chains, bins: int = DEFAULT_BINS) -> list[list[Histogram]]:
    """Per-coordinate histograms of several (N_i, d) sample sets on shared edges.

    Returns one list of ``d`` histograms per input, with identical edges for
    the same coordinate across inputs.
    """
    chains = [np.atleast_2d(np.asarray(c, dtype=float)) for c in chains]
    if not chains or any(c.shape[0] == 0 for c in chains):
        raise ValueError("empty chain")
    d = chains[0].shape[1]
    if any(c.shape[1] != d for c in chains):
        raise DimensionError("chains have different dimensions", axis="state")
    out = [[] for _ in chains]
    for j in range(d):
        edges = shared_edges([c[:, j] for c in chains], bins)
        for hists, c in zip(out, chains):
            hists.append(histogram(c[:, j], edges))
    return out


def hellinger(p: Histogram, q: Histogram) -> float:
    """Discrete Hellinger distance, in [0, 1]."""
    if p.bin_edges.shape != q.bin_edges.shape or not np.array_equal(p.bin_edges, q.bin_edges):
        raise ValueError("histograms must share bin edges")
    h = np.sqrt(0.5 * np.sum((np.sqrt(p.masses) - np.sqrt(q.masses)) ** 2))
    return float(min(h, 1.0))


def marginal_hellinger(chain_a, chain_b, bins: int = DEFAULT_BINS) -> np.ndarray:
    """Hellinger distance of each coordinate's marginal."""
    ha, hb = marginal_histograms([chain_a, chain_b], bins)
    return np.array([hellinger(p, q) for p, q in zip(ha, hb)])


def posterior_hellinger(chain_a, chain_b, bins: int = DEFAULT_BINS) -> float:
    """Mean over coordinates of marginal Hellinger distances."""
    return float(np.mean(marginal_hellinger(chain_a, chain_b, bins)))


def split_half_hellinger(chain, bins: int = DEFAULT_BINS) -> float:
    """Noise floor estimate: first half of a chain against its second half."""
    chain = np.atleast_2d(np.asarray(chain, dtype=float))
    half = chain.shape[0] // 2
    return posterior_hellinger(chain[:half], chain[half:2 * half], bins)


def envelope(samples, levels=(0.025, 0.975)) -> np.ndarray:
    """Per-coordinate ``mean, lower, upper`` quantiles of an (N, d) sample matrix, shape (d, 3)."""
    samples = np.atleast_2d(samples)
    lo, hi = np.quantile(samples, levels, axis=0)
    return np.column_stack([samples.mean(axis=0), lo, hi])
