"""
Self-contained synthetic retrieval problem: Lorentzian cross sections, a
smooth profile ensemble standing in for a satellite climatology, and the
default prior/noise built from them.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError
from .forward import AtmosphericGrid, BeerLambertModel, SpectralSetup, simulate_spectrum
from .gaussian import GaussianPrior, InverseProblem, NoiseModel, build_empirical_prior, whiten_jacobian

DOF_RANGE = (2, 6)
MAX_ADJUSTMENTS = 10


@dataclass(frozen=True)
class SyntheticConfig:
    n_wavelengths: int = 200
    n_layers: int = 50
    n_lines: int = 10
    seed: int = 1
    wavelength_min: float = 1640.0
    wavelength_max: float = 1650.0
    top_altitude: float = 50.0
    line_strength: float = 0.02
    line_width: float = 0.08          # Lorentz HWHM at the surface, nm
    min_line_width: float = 0.004     # Doppler-like floor, nm
    pressure_scale_height: float = 7.0
    strength_scale_height: float = 40.0
    n_background_lines: int = 4
    background_strength: float = 0.01
    instrument_poly: tuple = (0.0, 2.0e-4, 0.6)
    instrument_offset: float = 0.01
    noise_rel: float = 1e-3
    ensemble_size: int = 400
    correlation_length: float = 6.0
    jitter: float = 1e-6

    def __post_init__(self):
        if self.n_lines < 1:
            raise ConfigError("at least one absorption line is required")
        if self.n_wavelengths < 2 or self.n_layers < 1:
            raise ConfigError("need at least two wavelengths and one layer")
        if not self.wavelength_max > self.wavelength_min:
            raise ConfigError("wavelength_max must exceed wavelength_min")
        if self.line_strength <= 0 or self.line_width <= 0:
            raise ConfigError("line strength and width must be positive")
        if self.noise_rel <= 0:
            raise ConfigError("noise_rel must be positive")
        if self.ensemble_size < 2:
            raise ConfigError("ensemble_size must be >= 2")

    def to_dict(self) -> dict:
        return asdict(self)


def make_grid(config: SyntheticConfig) -> AtmosphericGrid:
    return AtmosphericGrid(np.linspace(0.0, config.top_altitude, config.n_layers + 1))


def lorentzian(lam, center, hwhm):
    return hwhm / np.pi / ((lam - center) ** 2 + hwhm**2)


def _line_table(lam, z, centers, strengths, config):
    # pressure broadening narrows lines with altitude; strength decays slowly
    width = config.line_width * np.exp(-z / config.pressure_scale_height) + config.min_line_width
    decay = np.exp(-z / config.strength_scale_height)
    table = np.zeros((lam.size, z.size))
    for c, s in zip(centers, strengths):
        table += s * decay[None, :] * lorentzian(lam[:, None], c, width[None, :])
    return table


def mean_profile(z) -> np.ndarray:
    """Methane-like number density: scale-height decay times a stratospheric vmr drop."""
    z = np.asarray(z, dtype=float)
    vmr = 1.85 * (1.0 - 0.7 / (1.0 + np.exp(-(z - 22.0) / 5.0)))
    return vmr * np.exp(-z / 7.0)


def profile_covariance(z, correlation_length: float = 6.0) -> np.ndarray:
    """Squared-exponential correlation with relative spread widening above the tropopause."""
    z = np.asarray(z, dtype=float)
    rel = 0.03 + 0.12 / (1.0 + np.exp(-(z - 15.0) / 4.0))
    sd = rel * mean_profile(z)
    corr = np.exp(-0.5 * ((z[:, None] - z[None, :]) / correlation_length) ** 2)
    corr = 0.98 * corr + 0.02 * np.eye(z.size)
    return sd[:, None] * corr * sd[None, :]


def synthetic_ensemble(grid: AtmosphericGrid, size: int = 400, seed: int = 1,
                       correlation_length: float = 6.0) -> np.ndarray:
    """``size`` smooth correlated profiles, one per row."""
    z = grid.midpoints
    cov = profile_covariance(z, correlation_length)
    w, u = np.linalg.eigh(cov)
    root = u * np.sqrt(np.clip(w, 0.0, None))
    rng = np.random.default_rng(seed)
    return mean_profile(z)[None, :] + rng.standard_normal((size, z.size)) @ root.T


def default_prior(grid: AtmosphericGrid, config: SyntheticConfig) -> GaussianPrior:
    ens = synthetic_ensemble(grid, config.ensemble_size, config.seed, config.correlation_length)
    return build_empirical_prior(ens, config.jitter)


def default_noise(setup: SpectralSetup, config: SyntheticConfig) -> NoiseModel:
    sigma = config.noise_rel * float(np.max(setup.continuum))
    return NoiseModel.isotropic(sigma, setup.wavelengths.size)


def _assemble(config, grid, lam, solar, primary, background, bg_profile, scale):
    return SpectralSetup(
        wavelengths=lam,
        solar_intensity=solar,
        cross_sections=np.stack([scale * primary, background]),
        background_profiles=bg_profile[None, :],
        instrument_poly=config.instrument_poly,
        instrument_offset=config.instrument_offset,
    )


def synth_setup(config: SyntheticConfig | None = None) -> tuple[SpectralSetup, AtmosphericGrid]:
    """Build a deterministic synthetic spectral setup and grid.

    Line strengths of the retrieved gas are rescaled until the whitened
    Jacobian at the prior mean has between 2 and 6 singular values >= 1
    under the default prior and noise; :class:`ConfigError` if that fails
    within ``MAX_ADJUSTMENTS`` rescalings.
    """
    from .lis import dof_signal

    config = config or SyntheticConfig()
    grid = make_grid(config)
    z = grid.midpoints
    rng = np.random.default_rng(config.seed)
    lam = np.linspace(config.wavelength_min, config.wavelength_max, config.n_wavelengths)
    span = config.wavelength_max - config.wavelength_min
    margin = 0.05 * span

    centers = np.sort(rng.uniform(config.wavelength_min + margin, config.wavelength_max - margin,
                                  config.n_lines))
    strengths = config.line_strength * rng.uniform(0.3, 1.0, config.n_lines)
    primary = _line_table(lam, z, centers, strengths, config)

    bg_centers = rng.uniform(config.wavelength_min, config.wavelength_max, config.n_background_lines)
    bg_strengths = config.background_strength * rng.uniform(0.3, 1.0, config.n_background_lines)
    background = _line_table(lam, z, bg_centers, bg_strengths, config)
    bg_profile = 2.0 * np.exp(-z / 2.5)

    solar = 1.0 + 0.02 * np.sin(2 * np.pi * (lam - config.wavelength_min) / span)

    prior = default_prior(grid, config)
    scale = 1.0
    for _ in range(MAX_ADJUSTMENTS + 1):
        setup = _assemble(config, grid, lam, solar, primary, background, bg_profile, scale)
        model = BeerLambertModel(setup, grid)
        noise = default_noise(setup, config)
        jt = whiten_jacobian(model.jacobian(prior.mean), prior, noise)
        dof = dof_signal(jt)
        if DOF_RANGE[0] <= dof <= DOF_RANGE[1]:
            return setup, grid
        s = np.linalg.svd(jt, compute_uv=False)
        if s.size < 4 or s[3] <= 0:
            break
        # aim for three informative directions
        scale *= 1.0 / np.sqrt(s[2] * s[3])
    raise ConfigError(
        f"could not reach {DOF_RANGE[0]}-{DOF_RANGE[1]} informative directions "
        f"within {MAX_ADJUSTMENTS} strength adjustments"
    )


@dataclass(frozen=True)
class SyntheticProblem:
    problem: InverseProblem
    truth: np.ndarray
    noiseless: np.ndarray
    setup: SpectralSetup
    grid: AtmosphericGrid
    config: SyntheticConfig


def build_synthetic_problem(config: SyntheticConfig | None = None, seed: int = 0,
                            prior: GaussianPrior | None = None,
                            noise_free: bool = False) -> SyntheticProblem:
    """Synthetic measurement ``F(x_true) + eps`` with ``x_true`` drawn from the prior.

    ``seed`` drives the truth and noise draws; the setup itself depends only
    on ``config.seed``.
    """
    config = config or SyntheticConfig()
    setup, grid = synth_setup(config)
    prior = prior if prior is not None else default_prior(grid, config)
    noise = default_noise(setup, config)
    model = BeerLambertModel(setup, grid)
    rng = np.random.default_rng(seed)
    truth = prior.mean + prior.chol @ rng.standard_normal(prior.dim)
    # reference (validated) evaluation rather than the cached fast path
    noiseless = simulate_spectrum(truth, setup, grid)
    y = noiseless.copy()
    if not noise_free:
        y = y + noise.chol @ rng.standard_normal(noise.dim)
    problem = InverseProblem(model, prior, noise, y)
    return SyntheticProblem(problem, truth, noiseless, setup, grid, config)


def bundled_ensemble_path():
    """Path of the packaged ensemble file (default 50-layer grid, seed 1)."""
    from importlib.resources import files

    return files("lisretrieval") / "data" / "ensemble.txt"
