"""
Beer-Lambert forward model for a layered absorbing atmosphere.

The detected intensity at wavelength ``lam_j`` is

    I_j = I0_j * exp(-sum_k sum_l C[k, j, l] * rho_k[l] * dz[l]) * (a lam_j^2 + b lam_j + c) + d

with gas 0 the retrieved species and gases 1..K-1 held at fixed background
profiles.  Densities are piecewise constant within each layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, NumericalError


@dataclass(frozen=True)
class AtmosphericGrid:
    """Layer boundaries in km, strictly increasing, lowest >= 0."""

    layer_boundaries: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.layer_boundaries, dtype=float)
        if z.ndim != 1 or z.size < 2:
            raise DimensionError("need at least two layer boundaries", axis="layer")
        if not np.all(np.isfinite(z)):
            raise ValueError("layer boundaries must be finite")
        if z[0] < 0:
            raise ValueError("lowest layer boundary must be >= 0")
        if np.any(np.diff(z) <= 0):
            raise ValueError("layer boundaries must be strictly increasing")
        z.setflags(write=False)
        object.__setattr__(self, "layer_boundaries", z)

    @property
    def layer_count(self) -> int:
        return self.layer_boundaries.size - 1

    @property
    def thickness(self) -> np.ndarray:
        return np.diff(self.layer_boundaries)

    @property
    def midpoints(self) -> np.ndarray:
        z = self.layer_boundaries
        return 0.5 * (z[1:] + z[:-1])


@dataclass(frozen=True)
class SpectralSetup:
    """Everything the forward model needs apart from the retrieved profile.

    Attributes
    ----------
    wavelengths : (m,) array
        Wavelength grid in nm.
    solar_intensity : (m,) array
        Top-of-atmosphere intensity, strictly positive.
    cross_sections : (K, m, n) array
        Absorption coefficient per gas, wavelength and layer.  Gas 0 is the
        retrieved gas.
    background_profiles : (K-1, n) array
        Fixed densities of the non-retrieved gases.
    instrument_poly : (a, b, c)
        Baseline polynomial ``a*lam**2 + b*lam + c``.
    instrument_offset : float
        Additive offset ``d``.
    """

    wavelengths: np.ndarray
    solar_intensity: np.ndarray
    cross_sections: np.ndarray
    background_profiles: np.ndarray = None
    instrument_poly: tuple = (0.0, 0.0, 1.0)
    instrument_offset: float = 0.0

    def __post_init__(self):
        lam = np.asarray(self.wavelengths, dtype=float)
        i0 = np.asarray(self.solar_intensity, dtype=float)
        xs = np.asarray(self.cross_sections, dtype=float)
        if xs.ndim == 2:
            xs = xs[None]
        if lam.ndim != 1:
            raise DimensionError("wavelengths must be a vector", axis="wavelength")
        if xs.ndim != 3 or xs.shape[1] != lam.size:
            raise DimensionError(
                f"cross_sections has {xs.shape[1] if xs.ndim == 3 else '?'} wavelengths, "
                f"expected {lam.size}",
                axis="wavelength",
            )
        if i0.shape != lam.shape:
            raise DimensionError(
                f"solar_intensity has length {i0.size}, expected {lam.size}", axis="wavelength"
            )
        if not np.all(np.isfinite(xs)) or np.any(xs < 0):
            raise ValueError("cross sections must be finite and nonnegative")
        if not np.all(np.isfinite(i0)) or np.any(i0 <= 0):
            raise ValueError("solar intensity must be strictly positive")
        n_layers = xs.shape[2]
        if self.background_profiles is None:
            bg = np.zeros((xs.shape[0] - 1, n_layers))
        else:
            bg = np.atleast_2d(np.asarray(self.background_profiles, dtype=float))
            if xs.shape[0] == 1 and bg.size == 0:
                bg = np.zeros((0, n_layers))
        if bg.shape != (xs.shape[0] - 1, n_layers):
            raise DimensionError(
                f"background_profiles shape {bg.shape}, expected {(xs.shape[0] - 1, n_layers)}",
                axis="gas",
            )
        poly = tuple(float(p) for p in self.instrument_poly)
        if len(poly) != 3:
            raise ValueError("instrument_poly must hold (a, b, c)")
        for arr in (lam, i0, xs, bg):
            arr.setflags(write=False)
        object.__setattr__(self, "wavelengths", lam)
        object.__setattr__(self, "solar_intensity", i0)
        object.__setattr__(self, "cross_sections", xs)
        object.__setattr__(self, "background_profiles", bg)
        object.__setattr__(self, "instrument_poly", poly)
        object.__setattr__(self, "instrument_offset", float(self.instrument_offset))

    @property
    def gas_count(self) -> int:
        return self.cross_sections.shape[0]

    @property
    def layer_count(self) -> int:
        return self.cross_sections.shape[2]

    @property
    def baseline(self) -> np.ndarray:
        a, b, c = self.instrument_poly
        lam = self.wavelengths
        return a * lam**2 + b * lam + c

    @property
    def continuum(self) -> np.ndarray:
        """Detected intensity with no absorption at all."""
        return self.solar_intensity * self.baseline + self.instrument_offset


def _check(state, setup: SpectralSetup, grid: AtmosphericGrid) -> np.ndarray:
    x = np.asarray(state, dtype=float)
    if x.ndim != 1 or x.size != grid.layer_count:
        raise DimensionError(
            f"state has {x.size} layers, grid has {grid.layer_count}", axis="layer"
        )
    if setup.layer_count != grid.layer_count:
        raise DimensionError(
            f"cross sections have {setup.layer_count} layers, grid has {grid.layer_count}",
            axis="layer",
        )
    if not np.all(np.isfinite(x)):
        raise ValueError("state contains non-finite densities")
    return x


def _transmission_factor(x, setup, dz):
    # I0 * exp(-tau) * baseline, the derivative factor shared by F and J
    xs = setup.cross_sections
    tau = xs[0] @ (x * dz)
    if setup.gas_count > 1:
        tau = tau + np.einsum("kjl,kl->j", xs[1:], setup.background_profiles * dz)
    return setup.solar_intensity * np.exp(-tau) * setup.baseline


def simulate_spectrum(state, setup: SpectralSetup, grid: AtmosphericGrid) -> np.ndarray:
    """Detected spectrum for the retrieved-gas profile ``state``."""
    x = _check(state, setup, grid)
    return _transmission_factor(x, setup, grid.thickness) + setup.instrument_offset


def jacobian(state, setup: SpectralSetup, grid: AtmosphericGrid) -> np.ndarray:
    """Analytic (m, n) derivative of :func:`simulate_spectrum` w.r.t. ``state``."""
    x = _check(state, setup, grid)
    dz = grid.thickness
    factor = _transmission_factor(x, setup, dz)
    return -factor[:, None] * setup.cross_sections[0] * dz[None, :]


@dataclass(frozen=True)
class BeerLambertModel:
    """Callable forward operator bound to a setup and a grid."""

    setup: SpectralSetup
    grid: AtmosphericGrid

    def __post_init__(self):
        if self.setup.layer_count != self.grid.layer_count:
            raise DimensionError(
                f"cross sections have {self.setup.layer_count} layers, "
                f"grid has {self.grid.layer_count}",
                axis="layer",
            )
        setup, dz = self.setup, self.grid.thickness
        bg_tau = np.zeros(setup.wavelengths.size)
        if setup.gas_count > 1:
            bg_tau = np.einsum("kjl,kl->j", setup.cross_sections[1:], setup.background_profiles * dz)
        object.__setattr__(self, "_kernel", setup.cross_sections[0] * dz[None, :])
        object.__setattr__(self, "_scale", setup.solar_intensity * setup.baseline * np.exp(-bg_tau))

    @property
    def state_dim(self) -> int:
        return self.grid.layer_count

    @property
    def data_dim(self) -> int:
        return self.setup.wavelengths.size

    def __call__(self, x) -> np.ndarray:
        # hot path inside MCMC: skip the validation in simulate_spectrum
        x = np.asarray(x, dtype=float)
        if x.shape != (self.state_dim,):
            raise DimensionError(
                f"state has shape {x.shape}, expected ({self.state_dim},)", axis="layer"
            )
        return self._scale * np.exp(-(self._kernel @ x)) + self.setup.instrument_offset

    def jacobian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        factor = self._scale * np.exp(-(self._kernel @ x))
        return -factor[:, None] * self._kernel


@dataclass(frozen=True)
class LinearModel:
    """Affine forward operator ``F(x) = G x + offset``, for testing and toy runs."""

    matrix: np.ndarray
    offset: np.ndarray = field(default=None)

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        off = np.zeros(g.shape[0]) if self.offset is None else np.asarray(self.offset, float)
        if off.shape != (g.shape[0],):
            raise DimensionError("offset length must match matrix rows", axis="data")
        object.__setattr__(self, "matrix", g)
        object.__setattr__(self, "offset", off)

    @property
    def state_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def data_dim(self) -> int:
        return self.matrix.shape[0]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.state_dim,):
            raise DimensionError(
                f"state has shape {x.shape}, expected ({self.state_dim},)", axis="state"
            )
        return self.matrix @ x + self.offset

    def jacobian(self, x) -> np.ndarray:
        return self.matrix.copy()


def finite_difference_jacobian(func, x, rel_step: float = 1e-6) -> np.ndarray:
    """Central differences with step ``rel_step * (1 + |x_j|)``."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        h = rel_step * (1.0 + abs(x[j]))
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(func(x + e)) - np.asarray(func(x - e))) / (2 * h))
    return np.column_stack(cols)


def write_cross_sections(path, setup: SpectralSetup, gas: int = 0) -> None:
    """Export one gas's table as columns ``wavelength, layer, value``."""
    xs = setup.cross_sections[gas]
    m, n = xs.shape
    lam = np.repeat(setup.wavelengths, n)
    layer = np.tile(np.arange(n), m)
    with open(path, "w") as fh:
        fh.write("wavelength,layer,value\n")
        for w, l, v in zip(lam, layer, xs.ravel()):
            fh.write(f"{float(w)!r},{l},{float(v)!r}\n")


def read_cross_sections(path) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`write_cross_sections`; returns ``(wavelengths, table)``."""
    data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
    lam_all, layer, value = data[:, 0], data[:, 1].astype(int), data[:, 2]
    wavelengths, row = np.unique(lam_all, return_inverse=True)
    table = np.zeros((wavelengths.size, layer.max() + 1))
    table[row, layer] = value
    return wavelengths, table


def check_finite_spectrum(spectrum) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=float)
    bad = np.flatnonzero(~np.isfinite(spectrum))
    if bad.size:
        raise NumericalError(
            f"forward model produced non-finite intensity at wavelength index {bad[0]}",
            index=int(bad[0]),
        )
    return spectrum
