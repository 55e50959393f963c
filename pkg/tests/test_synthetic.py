import numpy as np
import pytest

from lisretrieval.errors import ConfigError
from lisretrieval.forward import simulate_spectrum
from lisretrieval.gaussian import read_ensemble
from lisretrieval.lis import dof_signal, whitened_jacobian
from lisretrieval.synthetic import (SyntheticConfig, build_synthetic_problem, bundled_ensemble_path,
                                    make_grid, synth_setup, synthetic_ensemble)


def test_deterministic():
    a, _ = synth_setup()
    b, _ = synth_setup()
    np.testing.assert_array_equal(a.cross_sections, b.cross_sections)
    p, q = build_synthetic_problem(seed=3), build_synthetic_problem(seed=3)
    np.testing.assert_array_equal(p.problem.data, q.problem.data)
    assert not np.array_equal(p.problem.data, build_synthetic_problem(seed=4).problem.data)


def test_config_errors():
    with pytest.raises(ConfigError):
        SyntheticConfig(n_lines=0)
    with pytest.raises(ConfigError):
        SyntheticConfig(wavelength_max=1600.0)


def test_default_problem_shapes_and_dof(synthetic):
    p = synthetic.problem
    assert p.state_dim == 50 and p.data_dim == 200
    assert 2 <= dof_signal(whitened_jacobian(p.prior.mean, p)) <= 6
    assert np.all(synthetic.noiseless > 0)


def test_noise_free_matches_forward():
    sp = build_synthetic_problem(seed=2, noise_free=True)
    np.testing.assert_array_equal(sp.problem.data, simulate_spectrum(sp.truth, sp.setup, sp.grid))
    np.testing.assert_allclose(sp.problem.data, sp.problem.forward(sp.truth), rtol=1e-14)


def test_residual_covariance_matches_noise_model():
    cfg = SyntheticConfig(n_wavelengths=30, n_layers=8)
    res = []
    for s in range(10_000):
        sp = build_synthetic_problem(cfg, seed=s)
        res.append(sp.problem.data - sp.noiseless)
    cov = np.cov(np.array(res).T)
    var = np.diag(sp.problem.noise.covariance)
    # sampling sd of a variance estimate is sqrt(2/N), of a correlation 1/sqrt(N)
    np.testing.assert_allclose(np.diag(cov), var, rtol=4 * np.sqrt(2 / 10_000))
    corr = cov / np.sqrt(np.outer(var, var))
    assert np.max(np.abs(corr - np.diag(np.diag(corr)))) < 5 / np.sqrt(10_000)


def test_bundled_ensemble_matches_generator():
    profiles, alt = read_ensemble(bundled_ensemble_path())
    grid = make_grid(SyntheticConfig())
    np.testing.assert_allclose(profiles, synthetic_ensemble(grid), rtol=1e-10)
    np.testing.assert_allclose(alt, grid.midpoints)
    assert np.all(profiles > 0)
