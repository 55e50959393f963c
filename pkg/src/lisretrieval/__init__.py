"""Likelihood-informed dimension reduction for layered trace-gas profile retrievals."""

from .diagnostics import Histogram, ess, hellinger, posterior_hellinger
from .errors import ConfigError, DimensionError, NumericalError, RetrievalError
from .forward import AtmosphericGrid, BeerLambertModel, LinearModel, SpectralSetup, jacobian, simulate_spectrum
from .gaussian import (GaussianPrior, InverseProblem, NoiseModel, build_empirical_prior, log_likelihood,
                       log_posterior, log_prior, whiten_jacobian)
from .laplace import LaplaceApprox, gauss_newton_map, laplace_samples
from .lis import (LisBasis, build_lis, dof_signal, expected_jacobian, pp_hessian, rayleigh, recompose,
                  reduced_log_posterior_lis, sample_complement, split)
from .mcmc import Chain, SamplerConfig, run_am
from .prior_reduction import PriorBasis, build_prior_basis, lift, reduced_log_posterior_prired
from .synthetic import SyntheticConfig, build_synthetic_problem, synth_setup

__version__ = "0.1.0"
