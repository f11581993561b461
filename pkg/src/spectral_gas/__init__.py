"""Spectral statistics of random matrices from Schatten p-balls.

Closed-form constants, the limiting spectral laws, a Metropolis sampler for
the underlying log-gas, grid rate functions and a Frank-Wolfe equilibrium solver.
"""
__version__ = "0.1.0"

from .coulomb import GasChain, GasConfig, make_rng, mcmc_run, rejection_oracle
from .empirical import (
    EmpiricalMeasure,
    ks_distance,
    log_energy_offdiag,
    normalize_cone,
    normalize_singular,
    normalize_uniform,
    p_moment,
    pushforward_scale,
    singular_values,
    wasserstein1,
)
from .equilibrium import SolveReport, solve_equilibrium
from .ratefn import GridMeasure, beta_rate, grid_log_energy, rate_gas, rate_pair, rate_spectral
from .special import INF, ModelConstants, model_constants, parse_exponent, rate_constant_C
from .ullman import LimitLaw, h_density, log_energy_limit

__all__ = [
    "__version__",
    "EmpiricalMeasure",
    "ks_distance",
    "log_energy_offdiag",
    "normalize_cone",
    "normalize_singular",
    "normalize_uniform",
    "p_moment",
    "pushforward_scale",
    "singular_values",
    "wasserstein1",
    "GasChain",
    "GasConfig",
    "make_rng",
    "mcmc_run",
    "rejection_oracle",
    "SolveReport",
    "solve_equilibrium",
    "GridMeasure",
    "beta_rate",
    "grid_log_energy",
    "rate_gas",
    "rate_pair",
    "rate_spectral",
    "INF",
    "ModelConstants",
    "model_constants",
    "parse_exponent",
    "rate_constant_C",
    "LimitLaw",
    "h_density",
    "log_energy_limit",
]
