"""Equilibrium measure, potentials and finite-n simulations of the chiral
Gaussian log-gas with Dyson index ``beta`` and origin repulsion ``c``."""

from __future__ import annotations

__version__ = "0.1.0"

from .equilibrium import (
    EnsembleParams,
    EquilibriumMeasure,
    Support,
    cdf,
    density,
    equilibrium_measure,
    moment,
    quantile,
    support_edges,
)
from .errors import ConfigurationError, ConvergenceError, ParameterDomainError, QuadratureError
from .fekete import DiscreteConfiguration, kn_gradient, kn_value, minimize_kn
from .partition import FreeEnergyRow, free_energy_table, log_gamma, log_partition_beta2
from .potential import (
    branch_f,
    cauchy_transform,
    effective_potential,
    energy_affine_pushforward,
    energy_closed_form,
    energy_quadrature,
    external_field,
    log_potential,
    robin_constant,
    stieltjes_inversion,
    variational_scan,
)
from .quadrature import QuadratureSpec, integrate_singular
from .sampler import ChainConfig, SampleBatch, empirical_vs_theory, log_unnormalized_density, run_chain, run_chains
