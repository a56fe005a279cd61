"""Fredholm linearisation solver for the matrix fourth-order quintic NLS."""

from .config import ConfigError, RunConfig, load_config
from .fredholm import (
    DataKernel,
    KernelSolution,
    NearSingularOperator,
    assemble_data_kernel,
    fredholm_determinant,
    gp_solution_at_time,
    solve_marchenko,
)
from .hankel import CompanionVariant, companion_field, hankel_sample
from .quintic import SolutionField, pde_residual, quintic_rhs
from .spectral import (
    DispersionCoefficients,
    GridConfig,
    ScatteringField,
    check_dispersion_property,
    evolve_scattering,
    propagator_multipliers,
    spectral_derivative,
)

__all__ = [
    "CompanionVariant",
    "ConfigError",
    "DataKernel",
    "DispersionCoefficients",
    "GridConfig",
    "KernelSolution",
    "NearSingularOperator",
    "RunConfig",
    "ScatteringField",
    "SolutionField",
    "assemble_data_kernel",
    "check_dispersion_property",
    "companion_field",
    "evolve_scattering",
    "fredholm_determinant",
    "gp_solution_at_time",
    "hankel_sample",
    "load_config",
    "pde_residual",
    "propagator_multipliers",
    "quintic_rhs",
    "solve_marchenko",
    "spectral_derivative",
]
