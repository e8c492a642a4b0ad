"""Fourier-Galerkin simulation of stochastic power-law fluids on the torus."""

__version__ = "0.1.0"

from .basis import BasisTable, Mode, SpectralField, build_basis, galerkin_project, leray_project
from .diagnostics import (
    convergence_metrics,
    convergence_params,
    energy_residual_mean,
    energy_residual_pathwise,
    enstrophy_residual,
    enstrophy_residual_mean,
)
from .errors import BlowUpError, ConfigurationError, DomainError, IntegrityError, ResolutionError
from .fields import Grid, dissipation, dissipation_I_p, from_grid, rate_of_strain, sobolev_norm, stress, to_grid
from .integrator import SimConfig, Trajectory, simulate, simulate_coupled, simulate_levels, step
from .noise import CovarianceSpec, InitialCondition, NoisePath, sample_increment, trace
from .nonlinearity import convective, drift_energy_identity, galerkin_drift

__all__ = [
    "BasisTable",
    "BlowUpError",
    "ConfigurationError",
    "CovarianceSpec",
    "DomainError",
    "Grid",
    "InitialCondition",
    "IntegrityError",
    "Mode",
    "NoisePath",
    "ResolutionError",
    "SimConfig",
    "SpectralField",
    "Trajectory",
    "build_basis",
    "convective",
    "convergence_metrics",
    "convergence_params",
    "dissipation",
    "dissipation_I_p",
    "drift_energy_identity",
    "energy_residual_mean",
    "energy_residual_pathwise",
    "enstrophy_residual",
    "enstrophy_residual_mean",
    "from_grid",
    "galerkin_drift",
    "galerkin_project",
    "leray_project",
    "rate_of_strain",
    "sample_increment",
    "simulate",
    "simulate_coupled",
    "simulate_levels",
    "sobolev_norm",
    "step",
    "stress",
    "to_grid",
    "trace",
]
