"""Numerical laboratory for the 3D Muskat contour equation on a periodic grid."""

from .config import ConfigError, SimConfig, load_config, loads_config, save_config
from .grid import InterfaceField, fractional_laplacian, gradient, laplacian, sample_shifted
from .norms import besov_seminorm, lipschitz_seminorm, norm_report, smallness_criterion, sobolev_seminorm
from .profiles import builtin_profile
from .quadrature import PvQuadrature
from .rhs import rhs_integrated, rhs_m1, rhs_m2, rhs_regularized
from .simulation import EnergyLedger, dissipation_coefficient, energy_rate_monitor, run, slope_monitor, step

__all__ = [
    "ConfigError",
    "EnergyLedger",
    "InterfaceField",
    "PvQuadrature",
    "SimConfig",
    "besov_seminorm",
    "builtin_profile",
    "dissipation_coefficient",
    "energy_rate_monitor",
    "fractional_laplacian",
    "gradient",
    "laplacian",
    "lipschitz_seminorm",
    "load_config",
    "loads_config",
    "norm_report",
    "rhs_integrated",
    "rhs_m1",
    "rhs_m2",
    "rhs_regularized",
    "run",
    "sample_shifted",
    "save_config",
    "slope_monitor",
    "smallness_criterion",
    "sobolev_seminorm",
    "step",
]
