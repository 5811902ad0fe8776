"""Reaction-diffusion simulation and entropy diagnostics for E + S <-> C -> E + P.

Modules
-------
core      grid, fields, constants and conserved masses
dynamics  IMEX time stepping and equilibria
entropy   relative-entropy functionals and production terms
rates     explicit decay rates, linearisation and decay fits
verify    numerical checks returning structured reports
cli       command-line interface and run configuration
"""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    DiffusionCoeffs,
    GeometryConstants,
    Grid1D,
    RateConstants,
    Regime,
    SystemState,
    conserved_masses,
    project_indicator,
)
from .dynamics import PositivityError, StepperConfig, Scheme, Trajectory, simulate  # noqa: E402
from .entropy import EntropyParams, entropy_trajectory, total_entropy  # noqa: E402
from .rates import (  # noqa: E402
    GammaInputs,
    default_params_degenerate,
    default_params_full,
    gamma_for,
    mu_opt,
)

__all__ = [
    "__version__",
    "DiffusionCoeffs",
    "GeometryConstants",
    "Grid1D",
    "RateConstants",
    "Regime",
    "SystemState",
    "conserved_masses",
    "project_indicator",
    "PositivityError",
    "StepperConfig",
    "Scheme",
    "Trajectory",
    "simulate",
    "EntropyParams",
    "entropy_trajectory",
    "total_entropy",
    "GammaInputs",
    "default_params_degenerate",
    "default_params_full",
    "gamma_for",
    "mu_opt",
]
