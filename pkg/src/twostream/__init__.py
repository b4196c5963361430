"""Finite-difference and particle solvers for a two-stream kinetic
chemotaxis model with an internal state.

Main entry points:

- :mod:`twostream.ap_diff` and :mod:`twostream.ap_hyp`, the asymptotic
  preserving schemes at diffusive and hyperbolic scaling;
- :mod:`twostream.limits`, the limiting macroscopic schemes and the naive
  splitting scheme;
- :mod:`twostream.monte_carlo`, the particle method;
- :mod:`twostream.diagnostics`, steady states and convergence tables.
"""
from .errors import CFLError, ConfigError, MassDefectWarning, MeshError, ParameterError
from .kernels import BACKEND
from .model import (
    GridSpec,
    MacroDensity,
    ModelParams,
    Scaling,
    TwoStreamField,
    apply_mirror_bc,
    discrete_mass,
    initial_condition,
    lambda_bar,
    make_grid,
    tumbling_response,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CFLError",
    "ConfigError",
    "GridSpec",
    "MacroDensity",
    "MassDefectWarning",
    "MeshError",
    "ModelParams",
    "ParameterError",
    "Scaling",
    "TwoStreamField",
    "apply_mirror_bc",
    "discrete_mass",
    "initial_condition",
    "lambda_bar",
    "make_grid",
    "tumbling_response",
]
