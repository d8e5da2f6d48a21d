"""Exact lattice solver and experiment harness for variant reflected backward doubly stochastic equations."""
from .coefficients import (
    BoundarySpec,
    DiffusionSpec,
    DriftSpec,
    affine_diffusion,
    constant_boundary,
    contraction_constant,
    convex_boundary,
    lattice_functional,
    linear_drift,
    ramp_boundary,
    stability_constant,
    validate_assumptions,
    zero_diffusion,
)
from .scene import LatticeModel, TimeGrid, build_lattice
from .skorohod import solve_skorohod
from .vrbdsde import Solution, SolverOptions, solve

__version__ = "0.1.0"

__all__ = [
    "BoundarySpec",
    "DiffusionSpec",
    "DriftSpec",
    "LatticeModel",
    "Solution",
    "SolverOptions",
    "TimeGrid",
    "affine_diffusion",
    "build_lattice",
    "constant_boundary",
    "contraction_constant",
    "convex_boundary",
    "lattice_functional",
    "linear_drift",
    "ramp_boundary",
    "solve",
    "solve_skorohod",
    "stability_constant",
    "validate_assumptions",
    "zero_diffusion",
]
