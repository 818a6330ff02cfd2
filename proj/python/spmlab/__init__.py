"""Numerical laboratory for the renormalized stochastic porous medium equation."""

from ._core import (
    Grid,
    Model,
    Nonlinearity,
    SolutionField,
    SpectralNoise,
    TestFunction,
    chi,
    counterterm_C,
    counterterm_cherry,
    counterterm_dumb,
    dyadic_partition,
    fit_homogeneity,
    heat_phi,
    k_functional_core,
    parabolic_norm,
    rescaled_test,
    solve_heat,
    split_scalar,
    validate_assumptions,
)

__all__ = [
    "Grid",
    "Model",
    "Nonlinearity",
    "SolutionField",
    "SpectralNoise",
    "TestFunction",
    "chi",
    "counterterm_C",
    "counterterm_cherry",
    "counterterm_dumb",
    "dyadic_partition",
    "fit_homogeneity",
    "heat_phi",
    "k_functional_core",
    "parabolic_norm",
    "rescaled_test",
    "solve_heat",
    "split_scalar",
    "validate_assumptions",
]
