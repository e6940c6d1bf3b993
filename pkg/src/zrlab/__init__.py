"""Numerical laboratory for the Zakharov-Rubenchik / Benney-Roskes system."""

from .coeffs import PhysicalParams, ZRCoefficients, br_coefficients, focusing_condition, omega_derivatives
from .spectral import FieldState, Grid
from .soliton import SolitonBackground, SolitonSpec, classify, make_soliton
from .simulator import Scenario, run, self_convergence

__all__ = [
    "FieldState",
    "Grid",
    "PhysicalParams",
    "Scenario",
    "SolitonBackground",
    "SolitonSpec",
    "ZRCoefficients",
    "br_coefficients",
    "classify",
    "focusing_condition",
    "make_soliton",
    "omega_derivatives",
    "run",
    "self_convergence",
]

__version__ = "0.1.0"
