"""Dyson-map constructions: closed-form bar maps, invariant maps, SU(1,1) maps and matrix-propagated maps."""

from __future__ import annotations

from .linear import (
    HermitianCoefficients,
    SideConditionWarning,
    bar_f,
    bar_gamma,
    bar_side_condition,
    build_bar_map_linear,
    displacement_map,
    lift_linear_model,
    linear_hermitian_coeffs,
    solve_gamma_ode,
)
from .schrodinger import metric_drift, quasi_hermiticity_residual, solve_schrodinger_like
from .solution import DysonMapSolution, read_blob
from .swanson import (
    EPSILON_GAUGE,
    bar_matrix_residual,
    bogoliubov_sign_check,
    newton_swanson_bar,
    solve_swanson_bar,
    solve_swanson_bar_track,
    solve_swanson_invariant,
)

__all__ = [
    "DysonMapSolution",
    "EPSILON_GAUGE",
    "HermitianCoefficients",
    "SideConditionWarning",
    "bar_f",
    "bar_gamma",
    "bar_matrix_residual",
    "bar_side_condition",
    "bogoliubov_sign_check",
    "build_bar_map_linear",
    "displacement_map",
    "lift_linear_model",
    "linear_hermitian_coeffs",
    "metric_drift",
    "newton_swanson_bar",
    "quasi_hermiticity_residual",
    "read_blob",
    "solve_gamma_ode",
    "solve_schrodinger_like",
    "solve_swanson_bar",
    "solve_swanson_bar_track",
    "solve_swanson_invariant",
]
