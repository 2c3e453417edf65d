"""Matrix-propagated maps from ``i d(eta)/dt = eta H``."""

from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import expm

from gaugechain.dyson_maps import build_bar_map_linear, metric_drift, solve_schrodinger_like
from gaugechain.dyson_maps.schrodinger import as_time_function
from gaugechain.errors import MatrixOverflowError
from gaugechain.fock_core import FockConfig, guarded, number_operator
from gaugechain.models import LinearModel, build_linear_hamiltonian
from gaugechain.numerics import uniform_grid

CFG = FockConfig(20, pad=10)
GRID = uniform_grid(0.0, 0.2, 1e-3)
MODEL = LinearModel(1.0, 0.2, 0.4)


def test_hermitian_generator_gives_unitary_map():
    H = number_operator(CFG) + 0.3 * np.eye(CFG.work_dim)
    sol = solve_schrodinger_like(H[None].repeat(GRID.size, axis=0), np.eye(CFG.work_dim), GRID, CFG)
    np.testing.assert_allclose(sol.eta[-1], expm(-1j * GRID[-1] * H), atol=1e-8)
    eye = np.eye(CFG.work_dim)
    assert np.max(np.abs(sol.eta[-1].conj().T @ sol.eta[-1] - eye)) < 1e-8


def test_primed_hamiltonian_is_doubled():
    H = build_linear_hamiltonian(MODEL, 0.0, CFG)
    stack = H[None].repeat(GRID.size, axis=0)
    sol = solve_schrodinger_like(stack, np.eye(CFG.work_dim), GRID, CFG)
    primed = stack + 1j * sol.eta_inv @ sol.eta_dot
    scale = np.max(np.abs(guarded(H, CFG)))
    worst = max(np.max(np.abs(guarded(primed[k] - 2 * H, CFG))) for k in range(GRID.size))
    assert worst / scale < 1e-8


def test_metric_is_constant_for_intertwining_start():
    H = build_linear_hamiltonian(MODEL, 0.0, CFG)
    eta0 = build_bar_map_linear(MODEL, GRID[:5], CFG).eta[0]
    sol = solve_schrodinger_like(lambda t: H, eta0, GRID, CFG)
    assert metric_drift(sol) < 1e-8


def test_half_scale_generator():
    H = number_operator(CFG).astype(complex)
    sol = solve_schrodinger_like(lambda t: H, np.eye(CFG.work_dim), GRID, CFG, scale=0.5)
    np.testing.assert_allclose(sol.eta[-1], expm(-0.5j * GRID[-1] * H), atol=1e-8)
    assert sol.diagnostics["scale"] == 0.5


def test_overflow_is_capped():
    H = 1j * 50 * np.eye(CFG.work_dim)
    with pytest.raises(MatrixOverflowError):
        solve_schrodinger_like(lambda t: H, np.eye(CFG.work_dim), GRID, CFG, cap=1e3)


def test_stack_interpolation_and_shape_check():
    times = uniform_grid(0.0, 1.0, 0.1)
    stack = np.array([np.eye(2) * t**3 for t in times])
    f = as_time_function(stack, times)
    np.testing.assert_allclose(f(0.55), np.eye(2) * 0.55**3, atol=1e-12)
    with pytest.raises(ValueError):
        as_time_function(stack[:-1], times)
