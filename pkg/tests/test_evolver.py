"""State propagation, observables and the analytic propagator."""

from __future__ import annotations

import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from gaugechain.chain_builder import analyze_gauge, base_node, build_chain
from gaugechain.dyson_maps import build_bar_map_linear, lift_linear_model, linear_hermitian_coeffs, solve_gamma_ode
from gaugechain.errors import HermiticityViolation, TruncationError
from gaugechain.evolver import (
    Observable,
    StateVector,
    analytic_propagate,
    coherent_amplitudes,
    coherent_label,
    coherent_state,
    cross_space_matrix_elements,
    hamiltonian_element_check,
    make_analytic_spec,
    metric_expectation,
    propagate_flat,
    propagate_metric,
    quadrature,
    quadrature_expectations,
)
from gaugechain.fock_core import FockConfig, build_ladder, displacement, number_operator
from gaugechain.models import LinearModel, build_linear_hamiltonian
from gaugechain.numerics import uniform_grid

CFG = FockConfig(30, pad=10)
GRID = uniform_grid(0.0, 0.5, 1e-3)
DRIVEN = LinearModel(1.0, "0.2*sin(t)", "0.4*sin(t)")


def _flat_linear(omega, u, f, config=CFG):
    a, ad = build_ladder(config)
    return omega * ad @ a + u * a + np.conj(u) * ad + f * np.eye(config.work_dim)


@pytest.fixture(scope="module")
def chain():
    base = base_node(lambda t: build_linear_hamiltonian(DRIVEN, t, CFG), GRID, CFG)
    bar = build_bar_map_linear(DRIVEN, GRID, CFG)
    eta = solve_gamma_ode(DRIVEN, 0.05 + 0.02j, GRID, CFG)
    eta_prime = solve_gamma_ode(lift_linear_model(DRIVEN, eta), 0.03 - 0.01j, GRID, CFG)
    return build_chain(base, {-1: bar, 0: eta, 1: eta_prime}, -1, 1)


@pytest.fixture(scope="module")
def evolution(chain):
    base = chain[1]
    eta = base.dyson
    h = base.hermitian_counterpart
    coeffs = linear_hermitian_coeffs(DRIVEN, eta, GRID)
    omega = DRIVEN.coefficients(GRID)[0]
    spec = make_analytic_spec(omega, coeffs.u, coeffs.f, 0.1 - 0.05j, GRID)
    phi0 = 0.5 + 0.3j
    flat = propagate_flat(h, coherent_state(phi0, CFG, 0.1 - 0.05j), GRID, CFG, stepper="magnus4")
    metric = propagate_metric(base.hamiltonian, eta.eta_inv[0] @ flat.states[0], eta, GRID, CFG, h=h,
                              stepper="magnus4")
    return eta, h, spec, phi0, flat, metric


@settings(max_examples=20, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_coherent_amplitudes_match_displaced_vacuum(x, y):
    z = complex(x, y)
    np.testing.assert_allclose(coherent_amplitudes(z, 20), displacement(z, CFG)[:20, 0], atol=1e-10)


def test_coherent_state_budget_and_tail():
    small = FockConfig(20)
    with pytest.raises(TruncationError):
        coherent_state(2.0, small)
    with pytest.raises(TruncationError):
        coherent_state(1.0, small, theta0=1.0)
    with pytest.raises(TruncationError):
        coherent_state(1.9, small)
    state = coherent_state(0.5 + 0.3j, CFG)
    assert np.linalg.norm(state.amplitudes) == pytest.approx(1.0, abs=1e-14)


def test_state_vector_validation():
    with pytest.raises(ValueError):
        StateVector(np.array([np.nan, 1.0]))
    with pytest.raises(ValueError):
        StateVector(np.ones(3), space_tag="bra")
    with pytest.raises(ValueError):
        StateVector(np.ones((2, 2)))


@pytest.mark.parametrize("stepper", ["midpoint", "magnus4"])
def test_number_state_acquires_dynamical_phase(stepper):
    h = 1.3 * number_operator(CFG).astype(complex)
    one = np.zeros(CFG.work_dim, dtype=complex)
    one[1] = 1.0
    traj = propagate_flat(h, one, GRID, CFG, stepper=stepper)
    np.testing.assert_allclose(traj.states[:, 1], np.exp(-1.3j * GRID), atol=1e-12)
    assert traj.norm_drift() < 1e-13


def test_time_dependent_generator_against_fine_reference():
    grid = uniform_grid(0.0, 0.5, 0.01)
    a, ad = build_ladder(CFG)

    def h(t):
        return ad @ a + 0.2 * np.sin(3 * t) * (a + ad)

    phi0 = coherent_state(0.4, CFG)
    coarse = propagate_flat(h, phi0, grid, CFG, stepper="magnus4")
    fine = propagate_flat(h, phi0, uniform_grid(0.0, 0.5, 1e-3), CFG, stepper="magnus4")
    assert np.linalg.norm(coarse.states[-1] - fine.states[-1]) < 1e-8


def test_non_hermitian_generator_aborts():
    h = build_linear_hamiltonian(LinearModel(1.0, 0.2, 0.4), 0.0, CFG)
    with pytest.raises(HermiticityViolation):
        propagate_flat(h[None].repeat(GRID.size, axis=0), coherent_state(0.1, CFG), GRID, CFG)
    with pytest.raises(ValueError):
        propagate_flat(number_operator(CFG)[None].repeat(GRID.size, axis=0), coherent_state(0.1, CFG), GRID, CFG,
                       stepper="euler")


def test_observable_must_be_hermitian():
    a, _ = build_ladder(CFG)
    with pytest.raises(HermiticityViolation):
        Observable(a, "a")
    with pytest.raises(ValueError):
        quadrature(3, CFG)


def test_identity_observable_gives_metric_norm(evolution):
    eta, _, _, _, _, metric = evolution
    eye = Observable(np.eye(CFG.work_dim), "identity").transported(eta)
    np.testing.assert_allclose(metric_expectation(eta, eye, metric.states).real, metric.metric_norm, atol=1e-12)


def test_norms_conserved_in_both_spaces(evolution):
    _, _, _, _, flat, metric = evolution
    assert flat.norm_drift("flat") < 1e-10
    assert metric.norm_drift("metric") < 1e-10
    assert np.max(metric.residuals["transport"]) < 1e-10


def test_analytic_propagator_solves_schrodinger(evolution):
    _, h, spec, phi0, flat, _ = evolution
    exact = analytic_propagate(spec, phi0, CFG, h=h)
    assert np.max(exact.residuals["schrodinger"][2:-2]) < 1e-6
    assert np.max(np.linalg.norm(exact.states[:, : CFG.guard] - flat.states[:, : CFG.guard], axis=1)) < 1e-8


def test_drive_free_theta_fails_with_drive(evolution):
    eta, h, _, phi0, _, _ = evolution
    coeffs = linear_hermitian_coeffs(DRIVEN, eta, GRID)
    printed = make_analytic_spec(DRIVEN.coefficients(GRID)[0], coeffs.u, coeffs.f, 0.1 - 0.05j, GRID,
                                 theta_dynamics="printed")
    traj = analytic_propagate(printed, phi0, CFG, h=h)
    assert np.max(traj.residuals["schrodinger"]) > 1e-2


def test_quadrature_routes_agree(evolution):
    eta, _, spec, phi0, flat, metric = evolution
    comparison = quadrature_expectations(eta, metric, flat, spec, phi0)
    assert comparison.max_pairwise() < 1e-8
    assert comparison.deviations["transported_vs_flat"] < 1e-12


def test_free_case_phase_and_label():
    omega = np.full(GRID.size, 2.0)
    zeros = np.zeros(GRID.size)
    for dynamics in ("corrected", "printed"):
        spec = make_analytic_spec(omega, zeros, zeros, 0.0, GRID, theta_dynamics=dynamics, m=3)
        np.testing.assert_allclose(spec.lr_phase(), -3 * 2.0 * GRID, atol=1e-12)
        np.testing.assert_allclose(spec.printed_lr_phase(), -3 * 2.0 * GRID, atol=1e-12)
        np.testing.assert_allclose(coherent_label(spec, 0.4j), 0.4j * np.exp(-2j * GRID), atol=1e-12)
    with pytest.raises(ValueError):
        make_analytic_spec(omega, zeros, zeros, 0.0, GRID, theta_dynamics="guess")


def test_constant_drive_shifts_label_to_fixed_point():
    # For constant omega and u, the label circles the fixed point -u*/omega.
    omega, u = 1.0, 0.3 - 0.1j
    spec = make_analytic_spec(np.full(GRID.size, omega), np.full(GRID.size, u), np.zeros(GRID.size), 0.0, GRID)
    z = coherent_label(spec, 0.2)
    fixed = -np.conj(u) / omega
    np.testing.assert_allclose(z, fixed + (0.2 - fixed) * np.exp(-1j * omega * GRID), atol=1e-10)
    h = _flat_linear(omega, u, 0.0)
    np.testing.assert_allclose(
        analytic_propagate(spec, 0.2, CFG).states[-1][: CFG.guard],
        (expm(-1j * GRID[-1] * h) @ coherent_state(0.2, CFG).amplitudes)[: CFG.guard],
        atol=1e-9,
    )


def test_cross_space_elements_for_global_and_local_links(chain):
    bar_node, base, upper = chain
    o = Observable(quadrature(1, CFG), "x1")
    psi = base.dyson.eta_inv[50] @ coherent_state(0.3, CFG).amplitudes
    psi_t = base.dyson.eta_inv[50] @ coherent_state(-0.2j, CFG).amplitudes
    report = cross_space_matrix_elements(o, (base.dyson, upper.dyson), base.gauge_to_next, (psi, psi_t), 50)
    assert report["kind"] == "global"
    assert report["deviation"] < 1e-10
    fake_local = analyze_gauge(base.hermitian_counterpart, base.hermitian_counterpart + 1e-3 * np.eye(CFG.work_dim, k=1),
                               GRID, CFG)
    report = cross_space_matrix_elements(o, (base.dyson, upper.dyson), fake_local, (psi, psi_t), 50)
    assert report["element_k1"] is None and report["deviation"] is None


def test_hamiltonian_element_needs_generator_term(chain):
    _, base, upper = chain
    k = 200
    psi = upper.dyson.eta_inv[k] @ coherent_state(0.3, CFG).amplitudes
    psi_t = upper.dyson.eta_inv[k] @ coherent_state(0.1 + 0.2j, CFG).amplitudes
    report = hamiltonian_element_check(upper.hamiltonian, base.hermitian_counterpart, upper.hermitian_counterpart,
                                       (base.dyson, upper.dyson), (psi, psi_t), k)
    assert report["deviation"] < 1e-8
    assert report["gap_to_flat_h"] > 1e-4


def test_trajectory_csv(evolution, tmp_path):
    _, _, _, _, _, metric = evolution
    path = metric.to_csv(tmp_path / "trajectory.csv", {"extra": np.zeros(GRID.size)})
    with path.open() as fh:
        reader = csv.DictReader(fh)
        assert reader.fieldnames == ["t", "flat_norm", "metric_norm", "transport", "extra"]
        assert sum(1 for _ in reader) == GRID.size
