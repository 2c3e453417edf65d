"""Chain recursion, gauge analysis and the Schrodinger-like collapse."""

from __future__ import annotations

import csv

import numpy as np
import pytest

from gaugechain.chain_builder import (
    CHAIN_COLUMNS,
    analyze_gauge,
    base_node,
    build_chain,
    chain_records,
    collapse_check,
    compose_phases,
    gauge_ode_residual,
    lift,
    lower,
    write_chain_csv,
)
from gaugechain.dyson_maps import bar_gamma, build_bar_map_linear, displacement_map, lift_linear_model, solve_gamma_ode
from gaugechain.errors import GaugeChainError
from gaugechain.fock_core import FockConfig, guarded, number_operator
from gaugechain.models import LinearModel, build_linear_hamiltonian
from gaugechain.numerics import uniform_grid

CFG = FockConfig(20, pad=10)
GRID = uniform_grid(0.0, 0.2, 1e-3)
DRIVEN = LinearModel(1.0, "0.2*sin(t)", "0.4*sin(t)")


def _base(model=DRIVEN, grid=GRID, config=CFG):
    return base_node(lambda t: build_linear_hamiltonian(model, t, config), grid, config)


@pytest.fixture(scope="module")
def linear_chain():
    base = _base()
    bar = build_bar_map_linear(DRIVEN, GRID, CFG)
    eta = solve_gamma_ode(DRIVEN, 0.05 + 0.02j, GRID, CFG)
    eta_prime = solve_gamma_ode(lift_linear_model(DRIVEN, eta), 0.03 - 0.01j, GRID, CFG)
    return build_chain(base, {-1: bar, 0: eta, 1: eta_prime}, -1, 1)


def _flat_stack(values):
    n = CFG.work_dim
    h0 = number_operator(CFG).astype(complex) + 0.3 * (np.eye(n, k=1) + np.eye(n, k=-1))
    return h0[None] + np.asarray(values)[:, None, None] * np.eye(n)[None]


def test_lift_then_lower_is_identity():
    base = _base()
    eta = solve_gamma_ode(DRIVEN, 0.05 + 0.02j, GRID, CFG)
    up = lift(base, eta)
    down = lower(up, eta)
    assert up.index == 1 and down.index == 0
    np.testing.assert_allclose(down.hamiltonian, base.hamiltonian, atol=1e-13)


def test_singleton_chain():
    nodes = build_chain(_base(), {}, 0, 0)
    assert len(nodes) == 1
    assert nodes[0].dyson is None and nodes[0].gauge_to_next is None
    assert nodes[0].herm_residuals() is None


def test_chain_range_and_missing_maps():
    base = _base()
    with pytest.raises(ValueError):
        build_chain(base, {}, 1, 2)
    with pytest.raises(GaugeChainError):
        build_chain(base, {}, 0, 1)
    with pytest.raises(GaugeChainError):
        build_chain(base, {}, -1, 0)


def test_chain_levels_follow_recursion(linear_chain):
    bar_node, node0, node1 = linear_chain
    assert [n.index for n in linear_chain] == [-1, 0, 1]
    eta = node0.dyson
    np.testing.assert_allclose(node1.hamiltonian, node0.hamiltonian + 1j * eta.eta_inv @ eta.eta_dot, atol=1e-14)
    # node k holds h_k = eta_k H_{k+1} eta_k^-1
    np.testing.assert_allclose(node0.hermitian_counterpart, eta.conjugate(node1.hamiltonian), atol=1e-12)
    np.testing.assert_allclose(bar_node.hermitian_counterpart, bar_node.dyson.conjugate(node0.hamiltonian), atol=1e-12)


def test_linear_chain_counterparts_are_hermitian(linear_chain):
    for node in linear_chain:
        assert np.max(node.herm_residuals()[2:-2]) < 1e-8


def test_linear_chain_links_are_global(linear_chain):
    for node in linear_chain[:-1]:
        g = node.gauge_to_next
        assert g.kind == "global"
        assert g.residual_offdiag < 1e-8
        assert g.phase[0] == 0
        h_lo = node.hermitian_counterpart
        h_hi = linear_chain[linear_chain.index(node) + 1].hermitian_counterpart
        assert gauge_ode_residual(g, h_lo, h_hi, GRID, CFG) < 1e-8


def test_global_link_shares_eigenvectors(linear_chain):
    bar_node, node0, _ = linear_chain
    k = 100
    lo = guarded(bar_node.hermitian_counterpart[k], CFG)
    hi = guarded(node0.hermitian_counterpart[k], CFG)
    _, v_lo = np.linalg.eigh((lo + lo.conj().T) / 2)
    _, v_hi = np.linalg.eigh((hi + hi.conj().T) / 2)
    overlaps = np.abs(np.sum(v_lo[:, :5].conj() * v_hi[:, :5], axis=0))
    np.testing.assert_allclose(overlaps, 1.0, atol=1e-8)


def test_analyze_gauge_trivial():
    h = _flat_stack(np.zeros(GRID.size))
    g = analyze_gauge(h, h, GRID, CFG)
    assert g.kind == "global"
    assert np.max(np.abs(g.phase)) == 0
    assert gauge_ode_residual(g, h, h, GRID, CFG) == 0.0


def test_analyze_gauge_phase_integral():
    lo = _flat_stack(np.zeros(GRID.size))
    hi = _flat_stack(np.cos(GRID))
    g = analyze_gauge(lo, hi, GRID, CFG)
    assert g.is_global
    np.testing.assert_allclose(g.phase, np.sin(GRID), atol=1e-9)
    np.testing.assert_allclose(g.A(3)[-1], np.exp(-1j * np.sin(GRID[-1])) * np.eye(3), atol=1e-9)
    assert gauge_ode_residual(g, lo, hi, GRID, CFG) < 1e-8


def test_gauge_ode_detects_wrong_phase():
    lo = _flat_stack(np.zeros(GRID.size))
    hi = _flat_stack(np.cos(GRID))
    g = analyze_gauge(lo, hi, GRID, CFG)
    assert gauge_ode_residual(g.with_phase(1.1 * g.phase), lo, hi, GRID, CFG) > 1e-3


def test_local_link_is_reported():
    lo = _flat_stack(np.zeros(GRID.size))
    hi = lo.copy()
    hi[:, 0, 1] += 1e-3
    g = analyze_gauge(lo, hi, GRID, CFG)
    assert g.kind == "local" and g.a_factor is None
    with pytest.raises(GaugeChainError):
        g.A(3)
    with pytest.raises(GaugeChainError):
        gauge_ode_residual(g, lo, hi, GRID, CFG)


def test_phases_compose_additively():
    h0 = _flat_stack(np.zeros(GRID.size))
    h1 = _flat_stack(np.cos(GRID))
    h2 = _flat_stack(np.cos(GRID) + GRID**2)
    g01, g12, g02 = analyze_gauge(h0, h1, GRID, CFG), analyze_gauge(h1, h2, GRID, CFG), analyze_gauge(h0, h2, GRID, CFG)
    np.testing.assert_allclose(compose_phases(g01, g12), g02.phase, atol=1e-12)


def test_collapse_and_its_mutation():
    config = FockConfig(10, pad=10)
    model = LinearModel(1.0, 0.2, 0.4)
    grid = uniform_grid(0.0, 0.1, 1e-3)
    base = _base(model, grid, config)
    eta0 = displacement_map(bar_gamma(model, 0.0), config)[0]
    report = collapse_check(base, grid, eta0)
    assert report.levels == (-2, -1, 1, 2)
    assert report.max_deviation < 1e-8
    mutated = collapse_check(base, grid, eta0, sign=-1.0)
    assert mutated.max_deviation > 1e-3
    assert mutated.worst_level() in (-2, 2)


def test_chain_csv_columns(linear_chain, tmp_path):
    rows = chain_records(linear_chain)
    path = write_chain_csv(tmp_path / "chain.csv", rows)
    with path.open() as fh:
        reader = csv.DictReader(fh)
        assert reader.fieldnames == CHAIN_COLUMNS
        data = list(reader)
    assert len(data) == 3 * GRID.size
    assert {r["gauge_kind"] for r in data if r["k"] == "-1"} == {"global"}
    assert {r["gauge_kind"] for r in data if r["k"] == "1"} == {""}
