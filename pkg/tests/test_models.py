"""Coefficient tracks, the expression grammar and the two model Hamiltonians."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugechain.expressions import ExpressionError, compile_expression
from gaugechain.fock_core import FockConfig, build_ladder
from gaugechain.models import (
    CoefficientTrack,
    LinearModel,
    SwansonModel,
    build_linear_hamiltonian,
    build_swanson_hamiltonian,
    hermiticity_residual,
    pt_symmetry_check,
)

finite = st.floats(-2.0, 2.0, allow_nan=False)


def test_expression_grammar_evaluates():
    f = compile_expression("0.2*sin(t) + 0.1*i*exp(-t)")
    t = np.array([0.0, 1.0])
    np.testing.assert_allclose(f(t), 0.2 * np.sin(t) + 0.1j * np.exp(-t))
    assert compile_expression("pi")(np.zeros(1))[0] == pytest.approx(np.pi)


@pytest.mark.parametrize("text", ["__import__('os')", "t.real", "x + 1", "sin(t, 2)", "[1][0]", "sin(t=1)", ""])
def test_expression_grammar_rejects(text):
    with pytest.raises(ExpressionError):
        compile_expression(text)


def test_sampled_track_hits_knots_exactly():
    knots = np.linspace(0, 1, 11)
    values = np.exp(1j * knots) * (1 + knots**2)
    track = CoefficientTrack.from_samples(knots, values)
    out = track(knots)
    assert np.array_equal(out, values)
    assert track(0.3) == values[3]


def test_sampled_track_round_trip():
    knots = np.linspace(0, 1, 21)
    track = CoefficientTrack.from_samples(knots, np.sin(knots) + 1j * np.cos(3 * knots))
    again = CoefficientTrack.from_config(track.to_config())
    assert np.array_equal(again(knots), track(knots))
    mid = (knots[1:] + knots[:-1]) / 2
    np.testing.assert_allclose(again(mid), track(mid), atol=1e-12, rtol=0)


def test_constant_track_round_trip():
    track = CoefficientTrack.constant(0.3 - 0.2j)
    assert CoefficientTrack.from_config(track.to_config())(0.7) == 0.3 - 0.2j


def test_linear_hamiltonian_examples():
    H = build_linear_hamiltonian(LinearModel(1, 0, 0), 0.0, 3)
    np.testing.assert_allclose(H, np.diag([0, 1, 2]))
    H = build_linear_hamiltonian(LinearModel(1, 0.2, 0.4), 0.0, 6)
    a, ad = build_ladder(6)
    np.testing.assert_allclose(H - H.conj().T, -0.2 * (a - ad), atol=1e-15)
    m = np.arange(1, 6)
    np.testing.assert_allclose(np.abs(np.diag(H - H.conj().T, 1)), 0.2 * np.sqrt(m))


def test_linear_hamiltonian_hermitian_case():
    model = LinearModel("1", "0.3*sin(t) + 0.1*i", "0.3*sin(t) - 0.1*i")
    for t in (0.0, 0.4, 1.0):
        assert hermiticity_residual(build_linear_hamiltonian(model, t, 20)) == 0.0


def test_swanson_hamiltonian_examples():
    np.testing.assert_allclose(build_swanson_hamiltonian(SwansonModel(1, 0, 0), 0.0, 3), np.diag([0.5, 1.5, 2.5]))
    assert hermiticity_residual(build_swanson_hamiltonian(SwansonModel(1, 0.25, 0.25), 0.0, 10)) == 0.0


def test_swanson_interior_spectrum_real():
    cfg = FockConfig(60, pad=30)
    ev = np.linalg.eigvals(build_swanson_hamiltonian(SwansonModel(1, 0.2, 0.3), 0.0, cfg))
    ev = ev[np.argsort(ev.real)][:20]
    # exact spectrum: sqrt(1 - 4 alpha beta) (n + 1/2)
    expected = np.sqrt(1 - 4 * 0.06) * (np.arange(20) + 0.5)
    np.testing.assert_allclose(ev.real, expected, atol=1e-8)
    assert np.max(np.abs(ev.imag)) < 1e-8


@settings(max_examples=30, deadline=None)
@given(w=finite, a1=finite, a2=finite, b=finite, t=st.floats(0, 1))
def test_linear_hamiltonian_is_linear(w, a1, a2, b, t):
    lhs = build_linear_hamiltonian(LinearModel(w, a1 + a2, b), t, 8)
    rhs = build_linear_hamiltonian(LinearModel(w, a1, b), t, 8) + build_linear_hamiltonian(LinearModel(0, a2, 0), t, 8)
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_hermiticity_residual_examples():
    assert hermiticity_residual(1j * np.eye(7)) == pytest.approx(2.0)
    cfg = FockConfig(10, tail_guard=3)
    M = np.zeros((10, 10), complex)
    M[9, 0] = 5.0  # only in the tail
    assert hermiticity_residual(M, cfg) == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_symmetrised_matrix_has_zero_residual(seed):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    assert hermiticity_residual(M + M.conj().T) == 0.0


def test_pt_symmetry_check():
    assert pt_symmetry_check(LinearModel("cos(t)", "sin(t)", "sin(t)"), 1.0, 101).classification == "PASS"
    report = pt_symmetry_check(LinearModel("1+t", "sin(t)", "sin(t)"), 1.5, 101)
    assert report.classification == "FAIL"
    assert report.deviations["omega_even"] == pytest.approx(3.0)
    assert pt_symmetry_check(SwansonModel("cos(t)", "0.2*cos(t)", "0.3*cos(2*t)"), 1.0, 51).passed
    assert "continuation" in report.unchecked
