"""Fock-space primitives checked against scipy and closed-form coherent-state values."""

from __future__ import annotations

import cmath
import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from gaugechain.errors import BranchSingularityError, MatrixOverflowError, TruncationError
from gaugechain.fock_core import (
    FockConfig,
    build_ladder,
    displacement,
    gauss_decompose,
    gauss_residual,
    identity,
    matrix_exp,
    number_operator,
    rotation,
    su11_exponential,
    su11_generators,
)

CFG40 = FockConfig(40)
CFG60 = FockConfig(60, pad=60)


def test_ladder_dim2():
    a, ad = build_ladder(2)
    np.testing.assert_array_equal(a, [[0, 1], [0, 0]])
    np.testing.assert_array_equal(ad, a.conj().T)


def test_number_operator_dim3():
    a, ad = build_ladder(3)
    np.testing.assert_allclose(np.diag(ad @ a).real, [0, 1, 2])
    np.testing.assert_allclose(number_operator(3), np.diag([0, 1, 2]))


def test_commutator_identity_except_top_level():
    a, ad = build_ladder(CFG40)
    comm = a @ ad - ad @ a
    np.testing.assert_allclose(comm[:-1, :-1], np.eye(39), atol=1e-13)
    assert abs(comm[-1, -1] - (1 - 40)) < 1e-12


def test_fock_config_validation():
    with pytest.raises(ValueError, match="dim"):
        FockConfig(3)
    with pytest.raises(ValueError, match="tail_guard"):
        FockConfig(10, tail_guard=10)
    assert FockConfig(40, pad=10).work_dim == 50
    assert FockConfig(40).guard == 35


def test_matrix_exp_trivial_cases():
    np.testing.assert_allclose(matrix_exp(np.zeros((5, 5))), np.eye(5))
    M = np.zeros((4, 4), dtype=complex)
    M[0, 0] = 1j * np.pi
    np.testing.assert_allclose(np.diag(matrix_exp(M)), [-1, 1, 1, 1], atol=1e-14)


def test_matrix_exp_vacuum_overlap():
    a, ad = build_ladder(CFG40)
    g = 0.3 * cmath.exp(0.4j)
    # BCH: exp(g a + g* a_dag) = exp(g* a_dag) exp(g a) exp(|g|^2/2)
    hermitian = matrix_exp(g * a + np.conj(g) * ad)
    assert abs(hermitian[0, 0] - math.exp(abs(g) ** 2 / 2)) < 1e-12
    # the unitary D(g) = exp(g a_dag - g* a) has <0|D|0> = exp(-|g|^2/2)
    unitary = matrix_exp(g * ad - np.conj(g) * a)
    assert abs(unitary[0, 0] - math.exp(-abs(g) ** 2 / 2)) < 1e-12


def test_matrix_exp_overflow_cap():
    with pytest.raises(MatrixOverflowError):
        matrix_exp(800 * np.eye(3))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.01, 10.0))
def test_matrix_exp_matches_scipy(seed, scale):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    M *= scale / np.linalg.norm(M, 2)
    ref = scipy.linalg.expm(M)
    assert np.linalg.norm(matrix_exp(M) - ref) / np.linalg.norm(ref) < 1e-12


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(0.01, 5.0))
def test_matrix_exp_inverse(seed, scale):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
    M *= scale / np.linalg.norm(M, 2)
    np.testing.assert_allclose(matrix_exp(M) @ matrix_exp(-M), np.eye(10), atol=1e-10)


def test_displacement_values():
    np.testing.assert_allclose(displacement(0.0, CFG40), np.eye(40), atol=1e-15)
    D = displacement(0.5, CFG40)
    assert abs(D[0, 0] - 0.882496902584595) < 1e-12
    np.testing.assert_allclose(displacement(0.4, CFG40) @ displacement(-0.4, CFG40), np.eye(40), atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.0, 1.4), phase=st.floats(-np.pi, np.pi))
def test_displacement_unitary_on_guard_block(r, phase):
    theta = r * cmath.exp(1j * phase)
    D = displacement(theta, FockConfig(40, pad=20))
    g = CFG40.guard
    block = (D.conj().T @ D)[:g, :g]
    np.testing.assert_allclose(block, np.eye(g), atol=1e-10)


def test_displacement_truncation_error():
    with pytest.raises(TruncationError):
        displacement(3.5, FockConfig(12))


def test_rotation():
    np.testing.assert_allclose(rotation(0.0, 5), np.eye(5))
    np.testing.assert_allclose(rotation(np.pi, 3), np.diag([1, -1, 1]), atol=1e-15)
    np.testing.assert_allclose(rotation(0.3, 8) @ rotation(0.5, 8), rotation(0.8, 8), atol=1e-12)


def test_su11_generators_algebra():
    kp, km, k0 = su11_generators(30)
    inner = slice(0, 25)
    np.testing.assert_allclose((k0 @ kp - kp @ k0)[inner, inner], kp[inner, inner], atol=1e-12)
    np.testing.assert_allclose((kp @ km - km @ kp)[inner, inner], -2 * k0[inner, inner], atol=1e-12)
    np.testing.assert_allclose(np.diag(su11_generators(4)[2]).real, [0.25, 0.75, 1.25, 1.75])


def test_gauss_mu_zero_limit():
    p = gauss_decompose(0.3, 0.0)
    assert p.lambda_plus == 0 and p.lambda_minus == 0
    assert abs(p.lambda_zero - math.exp(0.6)) < 1e-12


def test_gauss_invariants():
    p = gauss_decompose(0.4, 0.1 * cmath.exp(1j * np.pi / 3))
    assert abs(p.z - 2 * p.mu / p.epsilon) < 1e-15
    assert abs(p.varphi - np.pi / 3) < 1e-14
    assert abs(p.lambda_plus + p.phi * cmath.exp(-1j * p.varphi)) < 1e-14
    assert abs(p.lambda_minus + p.phi * cmath.exp(1j * p.varphi)) < 1e-14
    assert abs(p.lambda_zero - (p.phi**2 - p.chi)) < 1e-14


def test_gauss_residual_examples():
    assert gauss_residual(gauss_decompose(0.4, 0.0), CFG60) < 1e-12
    assert gauss_residual(gauss_decompose(0.4, 0.1), CFG60) < 1e-9
    # imaginary Xi: trigonometric continuation
    assert gauss_residual(gauss_decompose(0.2, 0.15), CFG60) < 1e-9


def test_gauss_xi_zero_uses_series():
    # eps^2 = 4|mu|^2 exactly: Xi = 0 is a removable point, evaluated by series
    p = gauss_decompose(0.4, 0.2)
    assert gauss_residual(p, CFG60) < 1e-9


def test_gauss_rejects_zero_epsilon():
    with pytest.raises(ValueError):
        gauss_decompose(0.0, 0.1)


def test_gauss_branch_singularity():
    # Gamma_- = 1 - (Xi coth Xi)/eps vanishes on the trigonometric branch when Xi cot Xi = eps
    eps = 0.5
    # solve x cot x = eps for x, then |mu| = sqrt(x^2 + eps^2)/2
    from scipy.optimize import brentq

    x = brentq(lambda x: x / math.tan(x) - eps, 0.1, 1.5)
    with pytest.raises(BranchSingularityError):
        gauss_decompose(eps, math.sqrt(x**2 + eps**2) / 2)


@settings(max_examples=30, deadline=None)
@given(eps=st.floats(0.05, 1.0), sign=st.sampled_from([-1.0, 1.0]), ratio=st.floats(0, 0.4),
       mu_phase=st.floats(-np.pi, np.pi))
def test_su11_exponential_positive_definite(eps, sign, ratio, mu_phase):
    eps *= sign
    E = su11_exponential(eps, ratio * abs(eps) * cmath.exp(1j * mu_phase), 8)
    assert np.linalg.norm(E - E.conj().T) / np.linalg.norm(E) < 1e-13
    assert np.linalg.eigvalsh(E).min() > 0
