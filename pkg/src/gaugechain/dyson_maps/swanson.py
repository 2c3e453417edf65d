"""SU(1,1) Dyson maps for the generalized Swanson model.

Maps are ``eta = exp(X)`` with ``X = eps (a_dag a + 1/2) + mu a^2 + mu* a_dag^2``.
On ``(a, a_dag)`` conjugation acts through a 2x2 matrix::

    eta (a, a_dag)^T eta^-1 = E (a, a_dag)^T,   E = expm([[-eps, -2 mu*], [2 mu, eps]])

which gives the coefficients of ``eta H eta^-1`` without any truncation.
This 2x2 route is the oracle for the closed forms in terms of
``(Phi, chi, varphi)`` and for the rate equations of the invariant map; the
Fock-space matrices then certify the resulting maps.

Parameter chart: the bar map is solved at a fixed ``eps`` (``EPSILON_GAUGE``)
for ``(|mu|, arg mu)``. The fixed value is a gauge choice; ``eps = 1`` puts
the root for typical coefficients outside the region where the Fock-space
similarity is numerically usable, so a small value is the default.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..errors import BranchSingularityError, ConvergenceError, JacobianSingularError
from ..fock_core import (
    FockConfig,
    Su11Params,
    _cosh_sinhc,
    build_ladder,
    gauss_decompose,
    matrix_exp,
    su11_exponent,
)
from ..models import SwansonModel, build_swanson_hamiltonian, hermiticity_residual
from ..numerics import grid_step, time_derivative
from .linear import HermitianCoefficients
from .solution import DysonMapSolution

EPSILON_GAUGE = 0.1
NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 100
INVARIANT_HERM_TOL = 1e-6
CHI_SINGULAR_TOL = 1e-10


# ---------------------------------------------------------------------------
# 2x2 Bogoliubov representation
# ---------------------------------------------------------------------------


def _generator_2x2(eps: float, mu: complex) -> np.ndarray:
    return np.array([[-eps, -2 * np.conj(mu)], [2 * mu, eps]], dtype=complex)


def bogoliubov(eps: float, mu: complex) -> np.ndarray:
    """``E = [[p, q], [r, s]]`` with ``eta a eta^-1 = p a + q a_dag`` and ``eta a_dag eta^-1 = r a + s a_dag``."""
    ch, shc = _cosh_sinhc(eps * eps - 4 * abs(mu) ** 2)
    return ch * np.eye(2) + shc * _generator_2x2(eps, mu)


def _dsinhc(s: float) -> float:
    """Derivative of ``sinh(sqrt s)/sqrt s`` with respect to ``s``."""
    if abs(s) < 1e-3:
        return 1 / 6 + s / 60 + s**2 / 1680 + s**3 / 90720
    ch, shc = _cosh_sinhc(s)
    return (ch - shc) / (2 * s)


def bogoliubov_jacobian(eps: float, mu: complex) -> list[np.ndarray]:
    """``dE/d(eps)``, ``dE/d(Re mu)``, ``dE/d(Im mu)``."""
    s = eps * eps - 4 * abs(mu) ** 2
    ch, shc = _cosh_sinhc(s)
    dch, dshc = shc / 2, _dsinhc(s)
    M = _generator_2x2(eps, mu)
    dM = [
        np.array([[-1, 0], [0, 1]], dtype=complex),
        np.array([[0, -2], [2, 0]], dtype=complex),
        np.array([[0, 2j], [2j, 0]], dtype=complex),
    ]
    ds = [2 * eps, -8 * mu.real, -8 * mu.imag]
    return [ds_k * (dch * np.eye(2) + dshc * M) + shc * dM_k for ds_k, dM_k in zip(ds, dM)]


def conjugated_coefficients(omega: complex, alpha: complex, beta: complex, eps: float, mu: complex):
    """``(W, V, T)`` of ``eta H eta^-1 = W (a_dag a + 1/2) + V a^2 + T a_dag^2``."""
    (p, q), (r, s) = bogoliubov(eps, complex(mu))
    W = omega * (r * q + s * p) + 2 * alpha * p * q + 2 * beta * r * s
    V = omega * r * p + alpha * p * p + beta * r * r
    T = omega * s * q + alpha * q * q + beta * s * s
    return W, V, T


def generator_coefficients(E: np.ndarray, E_dot: np.ndarray):
    """``(g_w, g_v, g_t)`` of ``d(eta)/dt eta^-1 = g_w (a_dag a + 1/2) + g_v a^2 + g_t a_dag^2``.

    Uses ``E^-1 dE/dt = [[-g_w, -2 g_t], [2 g_v, g_w]]``.
    """
    N = np.linalg.solve(E, E_dot)
    return N[1, 1], N[1, 0] / 2, -N[0, 1] / 2


def bogoliubov_sign_check(params: Su11Params, config: FockConfig) -> dict:
    """Compare both signs of the closed-form Bogoliubov matrix with matrix conjugation.

    Returns the residual for each sign and the sign that matched.
    """
    a, ad = build_ladder(config)
    X = su11_exponent(params.epsilon, params.mu, config)
    eta, eta_inv = matrix_exp(X), matrix_exp(-X)
    g = config.guard - 2  # a_dag raises the level, so stay one level further in
    lhs_a = (eta @ a @ eta_inv)[:g, :g]
    lhs_ad = (eta @ ad @ eta_inv)[:g, :g]
    pref = 1 / cmath.sqrt(params.lambda_zero)
    out = {}
    for sign in (+1, -1):
        c = sign * pref
        ra = c * (-a + params.lambda_plus * ad)[:g, :g]
        rad = c * (-params.lambda_minus * a + params.chi * ad)[:g, :g]
        out[sign] = float(
            (np.linalg.norm(lhs_a - ra) + np.linalg.norm(lhs_ad - rad)) / np.linalg.norm(lhs_a)
        )
    matched = min(out, key=out.get)
    return {"residual_plus": out[1], "residual_minus": out[-1], "matched_sign": matched,
            "predicted_sign": params.bogoliubov_sign}


# ---------------------------------------------------------------------------
# closed forms in (Phi, chi, varphi)
# ---------------------------------------------------------------------------


def _polar(x: complex) -> tuple[float, float]:
    x = complex(x)
    return abs(x), (cmath.phase(x) if x != 0 else 0.0)


def eq49_residuals(omega, alpha, beta, Phi: float, chi: float, varphi: float) -> np.ndarray:
    """The two real stationarity conditions on ``(Phi, chi, varphi)`` for the bar map."""
    wa, pw = _polar(omega)
    aa, pa = _polar(alpha)
    ba, pb = _polar(beta)
    r1 = (wa * Phi * math.sin(pw) + aa * math.sin(varphi - pa)) * (1 - Phi**2) + ba * (
        (2 * chi - 1) * Phi**2 - chi**2
    ) * math.sin(varphi + pb)
    r2 = (
        (chi - 1) * Phi * wa * math.cos(pw)
        + aa * (1 - Phi**2) * math.cos(varphi - pa)
        + ba * (Phi**2 - chi**2) * math.cos(varphi + pb)
    )
    return np.array([r1, r2])


def printed_bar_coefficients(omega, alpha, beta, params: Su11Params) -> tuple[float, complex]:
    """``(W_bar, V_bar)`` from the closed forms in ``(Phi, chi, varphi)``."""
    wa, pw = _polar(omega)
    aa, pa = _polar(alpha)
    ba, pb = _polar(beta)
    Phi, chi, vp = params.phi, params.chi, params.varphi
    den = chi - Phi**2
    W = (wa * (chi + Phi**2) * math.cos(pw) - 2 * Phi * (aa * math.cos(vp - pa) + ba * chi * math.cos(vp + pb))) / den
    V = (wa * Phi * cmath.exp(1j * (vp + pw)) - aa * cmath.exp(1j * pa) - ba * Phi**2 * cmath.exp(-2j * vp)) / den
    return W, V


def printed_invariant_coefficients(omega, alpha, beta, params: Su11Params) -> tuple[float, complex]:
    """``(W, V)`` of the invariant-map counterpart from the closed forms."""
    wa, pw = _polar(omega)
    aa, pa = _polar(alpha)
    ba, pb = _polar(beta)
    Phi, chi, vp = params.phi, params.chi, params.varphi
    _check_chi(chi)
    W = wa * math.cos(pw) + 2 * Phi / (1 - chi) * (aa * math.cos(vp - pa) - ba * math.cos(vp + pb))
    V = (aa * cmath.exp(1j * pa) - ba * chi * cmath.exp(-1j * pb) - 1j * wa * Phi * math.sin(pw) * cmath.exp(1j * vp)) / (1 - chi)
    return W, V


def _check_chi(chi: float) -> None:
    if abs(1 - chi) < CHI_SINGULAR_TOL:
        raise BranchSingularityError(f"chi = {chi!r} is at the 1 - chi singularity")


def eq54_rates(omega, alpha, beta, Phi: float, chi: float, varphi: float) -> tuple[float, float]:
    """``(dPhi/dt, dvarphi/dt)`` of the invariant map in ``(Phi, varphi)`` form."""
    _check_chi(chi)
    if Phi == 0:
        raise BranchSingularityError("dvarphi/dt is undefined at Phi = 0")
    wa, pw = _polar(omega)
    aa, pa = _polar(alpha)
    ba, pb = _polar(beta)
    Phi_dot = 2 / (chi - 1) * (
        (wa * Phi * math.sin(pw) + aa * math.sin(varphi - pa)) * (1 - Phi**2)
        + ba * ((2 * chi - 1) * Phi**2 - chi**2) * math.sin(varphi + pb)
    )
    varphi_dot = 2 / ((chi - 1) * Phi) * (
        aa * (1 - Phi**2) * math.cos(varphi - pa) + ba * (Phi**2 - chi**2) * math.cos(varphi + pb)
    ) + 2 * wa * math.cos(pw)
    return Phi_dot, varphi_dot


# ---------------------------------------------------------------------------
# bar map: Newton at fixed epsilon
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NewtonResult:
    params: Su11Params
    iterations: int
    residual: float


def _params_from(eps: float, mod: float, arg: float) -> Su11Params:
    return gauss_decompose(eps, mod * cmath.exp(1j * arg))


def _wrap(phase: float) -> float:
    return (phase + math.pi) % (2 * math.pi) - math.pi


def newton_swanson_bar(
    omega: complex,
    alpha: complex,
    beta: complex,
    seed: tuple[float, complex],
    *,
    max_iter: int = NEWTON_MAX_ITER,
    tol: float = NEWTON_TOL,
) -> NewtonResult:
    """Newton iteration on ``(|mu|, arg mu)`` at fixed ``eps`` for the stationarity conditions.

    The Jacobian is differenced centrally. A negative ``|mu|`` iterate is
    reflected to ``(-|mu|, arg + pi)``.

    Raises:
        ConvergenceError: after ``max_iter`` iterations without convergence.
        JacobianSingularError: if the differenced Jacobian is singular.
    """
    eps = float(seed[0])
    mu0 = complex(seed[1])
    x = np.array([abs(mu0), cmath.phase(mu0) if mu0 != 0 else 0.0])

    def F(v):
        p = _params_from(eps, v[0], v[1])
        return eq49_residuals(omega, alpha, beta, p.phi, p.chi, p.varphi)

    r = F(x)
    for it in range(max_iter + 1):
        if np.max(np.abs(r)) < tol:
            return NewtonResult(_params_from(eps, x[0], x[1]), it, float(np.max(np.abs(r))))
        if it == max_iter:
            break
        J = np.empty((2, 2))
        for j in range(2):
            h = 1e-7 * max(1.0, abs(x[j]))
            e = np.zeros(2)
            e[j] = h
            J[:, j] = (F(x + e) - F(x - e)) / (2 * h)
        if not np.all(np.isfinite(J)) or abs(np.linalg.det(J)) < 1e-14 * max(1.0, np.max(np.abs(J)) ** 2):
            raise JacobianSingularError(f"singular Jacobian at |mu|={x[0]:.6g}, arg={x[1]:.6g}")
        x = x - np.linalg.solve(J, r)
        if x[0] < 0:
            x = np.array([-x[0], x[1] + math.pi])
        x[1] = _wrap(x[1])
        r = F(x)
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations (residual {np.max(np.abs(r)):.2e})")


def solve_swanson_bar(
    model: SwansonModel, t: float, seed: tuple[float, complex] = (EPSILON_GAUGE, 0.0), **kwargs
) -> Su11Params:
    """Bar-map parameters at time ``t``; see :func:`newton_swanson_bar`."""
    w, al, be = model.coefficients(float(t))
    return newton_swanson_bar(w, al, be, seed, **kwargs).params


def su11_map(params_or_eps, mu: complex | None = None, config: FockConfig | None = None):
    """``(eta, eta^-1)`` as ``exp(+-X)`` for the Hermitian SU(1,1) exponent."""
    if isinstance(params_or_eps, Su11Params):
        eps, mu = params_or_eps.epsilon, params_or_eps.mu
    else:
        eps = float(params_or_eps)
    X = su11_exponent(eps, mu, config)
    return matrix_exp(X), matrix_exp(-X)


def bar_matrix_residual(model: SwansonModel, t: float, params: Su11Params, config: FockConfig) -> float:
    """Hermiticity residual of ``eta_bar H eta_bar^-1`` built from matrices."""
    eta, eta_inv = su11_map(params, config=config)
    return hermiticity_residual(eta @ build_swanson_hamiltonian(model, t, config) @ eta_inv, config)


def _solution_from_params(times, params, config, **kwargs) -> DysonMapSolution:
    pairs = [su11_map(p, config=config) for p in params]
    eta = np.stack([p[0] for p in pairs])
    eta_inv = np.stack([p[1] for p in pairs])
    eta_dot = time_derivative(eta, grid_step(times))
    return DysonMapSolution(times=times, eta=eta, eta_dot=eta_dot, eta_inv=eta_inv, config=config,
                            params=list(params), **kwargs)


def solve_swanson_bar_track(
    model: SwansonModel, grid, config: FockConfig, seed: tuple[float, complex] = (EPSILON_GAUGE, 0.0)
) -> DysonMapSolution:
    """Bar map on a grid, each Newton solve seeded from the previous root."""
    times = np.asarray(grid, dtype=float)
    params, iterations = [], []
    current = seed
    for t in times:
        w, al, be = model.coefficients(float(t))
        res = newton_swanson_bar(w, al, be, current)
        params.append(res.params)
        iterations.append(res.iterations)
        current = (res.params.epsilon, res.params.mu)
    return _solution_from_params(
        times, params, config, provenance="swanson_newton",
        diagnostics={"newton_iterations": iterations},
    )


# ---------------------------------------------------------------------------
# invariant map
# ---------------------------------------------------------------------------


def _phi_of_mod(eps: float, mod: float) -> float:
    return _params_from(eps, mod, 0.0).phi


def _mod_from_phi(eps: float, Phi: float) -> float:
    """Invert ``Phi(|mu|)`` at fixed ``eps`` by bracketing from zero."""
    if Phi == 0:
        return 0.0
    lo, hi = 0.0, 1e-3
    while abs(_phi_of_mod(eps, hi)) < abs(Phi):
        lo, hi = hi, 2 * hi
        if hi > 1e3:
            raise BranchSingularityError(f"Phi={Phi} is not reached at eps={eps}")
    return brentq(lambda m: abs(_phi_of_mod(eps, m)) - abs(Phi), lo, hi, xtol=1e-15, rtol=1e-15)


def _printed_rhs(model: SwansonModel, eps: float, t: float, y: np.ndarray) -> np.ndarray:
    mod, vp = float(y[0]), float(y[1])
    p = _params_from(eps, mod, vp)
    w, al, be = model.coefficients(t)
    Phi_dot, vp_dot = eq54_rates(w, al, be, p.phi, p.chi, p.varphi)
    h = 1e-6 * max(mod, 1e-3)
    dPhi_dmod = (_phi_of_mod(eps, mod + h) - _phi_of_mod(eps, mod - h)) / (2 * h)
    return np.array([Phi_dot / dPhi_dmod, vp_dot])


def _three_parameter_rhs(model: SwansonModel, t: float, y: np.ndarray) -> np.ndarray:
    """Rates of ``(eps, Re mu, Im mu)`` that keep ``h`` Hermitian.

    With ``h = eta H eta^-1 + i G`` the conditions ``Im W_h = 0`` and
    ``T_h = V_h*`` are linear in the rates; the 3x3 real system is solved
    in the least-squares sense so a rank deficiency picks the smallest rates.
    """
    eps, mu = float(y[0]), complex(y[1], y[2])
    w, al, be = model.coefficients(t)
    W, V, T = conjugated_coefficients(w, al, be, eps, mu)
    E = bogoliubov(eps, mu)
    A = np.empty((3, 3))
    for k, dE in enumerate(bogoliubov_jacobian(eps, mu)):
        gw, gv, gt = generator_coefficients(E, dE)
        z = gt + np.conj(gv)
        A[:, k] = [gw.real, z.real, z.imag]
    rhs_c = 1j * (T - np.conj(V))
    b = np.array([-W.imag, rhs_c.real, rhs_c.imag])
    rates, *_ = np.linalg.lstsq(A, b, rcond=1e-12)
    return rates


def counterpart_coefficients(model: SwansonModel, t: float, eps: float, mu: complex, rates) -> tuple:
    """``(W_h, V_h, T_h)`` of ``eta H eta^-1 + i d(eta)/dt eta^-1`` for given parameter rates."""
    w, al, be = model.coefficients(t)
    W, V, T = conjugated_coefficients(w, al, be, eps, mu)
    E = bogoliubov(eps, mu)
    E_dot = sum(r * dE for r, dE in zip(rates, bogoliubov_jacobian(eps, mu)))
    gw, gv, gt = generator_coefficients(E, E_dot)
    return W + 1j * gw, V + 1j * gv, T + 1j * gt


def _rk4(rhs, y0, times):
    y = np.asarray(y0, dtype=float)
    out = [y]
    for k in range(times.size - 1):
        t, h = times[k], times[k + 1] - times[k]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y)
    return np.array(out)


@dataclass(frozen=True)
class InvariantTrajectory:
    """Parameter-level result of one invariant-map path."""

    path: str
    times: np.ndarray
    params: list
    rates: np.ndarray
    coefficients: HermitianCoefficients
    diagnostics: dict = field(default_factory=dict)


def integrate_printed_invariant(model: SwansonModel, init, grid, epsilon: float = EPSILON_GAUGE) -> InvariantTrajectory:
    """Integrate the closed-form ``(Phi, varphi)`` rate equations at fixed ``eps``.

    ``chi`` is recomputed from the chart at every stage.
    """
    times = np.asarray(grid, dtype=float)
    if isinstance(init, Su11Params):
        epsilon = init.epsilon
        y0 = [abs(init.mu), init.varphi]
    else:
        Phi0, vp0 = init
        y0 = [_mod_from_phi(epsilon, Phi0), vp0]
    ys = _rk4(lambda t, y: _printed_rhs(model, epsilon, t, y), y0, times)
    params = [_params_from(epsilon, y[0], y[1]) for y in ys]
    mu = np.array([p.mu for p in params])
    mu_dot = time_derivative(mu, grid_step(times))
    rates = np.stack([np.zeros(times.size), mu_dot.real, mu_dot.imag], axis=1)
    coeffs = _coefficients(model, times, params, rates)
    Phi = np.array([p.phi for p in params])
    vp = np.unwrap(np.array([p.varphi for p in params]))
    span = times[-1] - times[0]
    return InvariantTrajectory(
        path="printed_rate_equations",
        times=times,
        params=params,
        rates=rates,
        coefficients=coeffs,
        diagnostics={
            "drift_per_unit_time": float(max(np.max(np.abs(Phi - Phi[0])), np.max(np.abs(vp - vp[0]))) / span),
            "eq52_deviation": _eq52_deviation(model, times, params, coeffs),
        },
    )


def integrate_three_parameter_invariant(model: SwansonModel, init: Su11Params, grid) -> InvariantTrajectory:
    """Integrate ``(eps, Re mu, Im mu)`` with rates that zero the Hermiticity conditions."""
    times = np.asarray(grid, dtype=float)
    y0 = [init.epsilon, init.mu.real, init.mu.imag]
    ys = _rk4(lambda t, y: _three_parameter_rhs(model, t, y), y0, times)
    rates = np.array([_three_parameter_rhs(model, t, y) for t, y in zip(times, ys)])
    params = [gauss_decompose(y[0], complex(y[1], y[2])) for y in ys]
    coeffs = _coefficients(model, times, params, rates)
    return InvariantTrajectory(
        path="three_parameter_rates",
        times=times,
        params=params,
        rates=rates,
        coefficients=coeffs,
        diagnostics={"eq52_deviation": _eq52_deviation(model, times, params, coeffs)},
    )


def _coefficients(model, times, params, rates) -> HermitianCoefficients:
    W, V, T = np.empty(times.size, complex), np.empty(times.size, complex), np.empty(times.size, complex)
    for k, (t, p) in enumerate(zip(times, params)):
        W[k], V[k], T[k] = counterpart_coefficients(model, t, p.epsilon, p.mu, rates[k])
    return HermitianCoefficients(times=times, W=W, V=V, T=T)


def _eq52_deviation(model, times, params, coeffs) -> float:
    worst = 0.0
    for k, (t, p) in enumerate(zip(times, params)):
        try:
            Wp, Vp = printed_invariant_coefficients(*model.coefficients(t), p)
        except BranchSingularityError:
            return float("nan")
        worst = max(worst, abs(Wp - coeffs.W[k]), abs(Vp - coeffs.V[k]))
    return float(worst)


def invariant_matrix_residuals(model: SwansonModel, solution: DysonMapSolution) -> np.ndarray:
    """Per-time Hermiticity residual of ``eta H eta^-1 + i eta_dot eta^-1``."""
    H = np.stack([build_swanson_hamiltonian(model, t, solution.config) for t in solution.times])
    h = solution.hermitian_counterpart(H)
    return np.array([hermiticity_residual(x, solution.config) for x in h])


def solve_swanson_invariant(
    model: SwansonModel,
    init,
    grid,
    config: FockConfig,
    *,
    epsilon: float = EPSILON_GAUGE,
    path: str = "auto",
    herm_tol: float = INVARIANT_HERM_TOL,
) -> DysonMapSolution:
    """Invariant SU(1,1) map on a grid, certified by Fock-space matrices.

    ``path='printed'`` integrates the closed-form ``(Phi, varphi)`` rate
    equations at fixed ``eps``; ``path='three_parameter'`` integrates
    ``(eps, mu)`` with rates that zero the Hermiticity conditions exactly.
    ``'auto'`` tries the printed equations first and falls back when the
    matrix residual exceeds ``herm_tol``. The path taken and the residual of
    every attempted path are stored in ``diagnostics``.

    Args:
        init: ``Su11Params`` (typically the bar root at ``t0``) or ``(Phi0, varphi0)``.
    """
    times = np.asarray(grid, dtype=float)
    if path not in ("auto", "printed", "three_parameter"):
        raise ValueError(f"unknown path {path!r}")
    attempts = {}
    if path in ("auto", "printed"):
        traj = integrate_printed_invariant(model, init, times, epsilon)
        sol = _solution_from_params(times, traj.params, config, provenance="swanson_invariant:printed")
        res = invariant_matrix_residuals(model, sol)
        attempts["printed_rate_equations"] = float(res.max())
        if path == "printed" or res.max() <= herm_tol:
            return _finish(sol, traj, res, attempts)
    if not isinstance(init, Su11Params):
        init = gauss_decompose(epsilon, _mod_from_phi(epsilon, init[0]) * cmath.exp(1j * init[1]))
    traj = integrate_three_parameter_invariant(model, init, times)
    sol = _solution_from_params(times, traj.params, config, provenance="swanson_invariant:three_parameter")
    res = invariant_matrix_residuals(model, sol)
    attempts["three_parameter_rates"] = float(res.max())
    return _finish(sol, traj, res, attempts)


def _finish(sol: DysonMapSolution, traj: InvariantTrajectory, res: np.ndarray, attempts: dict) -> DysonMapSolution:
    diagnostics = dict(traj.diagnostics)
    diagnostics.update(
        path=traj.path,
        attempts=attempts,
        matrix_residuals=res,
        coefficients=traj.coefficients,
        max_t_minus_v_conj=traj.coefficients.max_t_minus_v_conj,
        max_im_w=traj.coefficients.max_im_w,
    )
    return DysonMapSolution(
        times=sol.times, eta=sol.eta, eta_dot=sol.eta_dot, eta_inv=sol.eta_inv, config=sol.config,
        params=sol.params, provenance=sol.provenance, diagnostics=diagnostics,
    )
