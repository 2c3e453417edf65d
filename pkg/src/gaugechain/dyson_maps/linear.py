"""Displacement-type Dyson maps for the linear model.

All maps here have the form ``eta = e^kappa exp(gamma a + gamma* a_dag)``.
Conjugation shifts the ladder operators by c-numbers::

    eta a eta^-1 = a - gamma*,    eta a_dag eta^-1 = a_dag + gamma

so every mapped Hamiltonian is again ``omega a_dag a + u a + v a_dag + f``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import StepSizeError
from ..fock_core import FockConfig, build_ladder, matrix_exp
from ..models import CoefficientTrack, LinearModel
from ..numerics import grid_step, time_derivative
from .solution import DysonMapSolution

SIDE_CONDITION_TOL = 1e-12
STEP_ERROR_TOL = 1e-10


class SideConditionWarning(UserWarning):
    """``alpha beta`` is not real, so the closed-form bar map cannot be Hermitian-making."""


def _omega(model: LinearModel, t: float) -> complex:
    w = model.omega(t)
    if w == 0:
        raise ZeroDivisionError(f"omega vanishes at t={t}")
    return w


def bar_side_condition(model: LinearModel, t: float) -> float:
    """``|Im(alpha beta)|``; zero when the closed-form bar map applies."""
    return abs((model.alpha(t) * model.beta(t)).imag)


def bar_gamma(model: LinearModel, t: float) -> complex:
    """Closed-form ``gamma_bar = (beta* - alpha) / (2 omega)``.

    Warns with :class:`SideConditionWarning` if ``alpha beta`` is not real.
    """
    w = _omega(model, t)
    al, be = model.alpha(t), model.beta(t)
    violation = abs((al * be).imag)
    if violation > SIDE_CONDITION_TOL:
        warnings.warn(
            f"Im(alpha beta) = {violation:.3e} at t={t}: bar map will not be Hermitian-making",
            SideConditionWarning,
            stacklevel=2,
        )
    return (be.conjugate() - al) / (2 * w)


def bar_f(model: LinearModel, t: float) -> complex:
    """Closed-form identity coefficient ``(|alpha|^2 + |beta|^2 - 2 alpha beta) / (4 omega)``."""
    w = _omega(model, t)
    al, be = model.alpha(t), model.beta(t)
    return (abs(al) ** 2 + abs(be) ** 2 - 2 * al * be) / (4 * w)


def displacement_map(gamma: complex, config: FockConfig, kappa: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """``(eta, eta^-1)`` for ``eta = e^kappa exp(gamma a + gamma* a_dag)``."""
    a, ad = build_ladder(config)
    gamma = complex(gamma)
    X = gamma * a + gamma.conjugate() * ad
    scale = np.exp(kappa)
    return scale * matrix_exp(X), matrix_exp(-X) / scale


def _map_from_gammas(times, gammas, kappas, config, **kwargs) -> DysonMapSolution:
    pairs = [displacement_map(g, config, k) for g, k in zip(gammas, kappas)]
    eta = np.stack([p[0] for p in pairs])
    eta_inv = np.stack([p[1] for p in pairs])
    eta_dot = time_derivative(eta, grid_step(times))
    return DysonMapSolution(times=times, eta=eta, eta_dot=eta_dot, eta_inv=eta_inv, config=config, **kwargs)


def build_bar_map_linear(model: LinearModel, grid, config: FockConfig) -> DysonMapSolution:
    """Closed-form bar map ``exp(gamma_bar a + gamma_bar* a_dag)`` on a grid."""
    times = np.asarray(grid, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SideConditionWarning)
        gammas = np.array([bar_gamma(model, t) for t in times])
    violation = max(bar_side_condition(model, t) for t in times)
    if violation > SIDE_CONDITION_TOL:
        warnings.warn(
            f"max Im(alpha beta) = {violation:.3e} on the grid", SideConditionWarning, stacklevel=2
        )
    return _map_from_gammas(
        times,
        gammas,
        np.zeros(times.size),
        config,
        params=gammas,
        provenance="bar_closed_form",
        diagnostics={"side_condition_max": violation},
    )


def _offset(model: LinearModel, t: float) -> complex:
    return model.offset(t) if model.offset is not None else 0.0


def gamma_rhs(model: LinearModel, t: float, gamma: complex) -> complex:
    """Right side of ``d(gamma)/dt = i omega gamma + i (alpha - beta*) / 2``."""
    w, al, be = model.coefficients(t)
    return 1j * w * gamma + 0.5j * (al - be.conjugate())


def kappa_rhs(model: LinearModel, t: float, gamma: complex) -> float:
    """Rate of the scalar normalisation that keeps the identity part of ``h`` real."""
    _, al, be = model.coefficients(t)
    return -(-al * gamma.conjugate() + be * gamma + _offset(model, t)).imag


def _state_rhs(model: LinearModel, t: float, y: np.ndarray) -> np.ndarray:
    g = complex(y[0])
    return np.array([gamma_rhs(model, t, g), kappa_rhs(model, t, g)], dtype=complex)


def _rk4_step(model, t, y, h):
    k1 = _state_rhs(model, t, y)
    k2 = _state_rhs(model, t + h / 2, y + h / 2 * k1)
    k3 = _state_rhs(model, t + h / 2, y + h / 2 * k2)
    k4 = _state_rhs(model, t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_gamma(model: LinearModel, gamma0: complex, grid) -> tuple[np.ndarray, np.ndarray, float]:
    """RK4 for ``(gamma, kappa)`` at step = grid spacing.

    Each step is checked against two half steps; the Richardson estimate
    ``|y_h - y_h/2| / 15`` must stay below 1e-10.

    Returns:
        ``(gamma, kappa, largest local error estimate)``.

    Raises:
        StepSizeError: if a local error estimate exceeds 1e-10.
    """
    times = np.asarray(grid, dtype=float)
    y = np.array([complex(gamma0), 0.0], dtype=complex)
    out = np.empty((times.size, 2), dtype=complex)
    out[0] = y
    worst = 0.0
    for k in range(times.size - 1):
        t = times[k]
        h = times[k + 1] - t
        full = _rk4_step(model, t, y, h)
        half = _rk4_step(model, t + h / 2, _rk4_step(model, t, y, h / 2), h / 2)
        err = float(np.max(np.abs(full - half))) / 15
        worst = max(worst, err)
        if err > STEP_ERROR_TOL:
            raise StepSizeError(f"local error {err:.2e} at t={t:.4g} exceeds {STEP_ERROR_TOL:g}; reduce the step")
        y = full
        out[k + 1] = y
    return out[:, 0], out[:, 1].real, worst


def solve_gamma_ode(model: LinearModel, gamma0: complex, grid, config: FockConfig) -> DysonMapSolution:
    """Invariant-form map driven by the gamma ODE.

    The map carries a real scalar factor ``e^kappa`` (``kappa(t0) = 0``)
    whose rate cancels the imaginary part of the identity coefficient of
    ``h``. Without it ``h`` is Hermitian only up to an imaginary c-number
    whenever ``-alpha gamma* + beta gamma`` is complex.
    """
    times = np.asarray(grid, dtype=float)
    gammas, kappas, worst = integrate_gamma(model, gamma0, times)
    gamma_dots = np.array([gamma_rhs(model, t, g) for t, g in zip(times, gammas)])
    kappa_dots = np.array([kappa_rhs(model, t, g) for t, g in zip(times, gammas)])
    return _map_from_gammas(
        times,
        gammas,
        kappas,
        config,
        params=gammas,
        provenance="gamma_ode",
        diagnostics={
            "kappa": kappas,
            "gamma_dot": gamma_dots,
            "kappa_dot": kappa_dots,
            "local_error_max": worst,
        },
    )


def lift_linear_model(model: LinearModel, solution: DysonMapSolution) -> LinearModel:
    """Coefficients of ``H + i eta^-1 d(eta)/dt`` for a gamma-ODE map.

    ``alpha' = alpha + i gamma_dot``, ``beta' = beta + i gamma_dot*`` and the
    offset gains ``i kappa_dot + Im(gamma gamma_dot*)``. Tracks are sampled
    on the map's grid.
    """
    times = solution.times
    g = np.asarray(solution.params, dtype=complex)
    gd = solution.diagnostics["gamma_dot"]
    kd = solution.diagnostics["kappa_dot"]
    _, al, be = model.coefficients(times)
    c = model.offset(times) if model.offset is not None else np.zeros(times.size)
    return LinearModel(
        omega=model.omega,
        alpha=CoefficientTrack.from_samples(times, al + 1j * gd),
        beta=CoefficientTrack.from_samples(times, be + 1j * gd.conj()),
        offset=CoefficientTrack.from_samples(times, c + 1j * kd + (g * gd.conj()).imag),
    )


@dataclass(frozen=True)
class HermitianCoefficients:
    """Coefficients of a mapped quadratic Hamiltonian on a grid.

    Linear model: ``h = omega a_dag a + u a + v a_dag + f``. Swanson model:
    ``h = W (a_dag a + 1/2) + V a^2 + T a_dag^2``. Unused fields are ``None``.
    """

    times: np.ndarray
    u: np.ndarray | None = None
    v: np.ndarray | None = None
    f: np.ndarray | None = None
    W: np.ndarray | None = None
    V: np.ndarray | None = None
    T: np.ndarray | None = None
    f_prime: np.ndarray | None = None

    @property
    def max_v_minus_u_conj(self) -> float:
        return float(np.max(np.abs(self.v - np.conj(self.u))))

    @property
    def max_im_f(self) -> float:
        return float(np.max(np.abs(np.imag(self.f))))

    @property
    def max_t_minus_v_conj(self) -> float:
        return float(np.max(np.abs(self.T - np.conj(self.V))))

    @property
    def max_im_w(self) -> float:
        return float(np.max(np.abs(np.imag(self.W))))


def linear_hermitian_coeffs(model: LinearModel, gamma, grid) -> HermitianCoefficients:
    """``u, v, f`` of ``eta H' eta^-1`` for ``eta = exp(gamma a + gamma* a_dag)``.

    ``gamma`` is a track, an array on ``grid`` or a :class:`DysonMapSolution`
    built from gammas; its derivative is taken by finite differences::

        u = omega gamma + alpha + i gamma_dot
        v = beta - omega gamma* + i gamma_dot*
        f = -omega |gamma|^2 - alpha gamma* + beta gamma + (i/2)(gamma gamma_dot* - gamma* gamma_dot)

    The scalar factor of a gamma-ODE map is not included, so ``Im f`` shows
    how far the unnormalised map is from giving a real identity part.
    """
    times = np.asarray(grid, dtype=float)
    if isinstance(gamma, DysonMapSolution):
        g = np.asarray(gamma.params, dtype=complex)
    elif callable(gamma):
        g = np.asarray(gamma(times), dtype=complex)
    else:
        g = np.asarray(gamma, dtype=complex)
    gd = time_derivative(g, grid_step(times))
    w, al, be = model.coefficients(times)
    u = w * g + al + 1j * gd
    v = be - w * g.conj() + 1j * gd.conj()
    f = -w * np.abs(g) ** 2 - al * g.conj() + be * g + 0.5j * (g * gd.conj() - g.conj() * gd)
    if model.offset is not None:
        f = f + model.offset(times)
    return HermitianCoefficients(times=times, u=u, v=v, f=f)


def printed_f(model: LinearModel, gamma: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Reduced identity coefficient ``-alpha gamma* + beta gamma + Re(alpha gamma* - beta gamma)/2``."""
    _, al, be = model.coefficients(np.asarray(times, dtype=float))
    g = np.asarray(gamma, dtype=complex)
    return -al * g.conj() + be * g + (al * g.conj() - be * g).real / 2


def printed_f_prime(model: LinearModel, gamma: np.ndarray, gamma_prime: np.ndarray, times) -> np.ndarray:
    """Identity coefficient of ``h'`` in the closed form quoted for the second link."""
    w, al, be = model.coefficients(np.asarray(times, dtype=float))
    g = np.asarray(gamma, dtype=complex)
    gp = np.asarray(gamma_prime, dtype=complex)
    return (
        w * (np.abs(g) ** 2 + 2 * np.abs(gp) ** 2 - (g * gp.conj()).real)
        + (al * g.conj() - be * g).real / 2
        - 1j * (al * gp.conj() - be * gp).imag
    )
