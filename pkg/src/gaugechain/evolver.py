"""State propagation in the flat and metric spaces, observable transport and
the analytic displaced-Fock propagator of the linear model.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Union

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.special import gammaln

from .chain_builder import GaugeLink
from .dyson_maps.schrodinger import as_time_function
from .dyson_maps.solution import DysonMapSolution
from .errors import HermiticityViolation, TruncationError
from .fock_core import FockConfig, build_ladder, matrix_exp
from .models import hermiticity_residual
from .numerics import check_same_grid, grid_step, interpolate_samples, time_derivative

HERM_ABORT_TOL = 1e-6

# A callable ``t -> matrix``, a ``(T, n, n)`` stack on the grid or one constant matrix.
Generator = Union[Callable[[float], np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes in one Hilbert space; ``space_tag`` is ``'flat'`` or ``'metric'``."""

    amplitudes: np.ndarray
    space_tag: str = "flat"
    time: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be a finite 1-D array")
        if self.space_tag not in ("flat", "metric"):
            raise ValueError(f"unknown space tag {self.space_tag!r}")
        object.__setattr__(self, "amplitudes", amps)


def coherent_amplitudes(z: complex, n: int) -> np.ndarray:
    """``<m|z> = exp(-|z|^2/2) z^m / sqrt(m!)`` for ``m < n``."""
    z = complex(z)
    m = np.arange(n)
    if z == 0:
        out = np.zeros(n, dtype=complex)
        out[0] = 1.0
        return out
    log_mag = -abs(z) ** 2 / 2 + m * math.log(abs(z)) - 0.5 * gammaln(m + 1)
    return np.exp(log_mag) * np.exp(1j * m * np.angle(z))


def coherent_state(z: complex, config: FockConfig, theta0: complex = 0.0) -> StateVector:
    """``|z> = D(z)|0>`` after checking the amplitude budget.

    Raises:
        TruncationError: if ``|z| + |theta0|`` exceeds ``sqrt(dim - tail_guard) / 2``
            or the state leaks more than ``tol_tail`` into the tail.
    """
    budget = math.sqrt(config.dim - config.tail_guard) / 2
    if abs(z) + abs(theta0) > budget:
        raise TruncationError(f"|phi0| + |theta0| = {abs(z) + abs(theta0):.3g} exceeds budget {budget:.3g}")
    amps = coherent_amplitudes(z, config.work_dim)
    tail = float(np.sum(np.abs(amps[config.guard:]) ** 2))
    if tail > config.tol_tail:
        raise TruncationError(f"coherent state leaks {tail:.2e} into the tail")
    return StateVector(amps)


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Time series produced by a propagator."""

    times: np.ndarray
    states: np.ndarray
    space_tag: str
    flat_norm: np.ndarray
    metric_norm: np.ndarray | None = None
    observables: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def norm_drift(self, which: str = "flat") -> float:
        series = self.flat_norm if which == "flat" else self.metric_norm
        return float(np.max(np.abs(series - series[0])))

    def rows(self, extra: dict | None = None) -> list[dict]:
        columns = {"t": self.times, "flat_norm": self.flat_norm}
        if self.metric_norm is not None:
            columns["metric_norm"] = self.metric_norm
        columns.update(self.observables)
        columns.update(self.residuals)
        columns.update(extra or {})
        return [{k: float(np.real(v[i])) for k, v in columns.items()} for i in range(self.times.size)]

    def to_csv(self, path: str | Path, extra: dict | None = None) -> Path:
        rows = self.rows(extra)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        return path


_GAUSS_OFFSET = math.sqrt(3) / 6


def _step_exponents(gen: Generator, times: np.ndarray, stepper: str):
    """Yield ``(grid-time matrix, step exponent Omega)`` with ``v <- exp(-i Omega) v``.

    ``midpoint``: ``Omega = dt G(t + dt/2)``; stacks use the neighbour
    average. ``magnus4``: two-point Gauss-Legendre Magnus expansion
    ``Omega = dt (G1 + G2)/2 - i sqrt(3) dt^2 [G2, G1]/12``; stacks are
    interpolated with local cubic polynomials.
    """
    if stepper not in ("midpoint", "magnus4"):
        raise ValueError(f"unknown stepper {stepper!r}")
    fn = as_time_function(gen, times)
    stack = None if callable(gen) else np.asarray(gen)
    for k in range(times.size - 1):
        t, dt = times[k], times[k + 1] - times[k]
        G_k = stack[k] if stack is not None else fn(t)
        if stepper == "midpoint":
            G_mid = (stack[k] + stack[k + 1]) / 2 if stack is not None else fn(t + dt / 2)
            yield G_k, dt * G_mid
        else:
            G1 = fn(t + (0.5 - _GAUSS_OFFSET) * dt)
            G2 = fn(t + (0.5 + _GAUSS_OFFSET) * dt)
            yield G_k, dt * (G1 + G2) / 2 - 1j * math.sqrt(3) * dt**2 / 12 * (G2 @ G1 - G1 @ G2)


def _grid_matrix(gen: Generator, times: np.ndarray, k: int) -> np.ndarray:
    return gen(times[k]) if callable(gen) else np.asarray(gen)[k]


def _propagate(gen: Generator, v0: np.ndarray, times: np.ndarray, config: FockConfig | None,
               herm_check: bool, stepper: str = "midpoint") -> np.ndarray:
    if not callable(gen) and np.ndim(gen) == 2:
        gen = np.broadcast_to(gen, (times.size,) + np.shape(gen))
    out = np.empty((times.size, v0.size), dtype=complex)
    out[0] = v0
    v = v0
    for k, (G_k, omega) in enumerate(_step_exponents(gen, times, stepper)):
        if herm_check:
            r = hermiticity_residual(G_k, config)
            if r > HERM_ABORT_TOL:
                raise HermiticityViolation(f"generator not Hermitian at t={times[k]:.4g}: residual {r:.2e}")
        v = matrix_exp(-1j * omega) @ v
        out[k + 1] = v
    if herm_check:
        r = hermiticity_residual(_grid_matrix(gen, times, times.size - 1), config)
        if r > HERM_ABORT_TOL:
            raise HermiticityViolation(f"generator not Hermitian at t={times[-1]:.4g}: residual {r:.2e}")
    return out


def _amps(state) -> np.ndarray:
    return state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)


def propagate_flat(h: Generator, phi0, grid, config: FockConfig, stepper: str = "midpoint") -> TrajectoryRecord:
    """Exponential-midpoint propagation ``phi <- exp(-i dt h_mid) phi`` under a Hermitian generator.

    Time-indexed stacks use the average of the two neighbouring samples as
    the midpoint value. ``stepper='magnus4'`` selects the fourth-order
    Magnus step instead.

    Raises:
        HermiticityViolation: if ``h`` is not Hermitian within 1e-6 at a grid time.
    """
    times = np.asarray(grid, dtype=float)
    states = _propagate(h, _amps(phi0), times, config, herm_check=True, stepper=stepper)
    flat = np.sum(np.abs(states) ** 2, axis=1)
    return TrajectoryRecord(times=times, states=states, space_tag="flat", flat_norm=flat)


def propagate_metric(H: Generator, psi0, map_: DysonMapSolution, grid, config: FockConfig,
                     h: Generator | None = None, stepper: str = "midpoint") -> TrajectoryRecord:
    """Propagate ``i psi_dot = H psi`` with the same stepper (no renormalisation).

    Records the metric norm ``<psi|rho psi> = ||eta psi||^2``. When the flat
    generator ``h`` is supplied, ``phi`` is propagated alongside from
    ``eta_0 psi_0`` and ``||eta psi - phi||`` is recorded as ``transport``.
    """
    times = np.asarray(grid, dtype=float)
    check_same_grid(times, map_.times)
    psi0 = _amps(psi0)
    states = _propagate(H, psi0, times, config, herm_check=False, stepper=stepper)
    mapped = np.einsum("kij,kj->ki", map_.eta, states)
    metric = np.sum(np.abs(mapped) ** 2, axis=1)
    flat = np.sum(np.abs(states) ** 2, axis=1)
    residuals = {}
    if h is not None:
        phi = _propagate(h, map_.eta[0] @ psi0, times, config, herm_check=True, stepper=stepper)
        residuals["transport"] = np.linalg.norm(mapped - phi, axis=1)
    return TrajectoryRecord(times=times, states=states, space_tag="metric", flat_norm=flat,
                            metric_norm=metric, residuals=residuals)


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


def quadrature(k: int, config: FockConfig | int) -> np.ndarray:
    """``x_1 = (a + a_dag)/2`` and ``x_2 = (a - a_dag)/(2i)``."""
    a, ad = build_ladder(config)
    if k == 1:
        return (a + ad) / 2
    if k == 2:
        return (a - ad) / 2j
    raise ValueError("quadrature index must be 1 or 2")


@dataclass(frozen=True, eq=False)
class Observable:
    """A Hermitian flat-space operator ``o`` and its transports ``eta^-1 o eta``."""

    flat_form: np.ndarray
    name: str = ""

    def __post_init__(self):
        o = np.asarray(self.flat_form, dtype=complex)
        if hermiticity_residual(o) > 1e-12:
            raise HermiticityViolation(f"observable {self.name!r} is not Hermitian")
        object.__setattr__(self, "flat_form", o)

    def transported(self, map_: DysonMapSolution) -> np.ndarray:
        return map_.eta_inv @ self.flat_form @ map_.eta


def metric_expectation(map_: DysonMapSolution, O: np.ndarray, psi: np.ndarray, psi_tilde: np.ndarray | None = None) -> np.ndarray:
    """``<psi|rho O psi_tilde>`` per grid time for stacks ``O`` and states ``psi``."""
    psi_tilde = psi if psi_tilde is None else psi_tilde
    left = np.einsum("kij,kj->ki", map_.eta, psi)
    right = np.einsum("kij,kjl,kl->ki", map_.eta, O, psi_tilde)
    return np.einsum("ki,ki->k", left.conj(), right)


def flat_expectation(o: np.ndarray, phi: np.ndarray, phi_tilde: np.ndarray | None = None) -> np.ndarray:
    phi_tilde = phi if phi_tilde is None else phi_tilde
    if o.ndim == 2:
        return np.einsum("ki,ij,kj->k", phi.conj(), o, phi_tilde)
    return np.einsum("ki,kij,kj->k", phi.conj(), o, phi_tilde)


# ---------------------------------------------------------------------------
# analytic propagator
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AnalyticPropagatorSpec:
    """Ingredients of ``U_t = Y_t D(theta_t) R(chi_t) D^dag(theta_0)``.

    ``phase`` is the m-independent part of the phase of ``D(theta)|m>``,
    the integral of ``<0|D^dag (i d/dt - h) D|0>``; the full phase of
    ``D(theta)|m>`` is ``phase - m chi``. ``Y_t = exp(i phase)``.
    """

    times: np.ndarray
    theta0: complex
    chi: np.ndarray
    f: np.ndarray
    theta: np.ndarray
    phase: np.ndarray
    theta_dynamics: str
    m: int = 0

    def lr_phase(self, m: int | None = None) -> np.ndarray:
        m = self.m if m is None else m
        return self.phase - m * self.chi

    def printed_lr_phase(self, m: int | None = None) -> np.ndarray:
        """``-m chi - integral of f``, which ignores the drive."""
        m = self.m if m is None else m
        return -m * self.chi - _cumulative(self.f, self.times)


def _cumulative(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return _cumulative(values.real, times) + 1j * _cumulative(values.imag, times)
    return cumulative_simpson(values, x=times, initial=0.0)


def make_analytic_spec(omega: np.ndarray, u: np.ndarray, f: np.ndarray, theta0: complex, grid,
                       theta_dynamics: str = "corrected", m: int = 0) -> AnalyticPropagatorSpec:
    """Build the propagator data for ``h = omega a_dag a + u a + u* a_dag + f``.

    ``theta_dynamics='printed'`` uses ``theta_t = theta0 exp(-i chi_t)``,
    which solves only the drive-free equation. ``'corrected'`` integrates
    ``i theta_dot = omega theta + u*`` by RK4 with the coefficient samples
    interpolated to the stage times.
    """
    times = np.asarray(grid, dtype=float)
    omega = np.asarray(omega, dtype=complex)
    u = np.asarray(u, dtype=complex)
    f = np.asarray(f, dtype=complex)
    chi = _cumulative(omega.real, times)
    if theta_dynamics == "printed":
        theta = complex(theta0) * np.exp(-1j * chi)
        theta_dot = -1j * omega.real * theta
    elif theta_dynamics == "corrected":
        def rhs(t, th):
            w = interpolate_samples(times, omega, t).real
            uu = interpolate_samples(times, u, t)
            return -1j * (w * th + np.conj(uu))

        theta = np.empty(times.size, dtype=complex)
        theta[0] = th = complex(theta0)
        for k in range(times.size - 1):
            t, h = times[k], times[k + 1] - times[k]
            k1 = rhs(t, th)
            k2 = rhs(t + h / 2, th + h / 2 * k1)
            k3 = rhs(t + h / 2, th + h / 2 * k2)
            k4 = rhs(t + h, th + h * k3)
            th = th + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            theta[k + 1] = th
        theta_dot = -1j * (omega.real * theta + u.conj())
    else:
        raise ValueError(f"unknown theta dynamics {theta_dynamics!r}")
    # <0|D^dag (i d/dt - h) D|0> = Im(theta theta_dot*) - omega|theta|^2 - 2 Re(u theta) - f
    rate = (theta * theta_dot.conj()).imag - omega.real * np.abs(theta) ** 2 - 2 * (u * theta).real - f.real
    phase = _cumulative(rate, times)
    return AnalyticPropagatorSpec(times=times, theta0=complex(theta0), chi=chi, f=f.real, theta=theta,
                                  phase=phase, theta_dynamics=theta_dynamics, m=m)


def coherent_label(spec: AnalyticPropagatorSpec, phi0: complex) -> np.ndarray:
    """Coherent amplitude ``e^{-i chi}(phi0 - theta0) + theta_t`` of ``U_t|phi0>``."""
    return np.exp(-1j * spec.chi) * (complex(phi0) - spec.theta0) + spec.theta


def analytic_propagate(spec: AnalyticPropagatorSpec, phi0: complex, config: FockConfig,
                       h: Generator | None = None) -> TrajectoryRecord:
    """``U_t|phi0>`` from coherent-state algebra, without matrix exponentials.

    Displacements compose as ``D(a)D(b) = exp((a b* - a* b)/2) D(a + b)``, so
    ``U_t|phi0>`` is a phase times the coherent state with label
    :func:`coherent_label`. When ``h`` is supplied, the Schrodinger residual
    ``||(i d/dt - h) phi_t||`` is evaluated with differenced states and
    stored as ``schrodinger``.
    """
    phi0 = complex(phi0)
    coherent_state(phi0, config, spec.theta0)  # budget check
    w = np.exp(-1j * spec.chi) * (phi0 - spec.theta0)
    z = w + spec.theta
    th0 = spec.theta0
    phase = (
        spec.phase
        + ((th0.conjugate() * phi0 - th0 * phi0.conjugate()) / 2j).real
        + ((spec.theta * w.conj() - spec.theta.conj() * w) / 2j).real
    )
    n = config.work_dim
    states = np.stack([np.exp(1j * p) * coherent_amplitudes(zz, n) for p, zz in zip(phase, z)])
    flat = np.sum(np.abs(states) ** 2, axis=1)
    residuals = {}
    if h is not None:
        times = spec.times
        dphi = time_derivative(states, grid_step(times))
        Hs = np.stack([_grid_matrix(h, times, k) for k in range(times.size)])
        r = 1j * dphi - np.einsum("kij,kj->ki", Hs, states)
        g = config.guard
        residuals["schrodinger"] = np.linalg.norm(r[:, :g], axis=1)
    return TrajectoryRecord(times=spec.times, states=states, space_tag="flat", flat_norm=flat,
                            observables={"x1_closed_form": z.real, "x2_closed_form": z.imag},
                            residuals=residuals, diagnostics={"label": z, "theta_dynamics": spec.theta_dynamics})


@dataclass(frozen=True)
class QuadratureComparison:
    """Three routes to ``<X_1>``, ``<X_2>`` and their pairwise gaps."""

    times: np.ndarray
    metric: np.ndarray
    flat: np.ndarray
    closed_form: np.ndarray
    transported: np.ndarray
    deviations: dict

    def max_pairwise(self) -> float:
        keys = ("metric_vs_flat", "metric_vs_closed", "flat_vs_closed")
        return max(self.deviations[k] for k in keys)


def quadrature_expectations(map_: DysonMapSolution, metric_traj: TrajectoryRecord, flat_traj: TrajectoryRecord,
                            spec: AnalyticPropagatorSpec, phi0: complex) -> QuadratureComparison:
    """``(<X_1>, <X_2>)`` per time by three routes.

    (i) metric space: ``<psi|rho eta^-1 x_k eta psi>`` on the propagated ``psi``;
    (ii) flat space: ``<phi|x_k phi>``;
    (iii) closed form: real and imaginary parts of the coherent label.
    ``transported`` repeats (i) with ``psi = eta^-1 phi``, which equals (ii)
    identically; its gap measures round-off only.
    """
    cfg = map_.config
    out = {}
    for name, states in (("metric", metric_traj.states), ("transported", None)):
        cols = []
        for k in (1, 2):
            X = Observable(quadrature(k, cfg), f"x{k}").transported(map_)
            psi = states if states is not None else np.einsum("kij,kj->ki", map_.eta_inv, flat_traj.states)
            cols.append(metric_expectation(map_, X, psi).real)
        out[name] = np.stack(cols, axis=1)
    flat = np.stack([flat_expectation(quadrature(k, cfg), flat_traj.states).real for k in (1, 2)], axis=1)
    z = coherent_label(spec, phi0)
    closed = np.stack([z.real, z.imag], axis=1)

    def gap(a, b):
        return float(np.max(np.abs(a - b)))

    deviations = {
        "metric_vs_flat": gap(out["metric"], flat),
        "metric_vs_closed": gap(out["metric"], closed),
        "flat_vs_closed": gap(flat, closed),
        "transported_vs_flat": gap(out["transported"], flat),
    }
    return QuadratureComparison(times=map_.times, metric=out["metric"], flat=flat, closed_form=closed,
                                transported=out["transported"], deviations=deviations)


# ---------------------------------------------------------------------------
# cross-space matrix elements
# ---------------------------------------------------------------------------


def cross_space_matrix_elements(obs: Observable, maps: tuple[DysonMapSolution, DysonMapSolution], gauge: GaugeLink,
                                states: tuple[np.ndarray, np.ndarray], index: int) -> dict:
    """Matrix elements of ``O`` in space ``k`` and of ``O'`` in space ``k+1`` at grid index ``index``.

    ``states`` are ``(psi, psi_tilde)`` in space ``k``. They are carried to
    space ``k+1`` by ``psi' = eta'^-1 A eta psi``. For a global link the two
    elements and the flat element ``<phi|o phi_tilde>`` coincide; for a local
    link only the space-``k`` and flat elements are reported.
    """
    m0, m1 = maps
    psi, psi_t = (np.asarray(s, dtype=complex) for s in states)
    eta, eta_inv = m0.eta[index], m0.eta_inv[index]
    o = obs.flat_form
    phi, phi_t = eta @ psi, eta @ psi_t
    rho = eta.conj().T @ eta
    O = eta_inv @ o @ eta
    element_k = np.vdot(psi, rho @ O @ psi_t)
    element_flat = np.vdot(phi, o @ phi_t)
    report = {"kind": gauge.kind, "element_k": element_k, "element_flat": element_flat}
    if gauge.is_global:
        a = gauge.a_factor[index]
        eta1, eta1_inv = m1.eta[index], m1.eta_inv[index]
        psi1, psi1_t = eta1_inv @ (a * phi), eta1_inv @ (a * phi_t)
        rho1 = eta1.conj().T @ eta1
        O1 = eta1_inv @ o @ eta1
        element_k1 = np.vdot(psi1, rho1 @ O1 @ psi1_t)
        report["element_k1"] = element_k1
        report["deviation"] = float(max(abs(element_k - element_k1), abs(element_k - element_flat)))
    else:
        report["element_k1"] = None
        report["deviation"] = None
    return report


def hamiltonian_element_check(H_next: np.ndarray, h_k: np.ndarray, h_next: np.ndarray,
                              maps: tuple[DysonMapSolution, DysonMapSolution], states: tuple[np.ndarray, np.ndarray],
                              index: int) -> dict:
    """``<psi'|rho' H' psi'~>`` in space ``k+1`` against its two flat-space rewrites.

    ``h_k = eta H' eta^-1`` and ``h_next = eta' H'' eta'^-1`` are the
    counterparts of levels ``k`` and ``k+1``. The element equals
    ``<phi'|(h' - i eta'_dot eta'^-1) phi'~>`` and
    ``<phi'|eta' eta^-1 h eta eta'^-1 phi'~>`` but not ``<phi'|h' phi'~>``.
    """
    m0, m1 = maps
    psi1, psi1_t = (np.asarray(s, dtype=complex) for s in states)
    eta, eta_inv = m0.eta[index], m0.eta_inv[index]
    eta1, eta1_inv, eta1_dot = m1.eta[index], m1.eta_inv[index], m1.eta_dot[index]
    phi1, phi1_t = eta1 @ psi1, eta1 @ psi1_t
    lhs = np.vdot(psi1, eta1.conj().T @ eta1 @ H_next[index] @ psi1_t)
    rhs_a = np.vdot(phi1, (h_next[index] - 1j * eta1_dot @ eta1_inv) @ phi1_t)
    rhs_b = np.vdot(phi1, eta1 @ eta_inv @ h_k[index] @ eta @ eta1_inv @ phi1_t)
    naive = np.vdot(phi1, h_next[index] @ phi1_t)
    return {"lhs": lhs, "rhs_generator_form": rhs_a, "rhs_conjugation_form": rhs_b, "flat_h_element": naive,
            "deviation": float(max(abs(lhs - rhs_a), abs(lhs - rhs_b))), "gap_to_flat_h": float(abs(lhs - naive))}


def guarded_state_norm(states: np.ndarray, config: FockConfig) -> np.ndarray:
    return np.linalg.norm(states[:, : config.guard], axis=1)


__all__ = [
    "AnalyticPropagatorSpec",
    "Observable",
    "QuadratureComparison",
    "StateVector",
    "TrajectoryRecord",
    "analytic_propagate",
    "coherent_label",
    "coherent_state",
    "cross_space_matrix_elements",
    "flat_expectation",
    "guarded_state_norm",
    "hamiltonian_element_check",
    "make_analytic_spec",
    "metric_expectation",
    "propagate_flat",
    "propagate_metric",
    "quadrature",
    "quadrature_expectations",
]
