"""The shipped acceptance criteria as executable checks.

Each ``criterion_N`` function builds its own models and grids, evaluates
the measured quantities and returns a :class:`CriterionResult` holding one
:class:`Check` per tolerance. Shared setups are cached so that running the
whole suite solves each Dyson map only once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .chain_builder import analyze_gauge, base_node, build_chain, collapse_check, gauge_ode_residual, link
from .dyson_maps import (
    build_bar_map_linear,
    displacement_map,
    lift_linear_model,
    linear_hermitian_coeffs,
    metric_drift,
    newton_swanson_bar,
    solve_gamma_ode,
    solve_schrodinger_like,
    solve_swanson_bar_track,
    solve_swanson_invariant,
)
from .dyson_maps.linear import bar_gamma, integrate_gamma
from .dyson_maps.swanson import bar_matrix_residual, eq49_residuals
from .evolver import (
    Observable,
    coherent_state,
    cross_space_matrix_elements,
    make_analytic_spec,
    propagate_flat,
    propagate_metric,
    quadrature,
    quadrature_expectations,
)
from .fock_core import FockConfig, gauss_decompose, gauss_residual
from .models import LinearModel, SwansonModel, build_linear_hamiltonian, build_swanson_hamiltonian, hermiticity_residual
from .numerics import uniform_grid

STEP = 1e-3
SWANSON_STEP = 1e-2
LINEAR_CONFIG = FockConfig(40, tail_guard=5, pad=10)
COLLAPSE_CONFIG = FockConfig(20, tail_guard=5, pad=10)
SWANSON_CONFIG = FockConfig(60, tail_guard=5, pad=30)
GAUSS_CONFIG = FockConfig(60, tail_guard=5, pad=140)
EVOLUTION_STEPPER = "magnus4"

CONSTANT_LINEAR = LinearModel(1.0, 0.2, 0.4)
DRIVEN_LINEAR = LinearModel(1.0, "0.2*sin(t)", "0.4*sin(t)")
GAMMA0 = 0.05 + 0.02j
GAMMA0_PRIME = 0.03 - 0.01j
PHI0 = 0.5 + 0.3j
PHI0_TILDE = -0.2 + 0.4j
THETA0 = 0.1 - 0.05j


@dataclass(frozen=True)
class Check:
    """One measured quantity against its tolerance.

    ``relation`` is ``'<'`` (measured must stay below the tolerance), ``'>='``
    (measured must reach it, used for sensitivity checks), ``'=='`` (exact
    label match) or ``'in'`` (``tolerance`` is a closed interval).
    """

    name: str
    measured: object
    tolerance: object
    relation: str = "<"

    @property
    def passed(self) -> bool:
        if self.relation == "<":
            return bool(np.isfinite(self.measured) and self.measured < self.tolerance)
        if self.relation == ">=":
            return bool(self.measured >= self.tolerance)
        if self.relation == "==":
            return self.measured == self.tolerance
        if self.relation == "in":
            lo, hi = self.tolerance
            return bool(lo <= self.measured <= hi)
        raise ValueError(f"unknown relation {self.relation!r}")

    def as_dict(self) -> dict:
        def plain(x):
            if isinstance(x, (np.floating, np.integer)):
                return x.item()
            if isinstance(x, tuple):
                return [plain(v) for v in x]
            return x

        return {"name": self.name, "measured": plain(self.measured), "tolerance": plain(self.tolerance),
                "relation": self.relation, "pass": self.passed}


@dataclass
class CriterionResult:
    number: int
    title: str
    checks: list[Check] = field(default_factory=list)
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = "; ".join(f"{c.name}={_fmt(c.measured)} {c.relation} {_fmt(c.tolerance)}" for c in self.checks)
        return f"[{status}] criterion {self.number:2d} {self.title}: {worst}"


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{x:.3g}"
    if isinstance(x, tuple):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    return str(x)


# ---------------------------------------------------------------------------
# shared setups
# ---------------------------------------------------------------------------


def _grid(step: float = STEP, t1: float = 1.0) -> np.ndarray:
    return uniform_grid(0.0, t1, step)


@lru_cache(maxsize=None)
def _linear_base(model_key: str, dim_key: str = "linear", step: float = STEP):
    model = {"constant": CONSTANT_LINEAR, "driven": DRIVEN_LINEAR}[model_key]
    config = {"linear": LINEAR_CONFIG, "collapse": COLLAPSE_CONFIG}[dim_key]
    times = _grid(step)
    return model, config, base_node(lambda s: build_linear_hamiltonian(model, s, config), times, config)


@lru_cache(maxsize=None)
def _linear_maps():
    model, config, base = _linear_base("driven")
    times = base.times
    bar = build_bar_map_linear(model, times, config)
    eta = solve_gamma_ode(model, GAMMA0, times, config)
    lifted = lift_linear_model(model, eta)
    eta_prime = solve_gamma_ode(lifted, GAMMA0_PRIME, times, config)
    return bar, eta, eta_prime


@lru_cache(maxsize=None)
def _linear_chain(sign: float = 1.0):
    bar, eta, eta_prime = _linear_maps()
    _, _, base = _linear_base("driven")
    return build_chain(base, {-1: bar, 0: eta, 1: eta_prime}, -1, 1, sign=sign)


@lru_cache(maxsize=None)
def _collapse(step: float, sign: float = 1.0):
    model, config, base = _linear_base("constant", "collapse", step)
    eta0 = displacement_map(bar_gamma(model, 0.0), config)[0]
    return collapse_check(base, base.times, eta0, sign=sign)


@lru_cache(maxsize=None)
def _evolution():
    model, config, base = _linear_base("driven")
    times = base.times
    _, eta, _ = _linear_maps()
    h = link(base, eta).hermitian_counterpart
    coeffs = linear_hermitian_coeffs(model, eta, times)
    omega = model.coefficients(times)[0]
    spec = make_analytic_spec(omega, coeffs.u, coeffs.f, THETA0, times, theta_dynamics="corrected")
    flat = propagate_flat(h, coherent_state(PHI0, config, THETA0), times, config, stepper=EVOLUTION_STEPPER)
    psi0 = eta.eta_inv[0] @ flat.states[0]
    metric = propagate_metric(base.hamiltonian, psi0, eta, times, config, h=h, stepper=EVOLUTION_STEPPER)
    return eta, spec, flat, metric


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_1() -> CriterionResult:
    """Bar-map Hermiticity for constant and driven linear coefficients."""
    result = CriterionResult(1, "bar-map Hermiticity (linear)")
    for key in ("constant", "driven"):
        model, config, base = _linear_base(key)
        bar = build_bar_map_linear(model, base.times, config)
        h_bar = bar.conjugate(base.hamiltonian)
        worst = max(hermiticity_residual(h, config) for h in h_bar)
        result.checks.append(Check(f"{key}_max_herm_residual", worst, 1e-10))
    return result


def criterion_2() -> CriterionResult:
    """Gamma-ODE stationarity and the mapped linear coefficients."""
    result = CriterionResult(2, "gamma-ODE consistency")
    model = CONSTANT_LINEAR
    stationary = bar_gamma(model, 0.0)
    gammas, _, _ = integrate_gamma(model, stationary, _grid(STEP, 5.0))
    result.checks.append(Check("stationary_drift_t5", float(np.max(np.abs(gammas - stationary))), 1e-9))
    _, eta, _ = _linear_maps()
    times = eta.times
    coeffs = linear_hermitian_coeffs(DRIVEN_LINEAR, eta, times)
    _, alpha, beta = DRIVEN_LINEAR.coefficients(times)
    result.checks.append(Check("max_v_minus_u_conj", coeffs.max_v_minus_u_conj, 1e-8))
    result.checks.append(Check("max_u_minus_target", float(np.max(np.abs(coeffs.u - (alpha + beta.conj()) / 2))), 1e-8))
    return result


def _cross_space_gap(nodes, indices) -> float:
    """Largest spread of ``<X_k>`` matrix elements across the bar, base and primed spaces."""
    bar_node, base, _ = nodes
    bar, eta, eta_prime = bar_node.dyson, base.dyson, nodes[2].dyson
    cfg = base.config
    phis = [coherent_state(z, cfg).amplitudes for z in (PHI0, PHI0_TILDE)]
    worst = 0.0
    for idx in indices:
        psi_bar = [bar.eta_inv[idx] @ p for p in phis]
        a = bar_node.gauge_to_next.a_factor[idx]
        psi = [eta.eta_inv[idx] @ (a * bar.eta[idx] @ p) for p in psi_bar]
        for k in (1, 2):
            obs = Observable(quadrature(k, cfg), f"x{k}")
            low = cross_space_matrix_elements(obs, (bar, eta), bar_node.gauge_to_next, psi_bar, idx)
            high = cross_space_matrix_elements(obs, (eta, eta_prime), base.gauge_to_next, psi, idx)
            worst = max(worst, low["deviation"], high["deviation"], abs(low["element_k"] - high["element_k1"]))
    return float(worst)


def _gauge_quantities(nodes, config) -> dict:
    out = {}
    for lower_node, upper_node in zip(nodes[:-1], nodes[1:]):
        link_ = lower_node.gauge_to_next
        name = f"{lower_node.index:+d}->{upper_node.index:+d}"
        out[f"remainder_{name}"] = link_.residual_offdiag
        if link_.is_global:
            out[f"gauge_ode_{name}"] = gauge_ode_residual(
                link_, lower_node.hermitian_counterpart, upper_node.hermitian_counterpart, lower_node.times, config
            )
    return out


def criterion_3() -> CriterionResult:
    """Global gauge links along the linear chain and cross-space matrix elements."""
    result = CriterionResult(3, "global gauge (linear)")
    nodes = _linear_chain(1.0)
    config = nodes[0].config
    q = _gauge_quantities(nodes, config)
    for name, value in q.items():
        tol = 1e-8 if name.startswith("remainder") else 1e-6
        result.checks.append(Check(name, value, tol))
    if all(n.gauge_to_next.is_global for n in nodes[:-1]):
        gap = _cross_space_gap(nodes, range(0, nodes[0].times.size, 100))
    else:
        gap = math.inf
    result.checks.append(Check("cross_space_X1_X2", gap, 1e-8))
    return result


def criterion_4() -> CriterionResult:
    """Collapse of the Schrodinger-like chain to ``2^k H`` with RK4 convergence."""
    result = CriterionResult(4, "chain collapse")
    coarse = _collapse(STEP)
    fine = _collapse(STEP / 2)
    result.checks.append(Check("max_collapse_deviation", coarse.max_deviation, 1e-6))
    result.checks.append(Check("halving_ratio", coarse.max_deviation / fine.max_deviation, (12.0, 20.0), "in"))
    return result


def criterion_5() -> CriterionResult:
    """Constant metric along a Schrodinger-like map started from the bar map."""
    result = CriterionResult(5, "metric constancy")
    model, config, base = _linear_base("constant", "collapse")
    eta0 = displacement_map(bar_gamma(model, 0.0), config)[0]
    sol = solve_schrodinger_like(base.hamiltonian, eta0, base.times, config)
    result.checks.append(Check("metric_drift", metric_drift(sol), 1e-6))
    return result


def criterion_6() -> CriterionResult:
    """Flat and metric norm conservation on the driven linear model."""
    result = CriterionResult(6, "probability conservation")
    _, _, flat, metric = _evolution()
    result.checks.append(Check("flat_norm_drift", flat.norm_drift("flat"), 1e-9))
    result.checks.append(Check("metric_norm_drift", metric.norm_drift("metric"), 1e-8))
    result.checks.append(Check("transport_eta_psi_vs_phi", float(metric.residuals["transport"].max()), 1e-6))
    return result


def criterion_7() -> CriterionResult:
    """Quadratures by three routes, and the free case against its closed form."""
    result = CriterionResult(7, "quadrature closed form")
    eta, spec, flat, metric = _evolution()
    comp = quadrature_expectations(eta, metric, flat, spec, PHI0)
    result.checks.append(Check("max_pairwise_route_gap", comp.max_pairwise(), 1e-6))

    config = LINEAR_CONFIG
    times = _grid()
    free = LinearModel(1.0, 0.0, 0.0)
    base = base_node(lambda s: build_linear_hamiltonian(free, s, config), times, config)
    identity_map = solve_gamma_ode(free, 0.0, times, config)
    h = link(base, identity_map).hermitian_counterpart
    coeffs = linear_hermitian_coeffs(free, identity_map, times)
    phi0 = 0.7 + 0.2j
    free_spec = make_analytic_spec(np.ones(times.size), coeffs.u, coeffs.f, 0.0, times)
    flat_free = propagate_flat(h, coherent_state(phi0, config), times, config, stepper=EVOLUTION_STEPPER)
    metric_free = propagate_metric(base.hamiltonian, identity_map.eta_inv[0] @ flat_free.states[0], identity_map,
                                   times, config, stepper=EVOLUTION_STEPPER)
    comp_free = quadrature_expectations(identity_map, metric_free, flat_free, free_spec, phi0)
    target = np.exp(-1j * times) * phi0
    target = np.stack([target.real, target.imag], axis=1)
    gap = max(float(np.max(np.abs(route - target))) for route in (comp_free.metric, comp_free.flat, comp_free.closed_form))
    result.checks.append(Check("free_case_vs_exact", gap, 1e-10))
    return result


def criterion_8(draws: int = 200, seed: int = 20240611) -> CriterionResult:
    """Gauss decomposition over random draws and the ``mu = 0`` limit."""
    result = CriterionResult(8, "SU(1,1) decomposition")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        eps = rng.uniform(0.05, 0.8) * rng.choice([-1.0, 1.0])
        mu = rng.uniform(0.0, 0.4 * abs(eps)) * np.exp(1j * rng.uniform(-np.pi, np.pi))
        worst = max(worst, gauss_residual(gauss_decompose(eps, mu), GAUSS_CONFIG))
    result.checks.append(Check("max_gauss_residual", worst, 1e-9))
    limit = max(abs(gauss_decompose(e, 0.0).lambda_zero - math.exp(2 * e)) / math.exp(2 * e)
                for e in (-0.8, -0.3, 0.05, 0.4, 0.8))
    result.checks.append(Check("mu0_lambda0_vs_exp_2eps", limit, 1e-12))
    return result


@lru_cache(maxsize=None)
def _swanson_root():
    return newton_swanson_bar(1.0, 0.2, 0.3, (0.1, 0.04))


def criterion_9() -> CriterionResult:
    """Newton root of the bar conditions and stationarity of the rate equations."""
    result = CriterionResult(9, "Swanson bar root")
    root = _swanson_root()
    p = root.params
    res = float(np.max(np.abs(eq49_residuals(1.0, 0.2, 0.3, p.phi, p.chi, p.varphi))))
    result.checks.append(Check("eq49_residual", res, 1e-12))
    model = SwansonModel(1.0, 0.2, 0.3)
    result.checks.append(Check("bar_matrix_residual", bar_matrix_residual(model, 0.0, p, SWANSON_CONFIG), 1e-8))
    sol = solve_swanson_invariant(model, p, _grid(SWANSON_STEP), SWANSON_CONFIG, path="printed")
    result.checks.append(Check("rate_equation_drift_per_unit_time", sol.diagnostics["drift_per_unit_time"], 1e-10))
    result.notes["newton_iterations"] = root.iterations
    return result


def criterion_10() -> CriterionResult:
    """Invariant map for driven Swanson coefficients and the local (h, h_bar) link."""
    result = CriterionResult(10, "Swanson invariant map")
    model = SwansonModel(1.0, "0.2*cos(t)", "0.3*cos(t)")
    times = _grid(SWANSON_STEP)
    config = SWANSON_CONFIG
    inv = solve_swanson_invariant(model, _swanson_root().params, times, config)
    result.checks.append(Check("max_h_herm_residual", float(np.max(inv.diagnostics["matrix_residuals"])), 1e-6))
    H = np.stack([build_swanson_hamiltonian(model, t, config) for t in times])
    h = inv.hermitian_counterpart(H)
    bar = solve_swanson_bar_track(model, times, config, seed=(0.1, _swanson_root().params.mu))
    h_bar = bar.conjugate(H)
    gauge = analyze_gauge(h_bar, h, times, config)
    result.checks.append(Check("gauge_kind", gauge.kind, "local", "=="))
    result.notes["path"] = inv.diagnostics["path"]
    result.notes["attempts"] = inv.diagnostics["attempts"]
    result.notes["gauge_remainder"] = gauge.residual_offdiag
    return result


def criterion_11() -> CriterionResult:
    """Flipping the sign of ``i eta^-1 d(eta)/dt`` must break criteria 3 and 4."""
    result = CriterionResult(11, "mutation sensitivity")
    nodes = _linear_chain(-1.0)
    q = _gauge_quantities(nodes, nodes[0].config)
    # criterion 3 fails by the largest excess of any of its quantities over the tolerance
    worst_remainder = max(v for k, v in q.items() if k.startswith("remainder"))
    result.checks.append(Check("mutated_gauge_remainder", worst_remainder, 1e-3, ">="))
    mutated = _collapse(STEP, -1.0)
    result.checks.append(Check("mutated_collapse_deviation", mutated.max_deviation, 1e-3, ">="))
    return result


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
    9: criterion_9,
    10: criterion_10,
    11: criterion_11,
}


def run_criteria(numbers=None) -> list[CriterionResult]:
    """Evaluate the selected criteria (all by default) in order."""
    numbers = sorted(CRITERIA) if numbers is None else list(numbers)
    return [CRITERIA[n]() for n in numbers]
