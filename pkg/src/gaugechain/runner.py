"""Scenario files, the run pipeline and machine-readable reports.

A scenario is a YAML mapping::

    name: linear_global_gauge
    model: {type: linear, omega: "1", alpha: "0.2*sin(t)", beta: "0.4*sin(t)"}
    fock: {dim: 40, tail_guard: 5, pad: 10}
    grid: {t0: 0, t1: 1, step: 0.001}
    chain_depth: [-1, 1]
    map_requests:
      - {link: -1, kind: bar_closed_form}
      - {link: 0, kind: gamma_ode, gamma0: {re: 0.05, im: 0.02}}
    expect_gauge: {"-1": global}
    evolution: {phi0: {re: 0.5, im: 0.3}, theta0: 0.1, stepper: magnus4}

``map_requests[*].link = k`` supplies the Dyson map of the link ``k -> k+1``.
Coefficients and complex numbers are decimal numbers, ``{re, im}`` pairs or
expression strings.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .acceptance import CRITERIA, Check
from .chain_builder import (
    ChainNode,
    base_node,
    build_chain,
    chain_records,
    collapse_deviations,
    gauge_ode_residual,
    write_chain_csv,
)
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
from .dyson_maps.linear import bar_gamma
from .dyson_maps.swanson import EPSILON_GAUGE, eq49_residuals, su11_map
from .errors import GaugeChainError, ScenarioError
from .evolver import (
    Observable,
    analytic_propagate,
    coherent_state,
    cross_space_matrix_elements,
    make_analytic_spec,
    propagate_flat,
    propagate_metric,
    quadrature,
    quadrature_expectations,
)
from .expressions import ExpressionError, compile_expression
from .fock_core import FockConfig, gauss_decompose
from .models import LinearModel, SwansonModel, build_hamiltonian, hermiticity_residual
from .numerics import uniform_grid

DEFAULT_DIM = 40
DEFAULT_TAIL_GUARD = 5
DEFAULT_STEP = 1e-3
MAP_KINDS = ("bar_closed_form", "gamma_ode", "swanson_newton", "swanson_ode", "schrodinger_like")
STEPPERS = ("midpoint", "magnus4")

DEFAULT_TOLERANCES = {
    "herm_counterpart:bar_closed_form": 1e-10,
    "herm_counterpart:gamma_ode": 1e-8,
    "herm_counterpart:swanson_newton": 1e-8,
    "herm_counterpart:swanson_ode": 1e-6,
    "metric_drift": 1e-6,
    "newton_residual": 1e-12,
    "gauge_remainder": 1e-8,
    "gauge_ode": 1e-6,
    "collapse_deviation": 1e-6,
    "flat_norm_drift": 1e-9,
    "metric_norm_drift": 1e-8,
    "transport": 1e-6,
    "analytic_schrodinger_residual": 1e-6,
    "quadrature_routes": 1e-6,
    "cross_space": 1e-8,
}


@dataclass(frozen=True)
class MapRequest:
    link: int
    kind: str
    params: dict = field(default_factory=dict)

    def to_config(self) -> dict:
        return {"link": self.link, "kind": self.kind, **self.params}


@dataclass(frozen=True)
class EvolutionRequest:
    phi0: complex
    theta0: complex = 0.0
    stepper: str = "midpoint"
    observables: tuple[str, ...] = ("x1", "x2")

    def to_config(self) -> dict:
        return {"phi0": _complex_config(self.phi0), "theta0": _complex_config(self.theta0),
                "stepper": self.stepper, "observables": list(self.observables)}


@dataclass(frozen=True, eq=False)
class Scenario:
    """A validated scenario; :meth:`to_config` gives the plain-data form."""

    name: str
    model_type: str
    model_config: dict
    model: LinearModel | SwansonModel
    fock: FockConfig
    grid: tuple[float, float, float]
    map_requests: tuple[MapRequest, ...] = ()
    chain_depth: tuple[int, int] = (0, 0)
    evolution: EvolutionRequest | None = None
    expect_gauge: dict = field(default_factory=dict)
    checks: tuple[str, ...] | None = None
    tolerances: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return uniform_grid(*self.grid)

    def maps_by_link(self) -> dict[int, MapRequest]:
        return {r.link: r for r in self.map_requests}

    def tolerance(self, key: str) -> float:
        return float(self.tolerances.get(key, DEFAULT_TOLERANCES[key]))

    def to_config(self) -> dict:
        data = {
            "name": self.name,
            "model": {"type": self.model_type, **self.model_config},
            "fock": {"dim": self.fock.dim, "tail_guard": self.fock.tail_guard, "pad": self.fock.pad,
                     "tol_tail": self.fock.tol_tail},
            "grid": {"t0": self.grid[0], "t1": self.grid[1], "step": self.grid[2]},
            "chain_depth": list(self.chain_depth),
            "map_requests": [r.to_config() for r in self.map_requests],
        }
        if self.evolution is not None:
            data["evolution"] = self.evolution.to_config()
        if self.expect_gauge:
            data["expect_gauge"] = {str(k): v for k, v in sorted(self.expect_gauge.items())}
        if self.checks is not None:
            data["checks"] = list(self.checks)
        if self.tolerances:
            data["tolerances"] = dict(self.tolerances)
        return data

    def with_overrides(self, *, dim: int | None = None, step: float | None = None) -> "Scenario":
        data = self.to_config()
        if dim is not None:
            data["fock"]["dim"] = int(dim)
        if step is not None:
            data["grid"]["step"] = float(step)
        return scenario_from_dict(data)


# ---------------------------------------------------------------------------
# parsing and validation
# ---------------------------------------------------------------------------


def _complex_config(z: complex):
    z = complex(z)
    return float(z.real) if z.imag == 0 else {"re": float(z.real), "im": float(z.imag)}


def _parse_complex(value, where: str, problems: list[str]) -> complex | None:
    if isinstance(value, bool):
        problems.append(f"{where}: expected a number, got a boolean")
        return None
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        try:
            return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
        except (TypeError, ValueError):
            problems.append(f"{where}: re/im must be decimal numbers")
            return None
    if isinstance(value, str):
        try:
            return complex(compile_expression(value)(np.zeros(1))[0])
        except ExpressionError as exc:
            problems.append(f"{where}: {exc}")
            return None
    problems.append(f"{where}: cannot interpret {value!r} as a complex number")
    return None


def _parse_track(value, where: str, problems: list[str]):
    if isinstance(value, bool) or value is None:
        problems.append(f"{where}: missing or invalid coefficient")
        return None
    if isinstance(value, (int, float)):
        return str(value)
    if isinstance(value, str):
        try:
            compile_expression(value)
        except ExpressionError as exc:
            problems.append(f"{where}: {exc}")
            return None
        return value
    if isinstance(value, dict):
        return value
    problems.append(f"{where}: cannot interpret {value!r} as a coefficient track")
    return None


def _check_keys(section: dict, allowed: set, where: str, problems: list[str]) -> None:
    for key in sorted(set(section) - allowed):
        problems.append(f"{where}.{key}: unknown field")


def scenario_from_dict(data, source: str = "<scenario>") -> Scenario:
    """Validate plain data and build a :class:`Scenario`, collecting every problem."""
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: top level must be a mapping")
    _check_keys(data, {"name", "model", "fock", "grid", "chain_depth", "map_requests", "evolution",
                       "expect_gauge", "checks", "tolerances"}, "scenario", problems)
    name = data.get("name", Path(source).stem if source != "<scenario>" else "scenario")
    if not isinstance(name, str) or not name.strip():
        problems.append("name: must be a non-empty string")
        name = "scenario"

    # model
    model_data = data.get("model")
    model_type, model_config, model = None, {}, None
    if not isinstance(model_data, dict):
        problems.append("model: required mapping with type, omega, alpha, beta")
    else:
        model_type = model_data.get("type")
        if model_type not in ("linear", "swanson"):
            problems.append("model.type: must be 'linear' or 'swanson'")
        _check_keys(model_data, {"type", "omega", "alpha", "beta"}, "model", problems)
        tracks = {}
        for key in ("omega", "alpha", "beta"):
            raw = model_data.get(key, "0" if key != "omega" else None)
            tracks[key] = _parse_track(raw, f"model.{key}", problems)
        model_config = {k: v for k, v in tracks.items()}
        if model_type in ("linear", "swanson") and all(v is not None for v in tracks.values()):
            try:
                cls = LinearModel if model_type == "linear" else SwansonModel
                model = cls(**tracks)
            except ValueError as exc:
                problems.append(f"model: {exc}")

    # fock space
    fock_data = data.get("fock", {}) or {}
    fock = None
    if not isinstance(fock_data, dict):
        problems.append("fock: must be a mapping")
    else:
        _check_keys(fock_data, {"dim", "tail_guard", "pad", "tol_tail"}, "fock", problems)
        try:
            fock = FockConfig(
                dim=int(fock_data.get("dim", DEFAULT_DIM)),
                tail_guard=int(fock_data.get("tail_guard", DEFAULT_TAIL_GUARD)),
                pad=int(fock_data.get("pad", 0)),
                tol_tail=float(fock_data.get("tol_tail", 1e-12)),
            )
        except (TypeError, ValueError) as exc:
            problems.append(f"fock: {exc}")

    # grid
    grid_data = data.get("grid", {}) or {}
    grid = None
    if not isinstance(grid_data, dict):
        problems.append("grid: must be a mapping")
    else:
        _check_keys(grid_data, {"t0", "t1", "step"}, "grid", problems)
        try:
            t0 = float(grid_data.get("t0", 0.0))
            t1 = float(grid_data.get("t1", 1.0))
            step = float(grid_data.get("step", DEFAULT_STEP))
        except (TypeError, ValueError):
            problems.append("grid: t0, t1 and step must be decimal numbers")
        else:
            ok = True
            if not step > 0:
                problems.append("grid.step: must be > 0")
                ok = False
            if not t1 > t0:
                problems.append("grid.t1: must be greater than grid.t0")
                ok = False
            if ok:
                n = (t1 - t0) / step
                if abs(n - round(n)) > 1e-9 * max(1.0, n):
                    problems.append("grid.step: must divide t1 - t0 into a whole number of steps")
                elif round(n) < 4:
                    problems.append("grid.step: need at least four steps")
                else:
                    grid = (t0, t1, step)

    # chain depth
    depth = data.get("chain_depth", [0, 0])
    chain_depth = (0, 0)
    if not (isinstance(depth, (list, tuple)) and len(depth) == 2 and all(isinstance(k, int) for k in depth)):
        problems.append("chain_depth: must be a pair of integers [k_min, k_max]")
    elif not depth[0] <= 0 <= depth[1]:
        problems.append("chain_depth: must span level 0")
    else:
        chain_depth = (depth[0], depth[1])

    # map requests
    requests: list[MapRequest] = []
    raw_requests = data.get("map_requests", []) or []
    if not isinstance(raw_requests, list):
        problems.append("map_requests: must be a list")
        raw_requests = []
    for i, entry in enumerate(raw_requests):
        where = f"map_requests[{i}]"
        if not isinstance(entry, dict):
            problems.append(f"{where}: must be a mapping")
            continue
        req = _parse_request(entry, where, model_type, problems)
        if req is not None:
            requests.append(req)
    links = [r.link for r in requests]
    for k in sorted({k for k in links if links.count(k) > 1}):
        problems.append(f"map_requests: link {k} requested more than once")
    by_link = {r.link: r for r in requests}
    k_min, k_max = chain_depth
    for r in requests:
        if not k_min <= r.link <= k_max:
            problems.append(f"map_requests: link {r.link} outside chain_depth {list(chain_depth)}")
    for k in range(k_min, k_max):
        if k not in by_link:
            problems.append(f"map_requests: missing map for link {k} -> {k + 1}")
    for k, r in by_link.items():
        if r.kind == "gamma_ode" and k > 0 and by_link.get(k - 1, MapRequest(0, "")).kind != "gamma_ode":
            problems.append(f"map_requests: gamma_ode at link {k} needs a gamma_ode map at link {k - 1}")

    # evolution
    evolution = None
    evo = data.get("evolution")
    if evo is not None:
        if not isinstance(evo, dict):
            problems.append("evolution: must be a mapping")
        else:
            _check_keys(evo, {"phi0", "theta0", "stepper", "observables"}, "evolution", problems)
            phi0 = _parse_complex(evo.get("phi0", 0.0), "evolution.phi0", problems)
            theta0 = _parse_complex(evo.get("theta0", 0.0), "evolution.theta0", problems)
            stepper = evo.get("stepper", "midpoint")
            if stepper not in STEPPERS:
                problems.append(f"evolution.stepper: must be one of {', '.join(STEPPERS)}")
            obs = evo.get("observables", ["x1", "x2"])
            if not (isinstance(obs, list) and set(obs) <= {"x1", "x2"}):
                problems.append("evolution.observables: must be a list drawn from x1, x2")
                obs = ["x1", "x2"]
            if 0 not in by_link:
                problems.append("evolution: needs a map for link 0 -> 1")
            if phi0 is not None and theta0 is not None and fock is not None:
                budget = np.sqrt(fock.dim - fock.tail_guard) / 2
                if abs(phi0) + abs(theta0) > budget:
                    problems.append(f"evolution.phi0: |phi0| + |theta0| exceeds the truncation budget {budget:.3g}")
                evolution = EvolutionRequest(phi0, theta0, stepper, tuple(obs))

    # expectations, checks, tolerances
    expect = {}
    for key, kind in (data.get("expect_gauge") or {}).items():
        try:
            k = int(key)
        except (TypeError, ValueError):
            problems.append(f"expect_gauge.{key}: keys must be integer link indices")
            continue
        if kind not in ("global", "local"):
            problems.append(f"expect_gauge.{key}: must be 'global' or 'local'")
        elif not k_min <= k < k_max:
            problems.append(f"expect_gauge.{key}: no gauge link {k} -> {k + 1} inside chain_depth")
        else:
            expect[k] = kind
    checks = data.get("checks")
    if checks is not None and not (isinstance(checks, list) and all(isinstance(c, str) for c in checks)):
        problems.append("checks: must be a list of check names")
        checks = None
    tolerances = data.get("tolerances") or {}
    if not isinstance(tolerances, dict):
        problems.append("tolerances: must be a mapping")
        tolerances = {}
    for key, value in tolerances.items():
        if key not in DEFAULT_TOLERANCES:
            problems.append(f"tolerances.{key}: unknown tolerance")
        elif isinstance(value, bool) or not isinstance(value, (int, float)) or not value > 0:
            problems.append(f"tolerances.{key}: must be a positive number")

    if problems:
        raise ScenarioError(f"invalid scenario {source}", problems)
    return Scenario(
        name=name, model_type=model_type, model_config=model_config, model=model, fock=fock, grid=grid,
        map_requests=tuple(sorted(requests, key=lambda r: r.link)), chain_depth=chain_depth,
        evolution=evolution, expect_gauge=expect, checks=None if checks is None else tuple(checks),
        tolerances=dict(tolerances),
    )


def _parse_request(entry: dict, where: str, model_type: str | None, problems: list[str]) -> MapRequest | None:
    link_ = entry.get("link")
    kind = entry.get("kind")
    if not isinstance(link_, int) or isinstance(link_, bool):
        problems.append(f"{where}.link: must be an integer")
        return None
    if kind not in MAP_KINDS:
        problems.append(f"{where}.kind: must be one of {', '.join(MAP_KINDS)}")
        return None
    params = {k: v for k, v in entry.items() if k not in ("link", "kind")}
    allowed = {"bar_closed_form": set(), "gamma_ode": {"gamma0"}, "swanson_newton": {"seed"},
               "swanson_ode": {"init", "path"}, "schrodinger_like": {"eta0"}}[kind]
    _check_keys(params, allowed, where, problems)
    need_linear = kind in ("bar_closed_form", "gamma_ode")
    need_swanson = kind in ("swanson_newton", "swanson_ode")
    if need_linear and model_type not in (None, "linear"):
        problems.append(f"{where}.kind: {kind} needs a linear model")
    if need_swanson and model_type not in (None, "swanson"):
        problems.append(f"{where}.kind: {kind} needs a swanson model")
    if kind in ("bar_closed_form", "swanson_newton") and link_ != -1:
        problems.append(f"{where}.link: {kind} supplies the bar link -1 only")
    if kind == "gamma_ode" and link_ < 0:
        problems.append(f"{where}.link: gamma_ode maps are built upward (link >= 0)")
    if kind == "swanson_ode" and link_ != 0:
        problems.append(f"{where}.link: swanson_ode supplies link 0 only")
    if kind == "gamma_ode":
        if "gamma0" not in params:
            problems.append(f"{where}.gamma0: required")
        else:
            _parse_complex(params["gamma0"], f"{where}.gamma0", problems)
    if kind == "swanson_newton":
        seed = params.get("seed", {"epsilon": EPSILON_GAUGE, "mu": 0.04})
        if not isinstance(seed, dict) or not {"epsilon", "mu"} <= set(seed):
            problems.append(f"{where}.seed: must be a mapping with epsilon and mu")
        else:
            _parse_complex(seed["mu"], f"{where}.seed.mu", problems)
    if kind == "swanson_ode":
        init = params.get("init", "bar_root")
        if init != "bar_root" and not (isinstance(init, dict) and {"epsilon", "mu"} <= set(init)):
            problems.append(f"{where}.init: must be 'bar_root' or a mapping with epsilon and mu")
        if params.get("path", "auto") not in ("auto", "printed", "three_parameter"):
            problems.append(f"{where}.path: must be auto, printed or three_parameter")
    if kind == "schrodinger_like" and params.get("eta0", "bar") not in ("bar", "identity"):
        problems.append(f"{where}.eta0: must be 'bar' or 'identity'")
    return MapRequest(link_, kind, params)


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file.

    Raises:
        ScenarioError: on a YAML syntax error (with line and column) or when
            validation fails (listing every violated field).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ScenarioError(f"cannot parse {path}{where}: {problem}") from exc
    return scenario_from_dict(data, str(path))


def save_scenario(scenario: Scenario, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(scenario.to_config(), sort_keys=False))
    return path


def shipped_scenarios() -> dict[str, Path]:
    """Name -> path of the scenario files bundled with the package."""
    root = resources.files("gaugechain") / "scenarios"
    return {p.name[:-5]: Path(str(p)) for p in sorted(root.iterdir(), key=lambda p: p.name) if p.name.endswith(".yaml")}


def resolve_scenario(ref: str | Path) -> Path:
    """A file path, or the name of a shipped scenario."""
    path = Path(ref)
    if path.exists():
        return path
    shipped = shipped_scenarios()
    if str(ref) in shipped:
        return shipped[str(ref)]
    raise ScenarioError(f"no scenario file or shipped scenario named {ref!r}")


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


@dataclass
class RunReport:
    """Checks, timings and solver diagnostics of one run."""

    scenario: str
    checks: list[Check] = field(default_factory=list)
    timings_ms: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1

    def to_json(self) -> dict:
        return {"scenario": self.scenario, "checks": [c.as_dict() for c in self.checks],
                "timings_ms": {k: round(v, 3) for k, v in self.timings_ms.items()},
                "diagnostics": _jsonable(self.diagnostics)}

    def summary(self) -> str:
        lines = [f"scenario {self.scenario}: {'PASS' if self.passed else 'FAIL'} ({len(self.checks)} checks)"]
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"  [{status}] {c.name}: {_short(c.measured)} {c.relation} {_short(c.tolerance)}")
        return "\n".join(lines)


def _short(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{x:.3g}"
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    return obj


class _Stopwatch:
    def __init__(self, sink: dict, name: str):
        self.sink, self.name = sink, name

    def __enter__(self):
        self.start = time.perf_counter()

    def __exit__(self, *exc):
        self.sink[self.name] = self.sink.get(self.name, 0.0) + 1e3 * (time.perf_counter() - self.start)


def _bar_root(scenario: Scenario, t: float, request: MapRequest | None = None):
    w, al, be = scenario.model.coefficients(t)
    seed = (EPSILON_GAUGE, 0.04)
    if request is not None and "seed" in request.params:
        s = request.params["seed"]
        seed = (float(s["epsilon"]), _parse_complex(s["mu"], "seed.mu", []))
    return newton_swanson_bar(w, al, be, seed)


def _eta0(scenario: Scenario, source: str) -> np.ndarray:
    cfg = scenario.fock
    if source == "identity":
        return np.eye(cfg.work_dim, dtype=complex)
    t0 = scenario.grid[0]
    if scenario.model_type == "linear":
        return displacement_map(bar_gamma(scenario.model, t0), cfg)[0]
    return su11_map(_bar_root(scenario, t0).params, config=cfg)[0]


def _map_factories(scenario: Scenario, diagnostics: dict) -> dict:
    """Map supplies for :func:`build_chain`; linear models are lifted level by level."""
    times, cfg, model = scenario.times, scenario.fock, scenario.model
    linear_models = {0: model}
    factories = {}

    for k, req in scenario.maps_by_link().items():
        if req.kind == "bar_closed_form":
            factories[k] = lambda node, m=model: build_bar_map_linear(m, times, cfg)
        elif req.kind == "gamma_ode":
            gamma0 = _parse_complex(req.params["gamma0"], "gamma0", [])

            def make(node, k=k, gamma0=gamma0):
                sol = solve_gamma_ode(linear_models[k], gamma0, times, cfg)
                linear_models[k + 1] = lift_linear_model(linear_models[k], sol)
                return sol

            factories[k] = make
        elif req.kind == "swanson_newton":
            def make(node, req=req):
                root = _bar_root(scenario, times[0], req)
                sol = solve_swanson_bar_track(model, times, cfg, seed=(root.params.epsilon, root.params.mu))
                diagnostics["newton_iterations"] = sol.diagnostics["newton_iterations"]
                return sol

            factories[k] = make
        elif req.kind == "swanson_ode":
            def make(node, req=req):
                init = req.params.get("init", "bar_root")
                if init == "bar_root":
                    params = _bar_root(scenario, times[0]).params
                else:
                    params = gauss_decompose(float(init["epsilon"]), _parse_complex(init["mu"], "init.mu", []))
                sol = solve_swanson_invariant(model, params, times, cfg, path=req.params.get("path", "auto"))
                diagnostics["swanson_path"] = sol.diagnostics["path"]
                diagnostics["swanson_attempts"] = sol.diagnostics["attempts"]
                return sol

            factories[k] = make
        else:  # schrodinger_like
            eta0 = _eta0(scenario, req.params.get("eta0", "bar"))
            scale = 1.0 if k >= 0 else 0.5
            factories[k] = lambda node, eta0=eta0, scale=scale: solve_schrodinger_like(
                node.hamiltonian, eta0, times, cfg, scale=scale)
    return factories


def _wanted(scenario: Scenario, name: str) -> bool:
    return scenario.checks is None or name in scenario.checks


def run(scenario: Scenario, out_dir: str | Path | None = "out") -> RunReport:
    """Map solves, chain build, gauge analysis, evolution and cross-checks, in that order.

    Artifacts go to ``out_dir/<scenario>/``: ``map_link<k>.csv`` per Dyson
    map, ``chain.csv``, ``trajectory.csv`` when an evolution is requested,
    ``checks.csv`` and ``report.json``. ``out_dir=None`` skips writing.
    """
    report = RunReport(scenario.name)
    checks: list[Check] = []
    diag = report.diagnostics
    timings = report.timings_ms
    times, cfg = scenario.times, scenario.fock
    k_min, k_max = scenario.chain_depth
    requests = scenario.maps_by_link()

    try:
        with _Stopwatch(timings, "chain"):
            base = base_node(lambda s: build_hamiltonian(scenario.model, s, cfg), times, cfg)
            nodes = [base]
            if requests:
                nodes = build_chain(base, _map_factories(scenario, diag), k_min, k_max)
        by_index = {n.index: n for n in nodes}

        with _Stopwatch(timings, "maps"):
            for k, req in sorted(requests.items()):
                node = by_index[k]
                sol = node.dyson
                if req.kind == "schrodinger_like":
                    checks.append(Check(f"metric_drift[{k}]", metric_drift(sol), scenario.tolerance("metric_drift")))
                else:
                    worst = max(hermiticity_residual(h, cfg) for h in node.hermitian_counterpart)
                    key = f"herm_counterpart:{req.kind}"
                    checks.append(Check(f"herm_counterpart[{k}]", worst, scenario.tolerance(key)))
                if req.kind == "swanson_newton":
                    w, al, be = scenario.model.coefficients(times)
                    res = max(float(np.max(np.abs(eq49_residuals(w[i], al[i], be[i], p.phi, p.chi, p.varphi))))
                              for i, p in enumerate(sol.params))
                    checks.append(Check(f"newton_residual[{k}]", res, scenario.tolerance("newton_residual")))

        with _Stopwatch(timings, "gauge"):
            kinds = {}
            for node in nodes:
                g = node.gauge_to_next
                if g is None:
                    continue
                k = node.index
                label = f"{k}->{k + 1}"
                kinds[label] = g.kind
                diag.setdefault("gauge_remainders", {})[label] = g.residual_offdiag
                expected = scenario.expect_gauge.get(k)
                if expected is None:
                    continue
                checks.append(Check(f"gauge_kind[{label}]", g.kind, expected, "=="))
                if expected == "global":
                    checks.append(Check(f"gauge_remainder[{label}]", g.residual_offdiag,
                                        scenario.tolerance("gauge_remainder")))
                    value = (gauge_ode_residual(g, node.hermitian_counterpart, by_index[k + 1].hermitian_counterpart,
                                                times, cfg) if g.is_global else float("inf"))
                    checks.append(Check(f"gauge_ode[{label}]", value, scenario.tolerance("gauge_ode")))
            diag["gauge_kinds"] = kinds

        collapse = None
        if requests and len(nodes) > 1 and all(r.kind == "schrodinger_like" for r in requests.values()):
            with _Stopwatch(timings, "collapse"):
                collapse = collapse_deviations(nodes, base)
                worst = max(float(v.max()) for v in collapse.values())
                checks.append(Check("collapse_deviation", worst, scenario.tolerance("collapse_deviation")))

        trajectory = None
        if scenario.evolution is not None:
            with _Stopwatch(timings, "evolution"):
                trajectory, evo_checks = _evolve(scenario, by_index, requests)
                checks.extend(evo_checks)
    except GaugeChainError as exc:
        raise type(exc)(f"scenario {scenario.name}: {exc}") from exc

    if scenario.checks is not None:
        produced = {c.name: c for c in checks}
        checks = [produced.get(name, Check(name, "not produced", "produced", "==")) for name in scenario.checks]
    report.checks = checks

    if out_dir is not None:
        with _Stopwatch(timings, "write"):
            _write_artifacts(report, scenario, nodes, collapse, trajectory, Path(out_dir) / scenario.name)
    return report


def _evolve(scenario: Scenario, by_index: dict[int, ChainNode], requests: dict):
    evo = scenario.evolution
    times, cfg = scenario.times, scenario.fock
    tol = scenario.tolerance
    base = by_index[0]
    eta = base.dyson
    h = base.hermitian_counterpart
    flat = propagate_flat(h, coherent_state(evo.phi0, cfg, evo.theta0), times, cfg, stepper=evo.stepper)
    psi0 = eta.eta_inv[0] @ flat.states[0]
    metric = propagate_metric(base.hamiltonian, psi0, eta, times, cfg, h=h, stepper=evo.stepper)
    checks = [
        Check("flat_norm_drift", flat.norm_drift("flat"), tol("flat_norm_drift")),
        Check("metric_norm_drift", metric.norm_drift("metric"), tol("metric_norm_drift")),
        Check("transport", float(metric.residuals["transport"].max()), tol("transport")),
    ]
    columns = {"metric_norm": metric.metric_norm}
    for name in evo.observables:
        k = int(name[1])
        x = quadrature(k, cfg)
        columns[name] = np.einsum("ki,ij,kj->k", flat.states.conj(), x, flat.states).real

    if scenario.model_type == "linear" and requests[0].kind == "gamma_ode":
        model = scenario.model
        coeffs = linear_hermitian_coeffs(model, eta, times)
        omega = model.coefficients(times)[0]
        spec = make_analytic_spec(omega, coeffs.u, coeffs.f, evo.theta0, times, theta_dynamics="corrected")
        printed = make_analytic_spec(omega, coeffs.u, coeffs.f, evo.theta0, times, theta_dynamics="printed")
        analytic = analytic_propagate(spec, evo.phi0, cfg, h=h)
        checks.append(Check("analytic_schrodinger_residual", float(analytic.residuals["schrodinger"].max()),
                            tol("analytic_schrodinger_residual")))
        comp = quadrature_expectations(eta, metric, flat, spec, evo.phi0)
        checks.append(Check("quadrature_routes", comp.max_pairwise(), tol("quadrature_routes")))
        columns["x1_closed_form"] = comp.closed_form[:, 0]
        columns["x2_closed_form"] = comp.closed_form[:, 1]
        columns["x1_printed_theta"] = (np.exp(-1j * printed.chi) * (evo.phi0 - printed.theta0) + printed.theta).real
        columns["x2_printed_theta"] = (np.exp(-1j * printed.chi) * (evo.phi0 - printed.theta0) + printed.theta).imag
        columns["analytic_residual"] = analytic.residuals["schrodinger"]

    low = by_index.get(-1)
    if (low is not None and 1 in by_index and by_index[1].dyson is not None
            and scenario.expect_gauge.get(-1) == "global" and scenario.expect_gauge.get(0) == "global"):
        if low.gauge_to_next.is_global and base.gauge_to_next.is_global:
            gap = cross_space_gap(low, base, by_index[1], [flat.states[0], flat.states[-1]],
                                  range(0, times.size, max(1, times.size // 10)))
        else:
            gap = float("inf")
        checks.append(Check("cross_space", gap, tol("cross_space")))
    trajectory = (flat, columns)
    return trajectory, checks


def cross_space_gap(low: ChainNode, mid: ChainNode, high: ChainNode, flat_states, indices) -> float:
    """Spread of ``<psi|rho X_k psi~>`` across three adjacent spaces joined by global links.

    ``flat_states`` are two vectors of the lowest level's flat space; they
    are pulled back with ``eta_low^-1`` and carried upward with the gauge
    factors.
    """
    cfg = low.config
    m_low, m_mid, m_high = low.dyson, mid.dyson, high.dyson
    worst = 0.0
    for idx in indices:
        psi_low = [m_low.eta_inv[idx] @ p for p in flat_states]
        a = low.gauge_to_next.a_factor[idx]
        psi_mid = [m_mid.eta_inv[idx] @ (a * m_low.eta[idx] @ p) for p in psi_low]
        for k in (1, 2):
            obs = Observable(quadrature(k, cfg), f"x{k}")
            first = cross_space_matrix_elements(obs, (m_low, m_mid), low.gauge_to_next, psi_low, idx)
            second = cross_space_matrix_elements(obs, (m_mid, m_high), mid.gauge_to_next, psi_mid, idx)
            worst = max(worst, first["deviation"], second["deviation"], abs(first["element_k"] - second["element_k1"]))
    return float(worst)


def _write_artifacts(report: RunReport, scenario: Scenario, nodes, collapse, trajectory, folder: Path) -> None:
    folder.mkdir(parents=True, exist_ok=True)
    written = []
    for node in nodes:
        if node.dyson is not None:
            written.append(node.dyson.to_csv(folder / f"map_link{node.index}.csv"))
    if len(nodes) > 1 or nodes[0].dyson is not None:
        written.append(write_chain_csv(folder / "chain.csv", chain_records(nodes, collapse)))
    if trajectory is not None:
        flat, columns = trajectory
        written.append(flat.to_csv(folder / "trajectory.csv", extra=columns))
    checks_path = folder / "checks.csv"
    with checks_path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["name", "measured", "tolerance", "relation", "pass"])
        writer.writeheader()
        for c in report.checks:
            writer.writerow(c.as_dict())
    written.append(checks_path)
    report.artifacts = [str(p) for p in written] + [str(folder / "report.json")]
    (folder / "report.json").write_text(json.dumps(report.to_json(), indent=2))


def run_file(ref: str | Path, out_dir: str | Path | None = "out", dim: int | None = None,
             step: float | None = None) -> RunReport:
    """Load (by path or shipped name), apply overrides and run."""
    scenario = load_scenario(resolve_scenario(ref))
    if dim is not None or step is not None:
        scenario = scenario.with_overrides(dim=dim, step=step)
    return run(scenario, out_dir)


def verify_all(out_dir: str | Path | None = "out", echo=print) -> RunReport:
    """Run every acceptance criterion and print a summary table."""
    report = RunReport("acceptance")
    for result in run_criteria_timed(report.timings_ms):
        echo(result.summary_line())
        for c in result.checks:
            report.checks.append(Check(f"criterion_{result.number}:{c.name}", c.measured, c.tolerance, c.relation))
        if result.notes:
            report.diagnostics[f"criterion_{result.number}"] = result.notes
    echo(f"{sum(c.passed for c in report.checks)}/{len(report.checks)} checks pass")
    if out_dir is not None:
        folder = Path(out_dir) / "acceptance"
        folder.mkdir(parents=True, exist_ok=True)
        (folder / "report.json").write_text(json.dumps(report.to_json(), indent=2))
    return report


def run_criteria_timed(timings: dict):
    """Evaluate the acceptance criteria in order, recording wall time per criterion."""
    for number, fn in sorted(CRITERIA.items()):
        with _Stopwatch(timings, f"criterion_{number}"):
            result = fn()
        yield result
