"""The gauge-linked Hamiltonian chain and gauge analysis between its levels.

Level ``k`` holds a Hamiltonian ``H_k``. The Dyson map ``eta_k`` of link
``k -> k+1`` generates the next level,

    H_{k+1} = H_k + i eta_k^-1 d(eta_k)/dt,

and is stored on node ``k`` together with the Hermitian counterpart
``h_k = eta_k H_{k+1} eta_k^-1``. With this pairing node -1 holds
``(eta_bar, eta_bar H eta_bar^-1)`` and node 0 holds ``(eta, eta H' eta^-1)``.
Descending levels use the same recursion solved for the lower end.

Every recursion takes a ``sign`` argument (default +1) multiplying the
``i eta^-1 d(eta)/dt`` term; flipping it is the deliberate fault used to
show that the chain checks are not vacuous.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping, Union

import numpy as np
from scipy.integrate import cumulative_simpson

from .dyson_maps.schrodinger import solve_schrodinger_like
from .dyson_maps.solution import DysonMapSolution, stack_over_grid
from .errors import GaugeChainError
from .fock_core import FockConfig, guarded
from .models import hermiticity_residual
from .numerics import check_same_grid, grid_step, time_derivative

GLOBAL_TOL = 1e-8

MapSupply = Union[DysonMapSolution, Callable[["ChainNode"], DysonMapSolution]]


@dataclass(frozen=True, eq=False)
class GaugeLink:
    """Gauge relation between the counterparts of two adjacent levels.

    For a global link ``A_t = exp(-i phase_t)`` times the identity, with
    ``phase_t`` the integral of ``C`` from ``t0`` and ``A_{t0} = I``.
    ``a_factor`` stores the scalar ``exp(-i phase)``; local links leave it
    ``None``.
    """

    kind: str
    times: np.ndarray
    c_track: np.ndarray
    phase: np.ndarray
    a_factor: np.ndarray | None
    residual_offdiag: float
    remainder: np.ndarray

    @property
    def is_global(self) -> bool:
        return self.kind == "global"

    def A(self, n: int) -> np.ndarray:
        """The gauge operator as a ``(T, n, n)`` stack (global links only)."""
        if self.a_factor is None:
            raise GaugeChainError("local gauge link has no closed-form operator")
        return self.a_factor[:, None, None] * np.eye(n)[None]

    def with_phase(self, phase: np.ndarray) -> "GaugeLink":
        """Copy with a replaced phase (used for sensitivity checks)."""
        phase = np.asarray(phase, dtype=complex)
        return replace(self, phase=phase, a_factor=np.exp(-1j * phase))


@dataclass(frozen=True, eq=False)
class ChainNode:
    """One level of the chain; ``hamiltonian`` and ``hermitian_counterpart`` are ``(T, n, n)`` stacks."""

    index: int
    times: np.ndarray
    hamiltonian: np.ndarray
    config: FockConfig
    dyson: DysonMapSolution | None = None
    hermitian_counterpart: np.ndarray | None = None
    gauge_to_next: GaugeLink | None = None

    def herm_residuals(self) -> np.ndarray | None:
        if self.hermitian_counterpart is None:
            return None
        return np.array([hermiticity_residual(h, self.config) for h in self.hermitian_counterpart])


def base_node(hamiltonian, grid, config: FockConfig) -> ChainNode:
    """Level-0 node from a callable ``t -> H(t)`` or a ready ``(T, n, n)`` stack."""
    times = np.asarray(grid, dtype=float)
    H = stack_over_grid(hamiltonian, times) if callable(hamiltonian) else np.asarray(hamiltonian, dtype=complex)
    if H.shape[0] != times.size:
        raise ValueError("hamiltonian stack does not match the grid")
    return ChainNode(index=0, times=times, hamiltonian=H, config=config)


def _shift(map_: DysonMapSolution, sign: float) -> np.ndarray:
    return sign * 1j * map_.left_generator()


def link(node: ChainNode, map_: DysonMapSolution, *, sign: float = 1.0, counterpart: bool = True) -> ChainNode:
    """Attach ``map_`` as the link ``k -> k+1`` and compute ``h_k = eta H_{k+1} eta^-1``."""
    check_same_grid(node.times, map_.times)
    h = None
    if counterpart:
        h = map_.conjugate(node.hamiltonian + _shift(map_, sign))
    return replace(node, dyson=map_, hermitian_counterpart=h)


def lift(node: ChainNode, map_: DysonMapSolution, *, sign: float = 1.0) -> ChainNode:
    """Level ``k+1``: ``H_{k+1} = H_k + i eta^-1 d(eta)/dt``."""
    check_same_grid(node.times, map_.times)
    return ChainNode(
        index=node.index + 1,
        times=node.times,
        hamiltonian=node.hamiltonian + _shift(map_, sign),
        config=node.config,
    )


def lower(node: ChainNode, map_: DysonMapSolution, *, sign: float = 1.0, counterpart: bool = True) -> ChainNode:
    """Level ``k-1``: ``H_{k-1} = H_k - i eta^-1 d(eta)/dt``, with ``map_`` and ``map_ H_k map_^-1`` attached."""
    check_same_grid(node.times, map_.times)
    h = map_.conjugate(node.hamiltonian) if counterpart else None
    return ChainNode(
        index=node.index - 1,
        times=node.times,
        hamiltonian=node.hamiltonian - _shift(map_, sign),
        config=node.config,
        dyson=map_,
        hermitian_counterpart=h,
    )


def _resolve(supply: MapSupply, node: ChainNode) -> DysonMapSolution:
    return supply(node) if callable(supply) else supply


def build_chain(
    base: ChainNode,
    maps: Mapping[int, MapSupply],
    k_min: int,
    k_max: int,
    *,
    sign: float = 1.0,
    counterparts: bool = True,
    gauges: bool = True,
) -> list[ChainNode]:
    """Nodes ``k_min..k_max`` built outward from ``base``.

    ``maps[k]`` is the map of link ``k -> k+1`` (so ``maps[-1]`` is the bar
    map). Each entry is a solution or a factory called with the node whose
    Hamiltonian is already known: node ``k`` going up, node ``k+1`` going
    down. A map for link ``k_max`` is optional and only supplies the
    counterpart of the top node.

    Adjacent counterparts are compared by :func:`analyze_gauge` and the
    result stored as ``gauge_to_next``.
    """
    if not k_min <= 0 <= k_max:
        raise ValueError("chain range must contain level 0")
    nodes = {0: base}
    for k in range(0, k_max + 1):
        if k not in maps:
            if k < k_max:
                raise GaugeChainError(f"missing Dyson map for link {k} -> {k + 1}")
            continue
        m = _resolve(maps[k], nodes[k])
        nodes[k] = link(nodes[k], m, sign=sign, counterpart=counterparts)
        if k < k_max:
            nodes[k + 1] = lift(nodes[k], m, sign=sign)
    for k in range(-1, k_min - 1, -1):
        if k not in maps:
            raise GaugeChainError(f"missing Dyson map for link {k} -> {k + 1}")
        m = _resolve(maps[k], nodes[k + 1])
        nodes[k] = lower(nodes[k + 1], m, sign=sign, counterpart=counterparts)
    ordered = [nodes[k] for k in range(k_min, k_max + 1)]
    if gauges and counterparts:
        for i in range(len(ordered) - 1):
            lo, hi = ordered[i], ordered[i + 1]
            if lo.hermitian_counterpart is not None and hi.hermitian_counterpart is not None:
                g = analyze_gauge(lo.hermitian_counterpart, hi.hermitian_counterpart, lo.times, lo.config)
                ordered[i] = replace(lo, gauge_to_next=g)
    return ordered


def analyze_gauge(h_lower: np.ndarray, h_upper: np.ndarray, grid, config: FockConfig) -> GaugeLink:
    """Split ``h_upper - h_lower`` into an identity part and a remainder.

    ``C = tr(Delta)/g`` on the verified block of size ``g``. The link is
    global when the Frobenius norm of the remainder stays below 1e-8 at every
    grid time; the phase is then the cumulative Simpson integral of ``C``.
    """
    times = np.asarray(grid, dtype=float)
    D = guarded(np.asarray(h_upper) - np.asarray(h_lower), config)
    g = D.shape[-1]
    C = np.trace(D, axis1=1, axis2=2) / g
    remainder = np.linalg.norm(D - C[:, None, None] * np.eye(g)[None], axis=(1, 2))
    worst = float(remainder.max())
    kind = "global" if worst < GLOBAL_TOL else "local"
    phase = _cumulative_integral(C, times)
    a_factor = np.exp(-1j * phase) if kind == "global" else None
    return GaugeLink(kind=kind, times=times, c_track=C, phase=phase, a_factor=a_factor,
                     residual_offdiag=worst, remainder=remainder)


def _cumulative_integral(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    if times.size < 3:
        return np.concatenate([[0], np.cumsum((values[1:] + values[:-1]) / 2 * np.diff(times))])
    re = cumulative_simpson(values.real, x=times, initial=0.0)
    im = cumulative_simpson(values.imag, x=times, initial=0.0)
    return re + 1j * im


def gauge_ode_residual(link_: GaugeLink, h_lower: np.ndarray, h_upper: np.ndarray, grid, config: FockConfig) -> float:
    """``max_t ||i dA/dt - (h_upper A - A h_lower)|| / max_t ||h_upper - h_lower||``.

    ``dA/dt`` is differenced on the grid. The denominator is the size of
    the difference being gauged away; normalising by ``||h_upper||`` would
    hide a wrong phase behind the large spectrum of ``h``.

    Raises:
        GaugeChainError: for a local link.
    """
    if not link_.is_global:
        raise GaugeChainError("the gauge ODE residual is defined for global links only")
    times = np.asarray(grid, dtype=float)
    a = link_.a_factor
    a_dot = time_derivative(a, grid_step(times))
    D = guarded(np.asarray(h_upper) - np.asarray(h_lower), config)
    g = D.shape[-1]
    R = 1j * a_dot[:, None, None] * np.eye(g)[None] - a[:, None, None] * D
    scale = float(np.max(np.linalg.norm(D, axis=(1, 2))))
    num = float(np.max(np.linalg.norm(R, axis=(1, 2))))
    if num == 0.0:
        return 0.0
    return num / scale


def compose_phases(first: GaugeLink, second: GaugeLink) -> np.ndarray:
    """Phase of the composed link ``k -> k+2`` (sum of the two phases)."""
    return first.phase + second.phase


@dataclass(frozen=True)
class CollapseReport:
    """Deviation of Schrodinger-like chain levels from ``2^k H``."""

    levels: tuple[int, ...]
    deviations: dict[int, np.ndarray]
    max_deviation: float
    step: float

    def worst_level(self) -> int:
        return max(self.deviations, key=lambda k: self.deviations[k].max())


def schrodinger_chain(base: ChainNode, eta0: np.ndarray, k_min: int = -2, k_max: int = 2, *, sign: float = 1.0,
                      counterparts: bool = False) -> list[ChainNode]:
    """Chain whose every link is a Schrodinger-like map started from ``eta0``.

    Upward links solve ``i d(eta)/dt = eta H_k``; downward links solve
    ``i d(eta)/dt = eta H_{k+1}/2``, the self-consistent choice for which
    the lower level equals ``H_{k+1}/2``.
    """
    times = base.times
    cfg = base.config
    maps: dict[int, MapSupply] = {}
    for k in range(0, k_max):
        maps[k] = lambda node: solve_schrodinger_like(node.hamiltonian, eta0, times, cfg)
    for k in range(-1, k_min - 1, -1):
        maps[k] = lambda node: solve_schrodinger_like(node.hamiltonian, eta0, times, cfg, scale=0.5)
    return build_chain(base, maps, k_min, k_max, sign=sign, counterparts=counterparts, gauges=counterparts)


def collapse_deviations(nodes: list[ChainNode], base: ChainNode) -> dict[int, np.ndarray]:
    """``||H_k - 2^k H|| / ||H||`` per level and time on the verified block."""
    H = guarded(base.hamiltonian, base.config)
    norm = np.linalg.norm(H, axis=(1, 2))
    out = {}
    for node in nodes:
        if node.index == 0:
            continue
        Hk = guarded(node.hamiltonian, node.config)
        out[node.index] = np.linalg.norm(Hk - 2.0**node.index * H, axis=(1, 2)) / norm
    return out


def collapse_check(base: ChainNode, grid, eta0: np.ndarray, *, k_min: int = -2, k_max: int = 2,
                   sign: float = 1.0) -> CollapseReport:
    """Build a Schrodinger-like chain and report ``max_{k,t} ||H_k - 2^k H|| / ||H||``."""
    check_same_grid(base.times, grid)
    nodes = schrodinger_chain(base, eta0, k_min, k_max, sign=sign)
    dev = collapse_deviations(nodes, base)
    worst = max((float(v.max()) for v in dev.values()), default=0.0)
    return CollapseReport(levels=tuple(sorted(dev)), deviations=dev, max_deviation=worst,
                          step=grid_step(base.times))


CHAIN_COLUMNS = ["k", "t", "herm_residual", "gauge_kind", "C_re", "C_im", "phase_re", "phase_im",
                 "collapse_deviation"]


def chain_records(nodes: list[ChainNode], collapse: dict[int, np.ndarray] | None = None) -> list[dict]:
    """Rows of the chain report, one per level and grid time."""
    rows = []
    for node in nodes:
        herm = node.herm_residuals()
        g = node.gauge_to_next
        for i, t in enumerate(node.times):
            dev = None
            if collapse is not None:
                dev = 0.0 if node.index == 0 else collapse.get(node.index, [None] * len(node.times))[i]
            rows.append({
                "k": node.index,
                "t": float(t),
                "herm_residual": "" if herm is None else float(herm[i]),
                "gauge_kind": "" if g is None else g.kind,
                "C_re": "" if g is None else float(g.c_track[i].real),
                "C_im": "" if g is None else float(g.c_track[i].imag),
                "phase_re": "" if g is None else float(g.phase[i].real),
                "phase_im": "" if g is None else float(g.phase[i].imag),
                "collapse_deviation": "" if dev is None else float(dev),
            })
    return rows


def write_chain_csv(path: str | Path, rows: list[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CHAIN_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return path
