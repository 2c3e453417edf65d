"""Matrix-propagated Dyson maps solving ``i d(eta)/dt = eta G(t)``.

With ``G = H`` the map sends ``H`` to ``H' = H + i eta^-1 d(eta)/dt = 2H``
and, when ``rho_0 = eta_0^dag eta_0`` intertwines ``H`` (``H^dag rho = rho H``),
keeps the metric constant in time.
"""

from __future__ import annotations

from typing import Callable, Union

import numpy as np

from ..errors import MatrixOverflowError
from ..fock_core import FockConfig, guarded
from ..numerics import interpolate_samples
from .solution import DysonMapSolution

ETA_NORM_CAP = 1e12

TimeIndexed = Union[Callable[[float], np.ndarray], np.ndarray]


def as_time_function(H: TimeIndexed, times: np.ndarray) -> Callable[[float], np.ndarray]:
    """Turn a callable or a ``(T, n, n)`` stack on ``times`` into ``t -> matrix``.

    Stacks are interpolated off-grid with local cubic Lagrange polynomials.
    """
    if callable(H):
        return H
    stack = np.asarray(H)
    if stack.ndim != 3 or stack.shape[0] != len(times):
        raise ValueError("time-indexed operator must have shape (len(grid), n, n)")
    return lambda t: interpolate_samples(times, stack, t)


def solve_schrodinger_like(
    H: TimeIndexed,
    eta0: np.ndarray,
    grid,
    config: FockConfig,
    *,
    scale: float = 1.0,
    cap: float = ETA_NORM_CAP,
) -> DysonMapSolution:
    """RK4 for ``i d(eta)/dt = eta (scale * H(t))`` from ``eta0``.

    ``eta_dot`` is obtained by differencing the propagated samples, so the
    downstream identity ``H' = 2H`` tests both the integrator and the
    differencing instead of being true by construction. ``scale = 1/2`` gives
    the self-consistent lowering map (``i d(eta)/dt = eta H_bar`` with
    ``H_bar = H/2``).

    Raises:
        MatrixOverflowError: if ``||eta||`` exceeds ``cap``.
    """
    times = np.asarray(grid, dtype=float)
    Hf = as_time_function(H, times)
    eta = np.asarray(eta0, dtype=complex).copy()
    out = np.empty((times.size,) + eta.shape, dtype=complex)
    out[0] = eta

    def rhs(t, e):
        return -1j * scale * (e @ Hf(t))

    for k in range(times.size - 1):
        t, h = times[k], times[k + 1] - times[k]
        k1 = rhs(t, eta)
        k2 = rhs(t + h / 2, eta + h / 2 * k1)
        k3 = rhs(t + h / 2, eta + h / 2 * k2)
        k4 = rhs(t + h, eta + h * k3)
        eta = eta + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        norm = np.linalg.norm(eta)
        if not np.isfinite(norm) or norm > cap:
            raise MatrixOverflowError(f"||eta|| = {norm:.3g} exceeds {cap:.3g} at t={times[k + 1]:.4g}")
        out[k + 1] = eta
    return DysonMapSolution.from_samples(
        times, out, config, provenance="schrodinger_like", diagnostics={"scale": scale}
    )


def quasi_hermiticity_residual(
    H: np.ndarray, rho: np.ndarray, rho_dot: np.ndarray, config: FockConfig | None = None
) -> float:
    """``||H^dag rho - rho H - i rho_dot||_F / ||rho||_F`` on the verified block."""
    H, rho, rho_dot = (np.asarray(x, dtype=complex) for x in (H, rho, rho_dot))
    R = H.conj().T @ rho - rho @ H - 1j * rho_dot
    if config is not None:
        R, rho = guarded(R, config), guarded(rho, config)
    return float(np.linalg.norm(R) / np.linalg.norm(rho))


def metric_drift(solution: DysonMapSolution) -> float:
    """``max_t ||rho_t - rho_0|| / ||rho_0||`` on the verified block."""
    rho = guarded(solution.rho, solution.config)
    return float(np.max(np.linalg.norm(rho - rho[0], axis=(1, 2))) / np.linalg.norm(rho[0]))
