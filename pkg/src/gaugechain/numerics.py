"""Small numerical helpers shared by the solvers: grids, differencing, RK4."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import GridMismatchError

GRID_RTOL = 1e-9


def uniform_grid(t0: float, t1: float, step: float) -> np.ndarray:
    """Uniform grid from ``t0`` to ``t1`` inclusive.

    ``(t1 - t0) / step`` must be an integer up to rounding.
    """
    if step <= 0:
        raise ValueError("grid step must be positive")
    if t1 <= t0:
        raise ValueError("grid needs t1 > t0")
    n = (t1 - t0) / step
    count = int(round(n))
    if abs(n - count) > 1e-6 * max(1.0, n):
        raise ValueError(f"step {step} does not divide [{t0}, {t1}]")
    return t0 + step * np.arange(count + 1)


def grid_step(times: np.ndarray) -> float:
    """Spacing of a uniform grid; raises if the grid is not uniform."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise GridMismatchError("a grid needs at least two points")
    d = np.diff(times)
    h = float(d.mean())
    if h <= 0 or np.max(np.abs(d - h)) > GRID_RTOL * max(1.0, abs(h)) * 10:
        raise GridMismatchError("grid is not uniform")
    return h


def check_same_grid(a: np.ndarray, b: np.ndarray) -> None:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or np.max(np.abs(a - b), initial=0.0) > GRID_RTOL * max(1.0, np.max(np.abs(a))):
        raise GridMismatchError(f"grids differ (sizes {a.size} and {b.size})")


def time_derivative(values: np.ndarray, step: float) -> np.ndarray:
    """Fourth-order derivative along axis 0 of samples on a uniform grid.

    Interior points use centered differences at spacings ``h`` and ``2h``
    combined by one Richardson step, ``(4 D_h - D_2h) / 3``. The two points at
    each end use one-sided five-point stencils of the same order.
    """
    f = np.asarray(values)
    n = f.shape[0]
    if n < 5:
        raise GridMismatchError("differencing needs at least five grid points")
    out = np.empty_like(f, dtype=np.result_type(f.dtype, float))
    h = float(step)
    d_h = (f[3:-1] - f[1:-3]) / (2 * h)
    d_2h = (f[4:] - f[:-4]) / (4 * h)
    out[2:-2] = (4 * d_h - d_2h) / 3
    out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return out


def interpolate_samples(times: np.ndarray, values: np.ndarray, t: float) -> np.ndarray:
    """Local cubic Lagrange interpolation of samples (axis 0) at time ``t``.

    Grid hits return the stored sample. Off-grid points use the four nearest
    knots, so the error is fourth order in the spacing, matching RK4.
    """
    times = np.asarray(times, dtype=float)
    n = times.size
    h = (times[-1] - times[0]) / (n - 1)
    x = (t - times[0]) / h
    k = int(round(x))
    if abs(x - k) < 1e-9 and 0 <= k < n:
        return values[k]
    if x < -1e-9 or x > n - 1 + 1e-9:
        raise GridMismatchError(f"t={t} lies outside the sampled range")
    i0 = min(max(int(np.floor(x)) - 1, 0), n - 4)
    nodes = np.arange(i0, i0 + 4, dtype=float)
    out = 0.0
    for j in range(4):
        w = 1.0
        for m in range(4):
            if m != j:
                w *= (x - nodes[m]) / (nodes[j] - nodes[m])
        out = out + w * values[i0 + j]
    return out


def rk4(rhs: Callable[[float, np.ndarray], np.ndarray], y0, times: np.ndarray) -> np.ndarray:
    """Classical fixed-step Runge-Kutta on the given grid; returns all samples."""
    times = np.asarray(times, dtype=float)
    y = np.asarray(y0)
    out = np.empty((times.size,) + y.shape, dtype=np.result_type(y.dtype, float))
    out[0] = y
    for k in range(times.size - 1):
        t = times[k]
        h = times[k + 1] - t
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = y
    return out
