"""Container for a time-indexed Dyson map and its exports."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from ..fock_core import FockConfig, guarded
from ..numerics import grid_step, time_derivative

BLOB_MAGIC = b"DYSONMAP"
BLOB_HEADER = struct.Struct("<8sII")  # magic, dim, count: 16 bytes


@dataclass(frozen=True, eq=False)
class DysonMapSolution:
    """A Dyson map sampled on a uniform grid.

    Attributes:
        times: Uniform time grid.
        eta: Map matrices, shape ``(T, n, n)``.
        eta_dot: Time derivatives of ``eta``, same shape.
        eta_inv: Inverses of ``eta``. Parameter-built maps provide exact
            inverses (``exp(-X)``); otherwise they are computed by solving.
        config: Fock configuration the matrices live on.
        params: Per-time parameter records (complex ``gamma``, ``Su11Params``)
            or ``None`` for matrix-propagated maps.
        provenance: Name of the solver that built the map.
        diagnostics: Solver-specific scalars and flags.
    """

    times: np.ndarray
    eta: np.ndarray
    eta_dot: np.ndarray
    config: FockConfig
    eta_inv: np.ndarray | None = None
    params: Any = None
    provenance: str = ""
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", times)
        if self.eta.shape[0] != times.size or self.eta.shape != self.eta_dot.shape:
            raise ValueError("eta, eta_dot and times must share the leading dimension")
        if self.eta_inv is None:
            object.__setattr__(self, "eta_inv", np.linalg.inv(self.eta))

    @classmethod
    def from_samples(cls, times, eta, config: FockConfig, **kwargs) -> "DysonMapSolution":
        """Build a solution, differencing ``eta`` on the grid for ``eta_dot``."""
        eta = np.asarray(eta, dtype=complex)
        eta_dot = time_derivative(eta, grid_step(times))
        return cls(times=times, eta=eta, eta_dot=eta_dot, config=config, **kwargs)

    @property
    def step(self) -> float:
        return grid_step(self.times)

    @property
    def rho(self) -> np.ndarray:
        """Metric ``eta^dag eta`` at every grid time (computed on access)."""
        return np.einsum("kji,kjl->kil", self.eta.conj(), self.eta)

    @property
    def rho_dot(self) -> np.ndarray:
        ed = np.einsum("kji,kjl->kil", self.eta_dot.conj(), self.eta)
        return ed + ed.conj().transpose(0, 2, 1)

    def left_generator(self) -> np.ndarray:
        """``eta^-1 d(eta)/dt`` at every grid time (the Eq.-9 shift divided by i)."""
        return self.eta_inv @ self.eta_dot

    def right_generator(self) -> np.ndarray:
        """``d(eta)/dt eta^-1`` at every grid time."""
        return self.eta_dot @ self.eta_inv

    def conjugate(self, M: np.ndarray) -> np.ndarray:
        """``eta M eta^-1`` for a stack of matrices on the grid."""
        return self.eta @ M @ self.eta_inv

    def hermitian_counterpart(self, H: np.ndarray) -> np.ndarray:
        """``eta H eta^-1 + i eta_dot eta^-1`` for a stack ``H`` on the grid."""
        return self.conjugate(H) + 1j * self.right_generator()

    def condition_numbers(self) -> np.ndarray:
        return np.array([np.linalg.cond(guarded(e, self.config)) for e in self.eta])

    def min_metric_eigenvalues(self) -> np.ndarray:
        return np.array([np.linalg.eigvalsh(guarded(r, self.config)).min() for r in self.rho])

    def hermiticity_of_eta(self) -> float:
        """Largest ``||eta - eta^dag|| / ||eta||`` over the grid (verified block)."""
        g = guarded(self.eta, self.config)
        num = np.linalg.norm(g - g.conj().transpose(0, 2, 1), axis=(1, 2))
        return float(np.max(num / np.linalg.norm(g, axis=(1, 2))))

    def records(self, residuals: dict[str, np.ndarray] | None = None) -> list[dict]:
        """Per-time export rows: ``t``, params, ``||eta||``, ``cond(eta)`` and residuals."""
        residuals = residuals or {}
        norms = np.linalg.norm(guarded(self.eta, self.config), axis=(1, 2))
        conds = self.condition_numbers()
        rows = []
        for k, t in enumerate(self.times):
            row = {"t": float(t)}
            row.update(_param_fields(self.params[k] if self.params is not None else None))
            row["eta_norm"] = float(norms[k])
            row["eta_cond"] = float(conds[k])
            for name, values in residuals.items():
                row[name] = float(values[k])
            rows.append(row)
        return rows

    def to_csv(self, path: str | Path, residuals: dict[str, np.ndarray] | None = None) -> Path:
        rows = self.records(residuals)
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        return path

    def to_blob(self, path: str | Path) -> Path:
        """Write every ``eta`` as row-major complex128 after a 16-byte header."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        count, dim, _ = self.eta.shape
        with path.open("wb") as fh:
            fh.write(BLOB_HEADER.pack(BLOB_MAGIC, dim, count))
            fh.write(np.ascontiguousarray(self.eta, dtype="<c16").tobytes())
        return path


def read_blob(path: str | Path) -> np.ndarray:
    """Inverse of :meth:`DysonMapSolution.to_blob`."""
    data = Path(path).read_bytes()
    magic, dim, count = BLOB_HEADER.unpack_from(data)
    if magic != BLOB_MAGIC:
        raise ValueError(f"{path}: not a Dyson-map blob")
    body = np.frombuffer(data, dtype="<c16", offset=BLOB_HEADER.size)
    if body.size != dim * dim * count:
        raise ValueError(f"{path}: truncated blob")
    return body.reshape(count, dim, dim).copy()


def _param_fields(p) -> dict:
    if p is None:
        return {}
    if isinstance(p, (complex, float, np.complexfloating, np.floating)):
        return {"gamma_re": float(np.real(p)), "gamma_im": float(np.imag(p))}
    if hasattr(p, "epsilon"):
        return {
            "epsilon": float(p.epsilon),
            "mu_re": float(np.real(p.mu)),
            "mu_im": float(np.imag(p.mu)),
            "Phi": float(p.phi),
            "chi": float(p.chi),
            "varphi": float(p.varphi),
        }
    return {}


def stack_over_grid(fn: Callable[[float], np.ndarray], times: np.ndarray) -> np.ndarray:
    """Evaluate a matrix-valued function at every grid time."""
    return np.stack([np.asarray(fn(float(t)), dtype=complex) for t in times])
