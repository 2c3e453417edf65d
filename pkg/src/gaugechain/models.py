"""Time-dependent coefficient tracks and the two model Hamiltonians.

Times and frequencies are dimensionless and hbar = 1 throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.interpolate import CubicSpline

from .expressions import compile_expression
from .fock_core import FockConfig, build_ladder, guarded

PT_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class CoefficientTrack:
    """A complex function of time.

    ``closed_form`` tracks carry an expression string (see
    :mod:`gaugechain.expressions`); ``sampled`` tracks carry knots and values
    and interpolate real and imaginary parts with independent cubic splines.
    Evaluation at a knot returns the stored sample bit for bit.
    """

    kind: str
    expression: str | None = None
    knots: np.ndarray | None = None
    values: np.ndarray | None = None
    _splines: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind == "closed_form":
            if self.expression is None:
                raise ValueError("closed_form track needs an expression")
            compile_expression(self.expression)
        elif self.kind == "sampled":
            knots = np.asarray(self.knots, dtype=float)
            values = np.asarray(self.values, dtype=complex)
            if knots.ndim != 1 or knots.shape != values.shape or knots.size < 4:
                raise ValueError("sampled track needs matching 1-D knots and values (at least 4)")
            if np.any(np.diff(knots) <= 0):
                raise ValueError("sampled track knots must be strictly increasing")
            if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
                raise ValueError("sampled track has non-finite samples")
            object.__setattr__(self, "knots", knots)
            object.__setattr__(self, "values", values)
            splines = (CubicSpline(knots, values.real), CubicSpline(knots, values.imag))
            object.__setattr__(self, "_splines", splines)
        else:
            raise ValueError(f"unknown track kind {self.kind!r}")

    @classmethod
    def constant(cls, value: complex) -> "CoefficientTrack":
        value = complex(value)
        text = repr(value.real) if value.imag == 0 else f"({value.real!r}) + ({value.imag!r})*i"
        return cls("closed_form", expression=text)

    @classmethod
    def from_expression(cls, text: str) -> "CoefficientTrack":
        return cls("closed_form", expression=text)

    @classmethod
    def from_samples(cls, knots, values) -> "CoefficientTrack":
        return cls("sampled", knots=knots, values=values)

    def __call__(self, t):
        """Evaluate at a scalar (returns ``complex``) or an array of times."""
        scalar = np.ndim(t) == 0
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if self.kind == "closed_form":
            out = compile_expression(self.expression)(t_arr)
        else:
            re_spline, im_spline = self._splines
            out = re_spline(t_arr) + 1j * im_spline(t_arr)
            # exact knot hits return stored samples
            idx = np.clip(np.searchsorted(self.knots, t_arr), 0, self.knots.size - 1)
            hit = self.knots[idx] == t_arr
            out[hit] = self.values[idx[hit]]
        return complex(out[0]) if scalar else out

    def to_config(self) -> str | dict:
        """Plain-data form used in scenario files."""
        if self.kind == "closed_form":
            return self.expression
        return {
            "t": [float(x) for x in self.knots],
            "re": [float(x) for x in self.values.real],
            "im": [float(x) for x in self.values.imag],
        }

    @classmethod
    def from_config(cls, data) -> "CoefficientTrack":
        if isinstance(data, CoefficientTrack):
            return data
        if isinstance(data, str):
            return cls.from_expression(data)
        if isinstance(data, (int, float, complex)) and not isinstance(data, bool):
            return cls.constant(data)
        if isinstance(data, dict):
            if set(data) == {"re", "im"} and np.ndim(data["re"]) == 0:
                return cls.constant(complex(float(data["re"]), float(data["im"])))
            if "t" in data:
                re = np.asarray(data.get("re", np.zeros(len(data["t"]))), dtype=float)
                im = np.asarray(data.get("im", np.zeros(len(data["t"]))), dtype=float)
                return cls.from_samples(data["t"], re + 1j * im)
        raise ValueError(f"cannot interpret {data!r} as a coefficient track")


TrackLike = Union[CoefficientTrack, str, complex, float, dict]


def as_track(value: TrackLike) -> CoefficientTrack:
    return CoefficientTrack.from_config(value)


@dataclass(frozen=True, eq=False)
class LinearModel:
    """``H = omega a_dag a + alpha a + beta a_dag (+ offset)``.

    ``offset`` is an optional c-number track. It is zero for the base model and
    picks up the identity part generated when the model is lifted along a
    chain of Dyson maps.
    """

    omega: CoefficientTrack
    alpha: CoefficientTrack
    beta: CoefficientTrack
    offset: CoefficientTrack | None = None

    def __post_init__(self):
        for name in ("omega", "alpha", "beta"):
            object.__setattr__(self, name, as_track(getattr(self, name)))
        if self.offset is not None:
            object.__setattr__(self, "offset", as_track(self.offset))

    def coefficients(self, t):
        return self.omega(t), self.alpha(t), self.beta(t)


@dataclass(frozen=True, eq=False)
class SwansonModel:
    """``H = omega (a_dag a + 1/2) + alpha a^2 + beta a_dag^2``."""

    omega: CoefficientTrack
    alpha: CoefficientTrack
    beta: CoefficientTrack

    def __post_init__(self):
        for name in ("omega", "alpha", "beta"):
            object.__setattr__(self, name, as_track(getattr(self, name)))

    def coefficients(self, t):
        return self.omega(t), self.alpha(t), self.beta(t)


def build_linear_hamiltonian(model: LinearModel, t: float, config: FockConfig | int) -> np.ndarray:
    a, ad = build_ladder(config)
    w, al, be = model.coefficients(float(t))
    H = w * (ad @ a) + al * a + be * ad
    if model.offset is not None:
        H = H + model.offset(float(t)) * np.eye(a.shape[0])
    return H


def build_swanson_hamiltonian(model: SwansonModel, t: float, config: FockConfig | int) -> np.ndarray:
    a, ad = build_ladder(config)
    w, al, be = model.coefficients(float(t))
    eye = np.eye(a.shape[0])
    return w * (ad @ a + eye / 2) + al * (a @ a) + be * (ad @ ad)


def build_hamiltonian(model: LinearModel | SwansonModel, t: float, config: FockConfig | int) -> np.ndarray:
    if isinstance(model, SwansonModel):
        return build_swanson_hamiltonian(model, t, config)
    return build_linear_hamiltonian(model, t, config)


def hermiticity_residual(M: np.ndarray, config: FockConfig | None = None) -> float:
    """``||M - M^dag||_F / max(||M||_F, 1)`` on the verified block.

    Without a config the whole matrix is used.
    """
    M = np.asarray(M, dtype=complex)
    if config is not None:
        M = guarded(M, config)
    return float(np.linalg.norm(M - M.conj().T) / max(np.linalg.norm(M), 1.0))


@dataclass(frozen=True)
class PTReport:
    """Even/odd diagnostics of a model's coefficient tracks on ``[-horizon, horizon]``."""

    model: str
    deviations: dict[str, float]
    tolerance: float
    passed: bool
    unchecked: str = "continuation to pure-imaginary functions of it"

    @property
    def classification(self) -> str:
        return "PASS" if self.passed else "FAIL"


def pt_symmetry_check(model: LinearModel | SwansonModel, horizon: float, samples: int) -> PTReport:
    """Test the real-time PT conditions on a symmetric sample grid.

    For the linear model omega must be even and alpha, beta odd; for the
    Swanson model all three must be even.
    """
    t = np.linspace(-horizon, horizon, int(samples))
    w, al, be = (np.asarray(track(t)) for track in (model.omega, model.alpha, model.beta))

    def even(x):
        return float(np.max(np.abs(x - x[::-1])))

    def odd(x):
        return float(np.max(np.abs(x + x[::-1])))

    if isinstance(model, SwansonModel):
        deviations = {"omega_even": even(w), "alpha_even": even(al), "beta_even": even(be)}
        name = "swanson"
    else:
        deviations = {"omega_even": even(w), "alpha_odd": odd(al), "beta_odd": odd(be)}
        name = "linear"
    passed = all(v <= PT_TOLERANCE for v in deviations.values())
    return PTReport(model=name, deviations=deviations, tolerance=PT_TOLERANCE, passed=passed)
