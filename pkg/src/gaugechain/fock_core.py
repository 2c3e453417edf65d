"""Truncated Fock-space linear algebra.

Operators are dense ``complex128`` numpy arrays. A :class:`FockConfig`
describes three nested index ranges::

    [0, guard)        levels entering every residual norm
    [guard, dim)      the tail guard, built but excluded from norms
    [dim, work_dim)   hidden padding levels

Every operator builder works on ``work_dim = dim + pad`` levels. Squeezing
and displacement exponentials computed on a truncated basis are wrong near
the top of that basis and the error creeps downwards; padding pushes the
damage out of the verified block without changing what is verified.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import BranchSingularityError, DomainError, MatrixOverflowError, TruncationError

#: Largest 1-norm accepted by :func:`matrix_exp` (``e**700`` is near the float limit).
EXP_NORM_CAP = 700.0

# Scaling-and-squaring parameters: squaring threshold and Taylor order.
# 0.5**15 / 15! ~ 2e-17, comfortably below the 1e-13 kernel target.
_THETA = 0.5
_TAYLOR_ORDER = 14

# below this |Xi^2| the series for Xi*coth(Xi) is used
_XI_SERIES_CUTOFF = 1e-3


@dataclass(frozen=True)
class FockConfig:
    dim: int
    tail_guard: int = 5
    tol_tail: float = 1e-12
    pad: int = 0

    def __post_init__(self):
        problems = []
        if int(self.dim) != self.dim or self.dim < 4:
            problems.append(f"dim must be an integer >= 4, got {self.dim!r}")
        if int(self.tail_guard) != self.tail_guard or self.tail_guard < 1:
            problems.append(f"tail_guard must be a positive integer, got {self.tail_guard!r}")
        elif self.tail_guard >= self.dim:
            problems.append("tail_guard must be smaller than dim")
        if self.tol_tail < 0:
            problems.append("tol_tail must be nonnegative")
        if int(self.pad) != self.pad or self.pad < 0:
            problems.append("pad must be a nonnegative integer")
        if problems:
            raise ValueError("invalid FockConfig: " + "; ".join(problems))

    @property
    def work_dim(self) -> int:
        return self.dim + self.pad

    @property
    def guard(self) -> int:
        """Number of leading levels that enter residual norms."""
        return self.dim - self.tail_guard

    def replace(self, **changes) -> "FockConfig":
        fields = dict(dim=self.dim, tail_guard=self.tail_guard, tol_tail=self.tol_tail, pad=self.pad)
        fields.update(changes)
        return FockConfig(**fields)


def _work_dim(config: FockConfig | int) -> int:
    # bare integers are accepted by the pure constructors so tiny examples stay readable
    if isinstance(config, FockConfig):
        return config.work_dim
    n = int(config)
    if n < 1:
        raise ValueError("dimension must be positive")
    return n


def as_operator(M) -> np.ndarray:
    """Validate ``M`` as a finite square matrix and return it as complex128."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"operator must be a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("operator has non-finite entries")
    return A


def guarded(M: np.ndarray, config: FockConfig) -> np.ndarray:
    """Restrict an operator (or a stack of them) to the verified block."""
    g = config.guard
    return M[..., :g, :g]


def guarded_norm(M: np.ndarray, config: FockConfig) -> float:
    return float(np.linalg.norm(guarded(M, config)))


def build_ladder(config: FockConfig | int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation and creation operators ``(a, a_dag)``."""
    n = _work_dim(config)
    a = np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)
    return a, a.conj().T.copy()


def number_operator(config: FockConfig | int) -> np.ndarray:
    n = _work_dim(config)
    return np.diag(np.arange(n, dtype=float)).astype(complex)


def identity(config: FockConfig | int) -> np.ndarray:
    return np.eye(_work_dim(config), dtype=complex)


def matrix_exp(M, *, cap: float = EXP_NORM_CAP) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor kernel.

    The matrix is scaled by ``2**-s`` until its 1-norm is at most 0.5, the
    exponential of the scaled matrix is summed to order 14 (Horner form) and
    the result squared ``s`` times.

    Raises:
        MatrixOverflowError: if ``||M||_1 > cap``.
    """
    A = as_operator(M)
    norm = float(np.linalg.norm(A, 1))
    if norm > cap:
        raise MatrixOverflowError(f"exponent norm {norm:.3g} exceeds cap {cap:.3g}")
    s = 0 if norm <= _THETA else int(math.ceil(math.log2(norm / _THETA)))
    if s:
        A = A / (2.0**s)
    eye = np.eye(A.shape[0], dtype=complex)
    E = eye.copy()
    for k in range(_TAYLOR_ORDER, 0, -1):
        E = eye + (A @ E) / k
    for _ in range(s):
        E = E @ E
    return E


def displacement(theta: complex, config: FockConfig) -> np.ndarray:
    """``D(theta) = exp(theta a_dag - theta* a)``.

    Raises:
        TruncationError: if ``D(theta)|0>`` puts more than ``tol_tail`` of its
            weight on levels at or above ``config.guard``.
    """
    a, ad = build_ladder(config)
    theta = complex(theta)
    D = matrix_exp(theta * ad - theta.conjugate() * a)
    tail = float(np.sum(np.abs(D[config.guard:, 0]) ** 2))
    if tail > config.tol_tail:
        raise TruncationError(
            f"coherent amplitude {abs(theta):.3g} leaks {tail:.2e} into the tail "
            f"(dim={config.dim}, tail_guard={config.tail_guard})"
        )
    return D


def rotation(chi: float, config: FockConfig | int) -> np.ndarray:
    """``R(chi) = exp(-i chi a_dag a)``, built directly as a diagonal."""
    m = np.arange(_work_dim(config), dtype=float)
    return np.diag(np.exp(-1j * float(chi) * m))


def su11_generators(config: FockConfig | int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(K_plus, K_minus, K_zero) = (a_dag^2/2, a^2/2, a_dag a/2 + 1/4)``."""
    a, ad = build_ladder(config)
    n = ad @ a
    eye = np.eye(n.shape[0], dtype=complex)
    return ad @ ad / 2, a @ a / 2, n / 2 + eye / 4


def su11_exponent(epsilon: float, mu: complex, config: FockConfig | int) -> np.ndarray:
    """Hermitian exponent ``eps (a_dag a + 1/2) + mu a^2 + mu* a_dag^2``."""
    a, ad = build_ladder(config)
    mu = complex(mu)
    eye = np.eye(a.shape[0], dtype=complex)
    return float(epsilon) * (ad @ a + eye / 2) + mu * (a @ a) + mu.conjugate() * (ad @ ad)


def su11_exponential(epsilon: float, mu: complex, config: FockConfig | int) -> np.ndarray:
    return matrix_exp(su11_exponent(epsilon, mu, config))


@dataclass(frozen=True)
class Su11Params:
    """Gauss-decomposition data of ``exp(eps(a_dag a+1/2) + mu a^2 + mu* a_dag^2)``."""

    epsilon: float
    mu: complex
    xi: complex
    gamma_plus: complex
    gamma_minus: complex
    z: complex
    phi: float
    chi: float
    varphi: float
    lambda_plus: complex
    lambda_minus: complex
    lambda_zero: complex

    @property
    def log_lambda_zero(self) -> complex:
        lz = complex(self.lambda_zero)
        if lz.imag == 0.0 and lz.real <= 0.0:
            raise DomainError(f"ln(lambda_0) undefined on the principal branch: lambda_0={lz}")
        return cmath.log(lz)

    @property
    def bogoliubov_sign(self) -> int:
        """Sign in ``eta (a, a_dag) eta^-1 = +-lambda_0^(-1/2) [[-1, l+], [-l-, chi]] (a, a_dag)``.

        Equal to the sign of ``(eps/Xi) sinh(Xi) - cosh(Xi)``; any quadratic
        Hamiltonian is insensitive to it.
        """
        ch, shc = _cosh_sinhc(self.epsilon**2 - 4 * abs(self.mu) ** 2)
        return 1 if self.epsilon * shc - ch > 0 else -1


def _xi_coth_xi(s: float) -> float:
    """``Xi coth(Xi)`` as a function of ``s = Xi**2``; even in Xi, so real for either sign of s."""
    if abs(s) < _XI_SERIES_CUTOFF:
        return 1 + s / 3 - s**2 / 45 + 2 * s**3 / 945 - s**4 / 4725 + 2 * s**5 / 93555
    if s > 0:
        x = math.sqrt(s)
        return x / math.tanh(x)
    x = math.sqrt(-s)
    t = math.tan(x)
    if t == 0.0:
        raise BranchSingularityError(f"cot(Xi/i) diverges at |Xi|={x}")
    # coth(ix) = -i cot(x), so (ix) coth(ix) = x cot(x)
    return x / t


def _cosh_sinhc(s: float) -> tuple[float, float]:
    """``(cosh Xi, sinh(Xi)/Xi)`` as functions of ``s = Xi**2``."""
    if abs(s) < _XI_SERIES_CUTOFF:
        ch = 1 + s / 2 + s**2 / 24 + s**3 / 720 + s**4 / 40320
        shc = 1 + s / 6 + s**2 / 120 + s**3 / 5040 + s**4 / 362880
        return ch, shc
    if s > 0:
        x = math.sqrt(s)
        return math.cosh(x), math.sinh(x) / x
    x = math.sqrt(-s)
    return math.cos(x), math.sin(x) / x


def gauss_decompose(epsilon: float, mu: complex) -> Su11Params:
    """Disentangle ``exp(eps(a_dag a + 1/2) + mu a^2 + mu* a_dag^2)``.

    Returns the coefficients of ``exp(l+ K+) exp(ln(l0) K0) exp(l- K-)``.
    When ``eps**2 < 4|mu|**2`` the square root ``Xi`` is imaginary and
    ``Xi coth Xi`` continues to ``|Xi| cot |Xi|``; near ``Xi = 0`` a series is
    used, so that point is regular. The decomposition itself breaks down when
    ``Gamma_- = 1 - (Xi/eps) coth Xi`` vanishes.

    Raises:
        ValueError: if ``epsilon == 0``.
        BranchSingularityError: if ``|Gamma_-| < 1e-12``.
        DomainError: if ``lambda_0`` lands on the non-positive real axis.
    """
    eps = float(epsilon)
    mu = complex(mu)
    if eps == 0.0:
        raise ValueError("gauss_decompose needs epsilon != 0")
    s = eps * eps - 4 * abs(mu) ** 2
    xi = cmath.sqrt(s) if s >= 0 else 1j * math.sqrt(-s)
    c = _xi_coth_xi(s)
    gamma_plus = 1 + c / eps
    gamma_minus = 1 - c / eps
    if abs(gamma_minus) < 1e-12:
        raise BranchSingularityError(
            f"Gamma_- vanishes (eps={eps}, |mu|={abs(mu)}): no finite Gauss factors"
        )
    z = 2 * mu / eps
    varphi = cmath.phase(z) if z != 0 else 0.0
    phi = abs(z) / gamma_minus
    chi = 2 / gamma_minus - 1
    lambda_plus = -phi * cmath.exp(-1j * varphi)
    lambda_minus = -phi * cmath.exp(1j * varphi)
    lambda_zero = complex(phi * phi - chi)
    params = Su11Params(
        epsilon=eps,
        mu=mu,
        xi=complex(xi),
        gamma_plus=complex(gamma_plus),
        gamma_minus=complex(gamma_minus),
        z=z,
        phi=float(phi),
        chi=float(chi),
        varphi=float(varphi),
        lambda_plus=complex(lambda_plus),
        lambda_minus=complex(lambda_minus),
        lambda_zero=lambda_zero,
    )
    params.log_lambda_zero  # raises DomainError on a bad branch
    return params


def su11_product(params: Su11Params, config: FockConfig | int) -> np.ndarray:
    """``exp(l+ K+) exp(ln(l0) K0) exp(l- K-)`` as a matrix.

    The outer factors are triangular, so every entry of the truncated
    product equals the corresponding entry of the untruncated operator.
    """
    kp, km, _ = su11_generators(config)
    n = kp.shape[0]
    k0_diag = np.arange(n, dtype=float) / 2 + 0.25
    middle = np.exp(params.log_lambda_zero * k0_diag)
    left = matrix_exp(params.lambda_plus * kp)
    right = matrix_exp(params.lambda_minus * km)
    return (left * middle[np.newaxis, :]) @ right


def gauss_residual(params: Su11Params, config: FockConfig) -> float:
    """Relative Frobenius mismatch of the two sides of the disentangling identity.

    Only the verified block ``[0, guard)`` enters the norms.
    """
    lhs = guarded(su11_exponential(params.epsilon, params.mu, config), config)
    rhs = guarded(su11_product(params, config), config)
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(lhs))
