"""The trigonometric Poschl-Teller Hamiltonian H0 = -1/2 d^2/dx^2 + V0 on (0, pi/2).

    V0(x) = (alpha - 1) alpha / (2 sin^2 x) + (beta - 1) beta / (2 cos^2 x)
    E_n   = (2n + gamma)^2 / 2,   gamma = alpha + beta

Eigenfunctions are evaluated through the orthonormal Jacobi recurrence in
y = cos(2x), which is stable for large n; the closed form with the
terminating 2F1 and the log-space normalisation constant is kept alongside
(`eigenfunction_closed_form`) and the two are cross-checked in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError, ParameterError
from .quadrature import gauss_legendre
from .specfun import hyp2f1, hyp2f1_deriv, log_pochhammer

N_MAX = 4096
HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class PTParams:
    """Potential parameters; ``gamma = alpha + beta`` is stored once."""

    alpha: float
    beta: float
    gamma: float = field(init=False)
    first_order_ok: bool = field(init=False)
    second_order_ok: bool = field(init=False)

    def __post_init__(self):
        if not (self.alpha > 1 and self.beta > 1):
            raise ParameterError(f"need alpha, beta > 1, got ({self.alpha}, {self.beta})")
        object.__setattr__(self, "gamma", self.alpha + self.beta)
        object.__setattr__(self, "first_order_ok", self.beta > 2)
        object.__setattr__(self, "second_order_ok", self.beta > 3)


@dataclass(frozen=True)
class EigenState:
    n: int
    energy: float
    norm_const: float


@dataclass(frozen=True)
class SolutionJet:
    """Value and first two x-derivatives of a solution of H0 u = eps u."""

    u: np.ndarray
    du: np.ndarray
    d2u: np.ndarray


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(x >= HALF_PI):
        raise DomainError("x must lie in the open interval (0, pi/2)")
    return x


def _out(values, x):
    return float(values) if np.ndim(x) == 0 else values


def potential_v0(p: PTParams, x):
    xa = _check_x(x)
    s2, c2 = np.sin(xa) ** 2, np.cos(xa) ** 2
    v = (p.alpha - 1) * p.alpha / (2 * s2) + (p.beta - 1) * p.beta / (2 * c2)
    return _out(v, x)


def eigenvalue(p: PTParams, n: int) -> float:
    return 0.5 * (2 * n + p.gamma) ** 2


def log_norm_const(p: PTParams, n: int) -> float:
    """Logarithm of the normalisation prefactor of psi_{0,n}."""
    a_half, b_half = p.alpha + 0.5, p.beta + 0.5
    _, lp_a = log_pochhammer(a_half, n)
    _, lp_b = log_pochhammer(b_half, n)
    log_sq = (
        math.log(2 * (2 * n + p.gamma))
        + math.lgamma(n + p.gamma)
        + lp_a
        - math.lgamma(n + 1)
        - math.lgamma(a_half)
        - math.lgamma(b_half)
        - lp_b
    )
    return 0.5 * log_sq


def eigenstate(p: PTParams, n: int) -> EigenState:
    if n < 0:
        raise ParameterError("n must be nonnegative")
    return EigenState(n, eigenvalue(p, n), math.exp(log_norm_const(p, n)))


def _jacobi_orthonormal(p: PTParams, nmax: int, y):
    """Orthonormal Jacobi polynomials and y-derivatives for weight
    (1 - y)^(alpha - 1/2) (1 + y)^(beta - 1/2), orders 0..nmax."""
    a, b = p.alpha - 0.5, p.beta - 0.5
    ab = a + b
    mu0 = math.exp(
        (ab + 1) * math.log(2) + math.lgamma(a + 1) + math.lgamma(b + 1) - math.lgamma(ab + 2)
    )
    vals = np.empty((nmax + 1,) + y.shape)
    ders = np.empty_like(vals)
    vals[0] = 1.0 / math.sqrt(mu0)
    ders[0] = 0.0

    def a_coef(n):
        if n == 0:
            return (b - a) / (ab + 2)
        return (b * b - a * a) / ((2 * n + ab) * (2 * n + ab + 2))

    def b_coef(n):
        m = 2 * n + ab
        return 4 * n * (n + a) * (n + b) * (n + ab) / (m * m * (m + 1) * (m - 1))

    prev_v, prev_d = np.zeros_like(y), np.zeros_like(y)
    sqrt_b = 0.0
    for n in range(nmax):
        sqrt_b_next = math.sqrt(b_coef(n + 1))
        shift = y - a_coef(n)
        vals[n + 1] = (shift * vals[n] - sqrt_b * prev_v) / sqrt_b_next
        ders[n + 1] = (vals[n] + shift * ders[n] - sqrt_b * prev_d) / sqrt_b_next
        prev_v, prev_d = vals[n], ders[n]
        sqrt_b = sqrt_b_next
    return vals, ders


def eigenfunction_table(p: PTParams, nmax: int, x, derivative: bool = False):
    """psi_{0,n}(x) for n = 0..nmax stacked along axis 0 (and psi' if asked)."""
    if nmax > N_MAX:
        raise CapacityError(f"n = {nmax} exceeds N_max = {N_MAX}")
    x = _check_x(x)
    s, c = np.sin(x), np.cos(x)
    y = np.cos(2 * x)
    vals, ders = _jacobi_orthonormal(p, nmax, y)
    envelope = 2 ** (0.5 * (p.gamma + 1)) * s**p.alpha * c**p.beta
    psi = envelope * vals
    if not derivative:
        return psi
    log_env = p.alpha * c / s - p.beta * s / c
    dpsi = psi * log_env + envelope * ders * (-2.0 * np.sin(2 * x))
    return psi, dpsi


def eigenfunction(p: PTParams, n: int, x):
    if n < 0:
        raise ParameterError("n must be nonnegative")
    return _out(eigenfunction_table(p, n, x)[n], x)


def eigenfunction_derivative(p: PTParams, n: int, x):
    _, dpsi = eigenfunction_table(p, n, x, derivative=True)
    return _out(dpsi[n], x)


def eigenfunction_closed_form(p: PTParams, n: int, x):
    """psi_{0,n} from the normalisation constant and the terminating 2F1."""
    xa = _check_x(x)
    s, c = np.sin(xa), np.cos(xa)
    f = hyp2f1(-n, n + p.gamma, p.alpha + 0.5, s * s, zc=c * c)
    psi = math.exp(log_norm_const(p, n)) * s**p.alpha * c**p.beta * f
    return _out(psi, x)


def _sigma(eps: float):
    """sqrt(eps/2), imaginary for negative eps."""
    return math.sqrt(eps / 2) if eps >= 0 else complex(0.0, math.sqrt(-eps / 2))


def _hyp_pair(a0: float, eps: float):
    sig = _sigma(eps)
    return a0 + sig, a0 - sig


def regular_branch(p: PTParams, eps: float, x):
    """Return (F, dF/dz) for the 2F1 factor of u_{eps,1,0} at z = sin^2 x."""
    s, c = np.sin(x), np.cos(x)
    a, b = _hyp_pair(p.gamma / 2, eps)
    cc = p.alpha + 0.5
    z, zc = s * s, c * c
    f = hyp2f1(a, b, cc, z, zc=zc)
    df = hyp2f1_deriv(a, b, cc, z, 1, zc=zc)
    return f, df


def log_derivative_regular(p: PTParams, eps: float, x):
    """kappa(x) = (log u_{eps,1,0})'(x), evaluated without cancellation."""
    xa = _check_x(x)
    s, c = np.sin(xa), np.cos(xa)
    f, df = regular_branch(p, eps, xa)
    kappa = p.alpha * c / s - p.beta * s / c + 2 * s * c * df / f
    return _out(kappa, x)


def general_solution(p: PTParams, eps: float, A: float, B: float, x) -> SolutionJet:
    """u_{eps,A,B}(x) together with u' (analytic) and u'' = 2 (V0 - eps) u."""
    xa = _check_x(x)
    s, c = np.sin(xa), np.cos(xa)
    z, zc = s * s, c * c
    cot, tan, sin2 = c / s, s / c, 2 * s * c
    u = np.zeros_like(xa)
    du = np.zeros_like(xa)
    if A != 0.0:
        a, b = _hyp_pair(p.gamma / 2, eps)
        cc = p.alpha + 0.5
        f = hyp2f1(a, b, cc, z, zc=zc)
        df = hyp2f1_deriv(a, b, cc, z, 1, zc=zc)
        env = s**p.alpha * c**p.beta
        u = u + A * env * f
        du = du + A * env * (f * (p.alpha * cot - p.beta * tan) + df * sin2)
    if B != 0.0:
        cc = 1.5 - p.alpha
        a, b = _hyp_pair((1 + p.beta - p.alpha) / 2, eps)
        f = hyp2f1(a, b, cc, z, zc=zc)
        df = hyp2f1_deriv(a, b, cc, z, 1, zc=zc)
        env = s ** (1 - p.alpha) * c**p.beta
        u = u + B * env * f
        du = du + B * env * (f * ((1 - p.alpha) * cot - p.beta * tan) + df * sin2)
    d2u = 2.0 * (potential_v0(p, xa) - eps) * u
    if np.ndim(x) == 0:
        return SolutionJet(float(u), float(du), float(d2u))
    return SolutionJet(u, du, d2u)


def quadrature_grid(nodes: int = 2000, delta: float = 1e-9):
    """Gauss-Legendre rule on (delta, pi/2 - delta)."""
    return gauss_legendre(nodes, delta, HALF_PI - delta)


def gram_matrix(p: PTParams, nmax: int, nodes: int = 2000, delta: float = 1e-9) -> np.ndarray:
    """G_{nm} = <psi_{0,n}, psi_{0,m}> for n, m <= nmax."""
    x, w = quadrature_grid(nodes, delta)
    psi = eigenfunction_table(p, nmax, x)
    return (psi * w) @ psi.T
