"""Special functions used throughout the package.

Real-argument Gamma and Pochhammer symbols, the Gauss hypergeometric
function 2F1 with its parameter-shift derivatives, and the L2-normalised
Hermite functions

    psi_k(t) = (2^(k-1/2) k!)^(-1/2) H_k(sqrt(2 pi) t) exp(-pi t^2).

2F1 also accepts a complex-conjugate pair (a, b) with real c and z; the
series coefficients (a)_n (b)_n are then real, and so is the result.  This
case appears for factorization energies below the spectrum, where
sqrt(eps/2) is imaginary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AccuracyError, CapacityError, ParameterError

K_MAX = 512

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# below this distance from an integer, c - a - b is treated as degenerate
# for the 1 - z connection formula
_CONNECTION_EPS = 1e-4
# direct summation up to this z; the connection formula above it
_SERIES_ZMAX = 0.9
# connection results losing more than this factor to cancellation are redone
_CANCEL_MAX = 1e3


def _is_nonpositive_int(x) -> bool:
    if isinstance(x, complex):
        if x.imag != 0.0:
            return False
        x = x.real
    return x <= 0 and float(x) == math.floor(x)


def rgamma(z):
    """Reciprocal Gamma function 1/Gamma(z) for real or complex scalar ``z``.

    Entire, so it returns exactly zero at the poles of Gamma.
    """
    if _is_nonpositive_int(z):
        return 0.0
    z = complex(z)
    if z.real < 0.5:
        # reflection: 1/Gamma(z) = sin(pi z) Gamma(1 - z) / pi
        return complex(np.sin(np.pi * z)) / (np.pi * rgamma(1.0 - z))
    z -= 1.0
    acc = _LANCZOS[0]
    for i, p in enumerate(_LANCZOS[1:], start=1):
        acc += p / (z + i)
    t = z + _LANCZOS_G + 0.5
    log_gamma = 0.5 * math.log(2 * math.pi) + (z + 0.5) * np.log(t) - t + np.log(acc)
    return complex(np.exp(-log_gamma))


def gamma(z):
    """Gamma function; real in, real out (complex in, complex out)."""
    if not isinstance(z, complex) or z.imag == 0.0:
        x = float(z.real if isinstance(z, complex) else z)
        if _is_nonpositive_int(x):
            raise ParameterError(f"Gamma has a pole at {x}")
        return math.gamma(x)
    return 1.0 / rgamma(z)


def _gamma_sign(x: float) -> float:
    if x > 0:
        return 1.0
    return -1.0 if math.floor(-x) % 2 == 0 else 1.0


def log_pochhammer(a: float, n: int) -> tuple[float, float]:
    """Return ``(sign, log|(a)_n|)`` computed from log-Gamma differences.

    For ``(a)_n == 0`` the result is ``(0.0, -inf)``.
    """
    if n < 0:
        raise ParameterError("Pochhammer index must be nonnegative")
    if n == 0:
        return 1.0, 0.0
    if _is_nonpositive_int(a):
        if n > -a:
            return 0.0, -math.inf
        prod = math.prod(a + j for j in range(n))
        return math.copysign(1.0, prod), math.log(abs(prod))
    if _is_nonpositive_int(a + n):
        # a + n hits a pole only if a itself is a nonpositive integer
        raise ParameterError("inconsistent Pochhammer arguments")
    sign = _gamma_sign(a + n) * _gamma_sign(a)
    return sign, math.lgamma(a + n) - math.lgamma(a)


def pochhammer(a: float, n: int) -> float:
    """Rising factorial (a)_n = Gamma(a + n) / Gamma(a)."""
    sign, logabs = log_pochhammer(a, n)
    if sign == 0.0:
        return 0.0
    return sign * math.exp(logabs)


@dataclass(frozen=True)
class HypergeometricArgs:
    """Parameters and argument of 2F1(a, b; c; z).

    ``a`` and ``b`` are real, or a complex-conjugate pair.
    """

    a: complex | float
    b: complex | float
    c: float
    z: float

    def __post_init__(self):
        _check_params(self.a, self.b, self.c)
        if not 0.0 <= self.z < 1.0:
            raise ParameterError(f"z must lie in [0, 1), got {self.z}")

    @property
    def terminating_degree(self) -> int | None:
        return _terminating_degree(self.a, self.b)


def _terminating_degree(a, b) -> int | None:
    degrees = [int(-_real(p)) for p in (a, b) if _is_nonpositive_int(p)]
    return min(degrees) if degrees else None


def _real(x) -> float:
    return x.real if isinstance(x, complex) else float(x)


def _check_params(a, b, c):
    for p in (a, b):
        if isinstance(p, complex) and p.imag != 0.0:
            break
    else:
        if isinstance(c, complex):
            raise ParameterError("c must be real")
        _check_c(a, b, c)
        return
    if complex(a) != complex(b).conjugate():
        raise ParameterError("complex a, b must form a conjugate pair")
    _check_c(a, b, c)


def _check_c(a, b, c):
    if _is_nonpositive_int(c):
        deg = _terminating_degree(a, b)
        # the series stops before (c)_n vanishes only if deg < -c + 1
        if deg is None or deg > -c:
            raise ParameterError(f"c = {c} is a nonpositive integer")


def _series(a, b, c, z, tol, max_terms, degree=None):
    """Direct summation of the hypergeometric series, vectorised over z."""
    z = np.asarray(z, dtype=float)
    conj_pair = isinstance(a, complex) or isinstance(b, complex)
    term = np.ones_like(z)
    total = np.ones_like(z)
    if degree is not None:
        for n in range(degree):
            coef = (a + n) * (b + n)
            coef = coef.real if conj_pair else coef
            term = term * (coef / ((c + n) * (n + 1))) * z
            total = total + term
        return total
    zmax = float(np.max(z)) if z.size else 0.0
    if zmax == 0.0:
        return total
    # once n exceeds this, the term ratio is monotone towards z
    n_settle = int(abs(a) + abs(b) + abs(c)) + 2
    for n in range(max_terms):
        coef = (a + n) * (b + n)
        coef = coef.real if conj_pair else coef
        term = term * (coef / ((c + n) * (n + 1))) * z
        total = total + term
        if n > n_settle:
            ratio = abs((a + n + 1) * (b + n + 1) / ((c + n + 1) * (n + 2))) * zmax
            if ratio < 1.0:
                tail = np.abs(term) * ratio / (1.0 - ratio)
                if np.all(tail <= tol * np.maximum(np.abs(total), 1e-300)):
                    return total
    raise AccuracyError(
        "2F1 series did not converge",
        terms=max_terms,
        partial_sum=total,
        last_term=term,
    )


def hyp2f1(a, b, c, z, *, zc=None, tol=1e-15, max_terms=200_000):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z in [0, 1).

    Parameters
    ----------
    a, b : float or complex
        Real numbers or a complex-conjugate pair.
    c : float
    z : float or ndarray
    zc : float or ndarray, optional
        ``1 - z`` supplied by the caller with full relative precision
        (e.g. ``cos(x)**2`` when ``z = sin(x)**2``).

    Terminating series (a or b a nonpositive integer) are summed exactly.
    Otherwise the series is summed directly for z <= 0.9 and the 1 - z
    connection formula is used above (falling back to the series where its
    two terms cancel badly); when c - a - b is (nearly) an integer
    the Euler transformation plus direct summation is used instead.
    """
    _check_params(a, b, c)
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0.0) or np.any(z_arr >= 1.0):
        raise ParameterError("z must lie in [0, 1)")
    zc_arr = 1.0 - z_arr if zc is None else np.asarray(zc, dtype=float)
    conj_pair = isinstance(a, complex) or isinstance(b, complex)
    if conj_pair:
        a, b = complex(a), complex(b)
    degree = _terminating_degree(a, b)
    if degree is not None:
        return _shape_like(_series(a, b, c, z_arr, tol, max_terms, degree), z)

    out = np.empty_like(z_arr)
    low = z_arr <= _SERIES_ZMAX
    if np.any(low):
        out[low] = _series(a, b, c, z_arr[low], tol, max_terms)
    high = ~low
    if np.any(high):
        s = c - a - b
        s = s.real if isinstance(s, complex) else s
        if abs(s - round(s)) > _CONNECTION_EPS:
            vals, cancel = _connection(a, b, c, s, zc_arr[high], tol, max_terms)
            # large Gamma prefactors can cancel; fall back to the series there
            bad = cancel > _CANCEL_MAX
            if np.any(bad):
                vals[bad] = _series(a, b, c, z_arr[high][bad], tol, max_terms)
            out[high] = vals
        else:
            # Euler: 2F1(a,b;c;z) = (1-z)^(c-a-b) 2F1(c-a, c-b; c; z)
            inner = _series(c - a, c - b, c, z_arr[high], tol, max_terms)
            out[high] = zc_arr[high] ** s * inner
    return _shape_like(out, z)


def _connection(a, b, c, s, zc, tol, max_terms):
    """The 1 - z connection formula for non-integer s = c - a - b."""
    g_c = gamma(c)
    coef1 = g_c * gamma(s) * rgamma(c - a) * rgamma(c - b)
    coef2 = g_c * gamma(-s) * rgamma(a) * rgamma(b)
    coef1, coef2 = complex(coef1).real, complex(coef2).real
    part1 = 0.0
    if coef1 != 0.0:
        part1 = coef1 * _maybe_terminating(a, b, 1.0 - s, zc, tol, max_terms)
    part2 = 0.0
    if coef2 != 0.0:
        part2 = coef2 * zc**s * _maybe_terminating(c - a, c - b, 1.0 + s, zc, tol, max_terms)
    total = part1 + part2
    cancel = (np.abs(part1) + np.abs(part2)) / np.maximum(np.abs(total), 1e-300)
    return np.asarray(total, dtype=float), np.asarray(cancel)


def _maybe_terminating(a, b, c, z, tol, max_terms):
    return _series(a, b, c, z, tol, max_terms, _terminating_degree(a, b))


def _shape_like(values, z):
    if np.ndim(z) == 0:
        return float(np.asarray(values).reshape(()))
    return values


def gauss_2f1(args: HypergeometricArgs) -> float:
    """2F1(a, b; c; z) for validated arguments."""
    return hyp2f1(args.a, args.b, args.c, args.z)


def hyp2f1_deriv(a, b, c, z, order, *, zc=None):
    """``order``-th z-derivative of 2F1 via the parameter-shift identity

        d^k/dz^k 2F1(a, b; c; z) = (a)_k (b)_k / (c)_k 2F1(a+k, b+k; c+k; z).
    """
    if order not in (1, 2):
        raise ParameterError("order must be 1 or 2")
    _check_params(a, b, c)
    pref = 1.0
    for j in range(order):
        coef = (a + j) * (b + j)
        pref *= (coef.real if isinstance(coef, complex) else coef) / (c + j)
    if pref == 0.0:
        return _shape_like(np.zeros_like(np.asarray(z, dtype=float)), z)
    return pref * hyp2f1(a + order, b + order, c + order, z, zc=zc)


def gauss_2f1_deriv(args: HypergeometricArgs, order: int) -> float:
    return hyp2f1_deriv(args.a, args.b, args.c, args.z, order)


def hermite_table(kmax: int, t, *, k_cap: int = K_MAX) -> np.ndarray:
    """Values psi_0(t), ..., psi_{kmax}(t) stacked along axis 0.

    Uses the three-term recurrence on normalised functions, so no
    factorials are ever formed.
    """
    if kmax < 0:
        raise ParameterError("kmax must be nonnegative")
    if kmax > k_cap:
        raise CapacityError(f"Hermite order {kmax} exceeds K_max = {k_cap}")
    s = math.sqrt(2 * math.pi) * np.asarray(t, dtype=float)
    out = np.empty((kmax + 1,) + s.shape)
    # psi_k(t) = (2 pi)^(1/4) h_k(s) with h_k the standard Hermite functions
    out[0] = 2**0.25 * np.exp(-0.5 * s * s)
    if kmax >= 1:
        out[1] = math.sqrt(2.0) * s * out[0]
    for k in range(1, kmax):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * s * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_fn(k: int, t, *, k_cap: int = K_MAX):
    """The normalised Hermite function psi_k evaluated at ``t``."""
    if k < 0:
        raise ParameterError("k must be nonnegative")
    values = hermite_table(k, t, k_cap=k_cap)[k]
    return float(values) if np.ndim(t) == 0 else values
