"""Window functions and their harmonic-oscillator rotations.

The rotated window is defined by the Hermite expansion

    f_phi(t) = sum_k f^(k) exp(-i (2k+1) phi / 2) psi_k(t),   f^(k) = <f, psi_k>,

which is the normative definition.  For windows where that series converges
slowly the same object is obtained from the Mehler kernel

    K_phi(t, s) = exp(-i pi/4) sin(phi)^(-1/2) exp(i pi [(t^2 + s^2) cot(phi) - 2 t s / sin(phi)]),

valid for 0 < phi < pi; indicators then reduce to Fresnel integrals and
Gaussian bumps to a closed form.  Other angles follow from the exact
relations f_{phi + pi}(t) = -i f_phi(-t) and f_{-phi} = conj(f_phi).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import fresnel

from .errors import AccuracyError, CapacityError, ParameterError
from .quadrature import composite_gauss_legendre
from .specfun import K_MAX, hermite_table

# sup |psi_k| <= SUP_PSI_CONST * k^(-1/12), checked numerically in the tests
SUP_PSI_CONST = 1.09
# below this |cos(phi)| the indicator uses kernel quadrature instead of Fresnel
_COS_QUAD = 1e-3
# Fresnel auxiliary asymptotics are used for |v| >= this
_FRESNEL_ASYM = 5.0
_NODES_PER_PANEL = 32


class Window:
    """A real window f on the line.

    Subclasses set ``support`` (closed interval, or None for HermiteBasis)
    and ``decay_class_eta``.
    """

    support: tuple[float, float] | None
    decay_class_eta: float

    def __call__(self, t):
        raise NotImplementedError

    def norm_sq(self) -> float:
        """Integral of f^2."""
        raise NotImplementedError

    def panels(self):
        """Panel edges on which f is smooth, for composite quadrature."""
        a, b = self.support
        n = max(1, math.ceil((b - a) / 0.25))
        return np.linspace(a, b, n + 1)

    def rotated(self, phi, t):
        """Closed-form or kernel evaluation of f_phi(t); None if unavailable."""
        return None


@dataclass(frozen=True)
class Indicator(Window):
    """Indicator of [a, b); half-open when sampled on a lattice."""

    a: float
    b: float
    decay_class_eta: float = field(default=1.0, init=False)

    def __post_init__(self):
        if not self.a < self.b:
            raise ParameterError(f"need a < b, got [{self.a}, {self.b})")

    @property
    def support(self):
        return (self.a, self.b)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return ((t >= self.a) & (t < self.b)).astype(float)

    def norm_sq(self):
        return self.b - self.a

    def rotated(self, phi, t):
        return _reduce_and_apply(_indicator_core, (self.a, self.b), phi, t, self)


@dataclass(frozen=True)
class HermiteBasis(Window):
    """psi_k itself; not compactly supported, used for validation."""

    k: int
    decay_class_eta: float = field(default=math.inf, init=False)

    def __post_init__(self):
        if self.k < 0:
            raise ParameterError("Hermite index must be nonnegative")

    @property
    def support(self):
        return None

    def __call__(self, t):
        return hermite_table(self.k, np.asarray(t, dtype=float))[self.k]

    def norm_sq(self):
        return 1.0

    def panels(self):
        half = 6.0 + 1.2 * math.sqrt((2 * self.k + 1) / (2 * math.pi))
        return np.linspace(-half, half, 2 * math.ceil(half / 0.25) + 1)

    def rotated(self, phi, t):
        phi, t = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(t, dtype=float))
        return np.exp(-0.5j * (2 * self.k + 1) * phi) * self(t)


@dataclass(frozen=True)
class GaussianBump(Window):
    """exp(-pi (t - center)^2 / width^2); support reported as center +- 8 width."""

    center: float
    width: float
    decay_class_eta: float = field(default=math.inf, init=False)

    def __post_init__(self):
        if not self.width > 0:
            raise ParameterError("width must be positive")

    @property
    def support(self):
        return (self.center - 8 * self.width, self.center + 8 * self.width)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-math.pi * (t - self.center) ** 2 / self.width**2)

    def norm_sq(self):
        return self.width / math.sqrt(2.0)

    def rotated(self, phi, t):
        phi, t = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(t, dtype=float))
        m, w2 = self.center, self.width**2
        # principal branch is continuous on the closed upper half plane, i.e. phi in [0, pi];
        # extend with f_{phi + pi}(t) = -i f_phi(-t)
        red = np.floor(phi / math.pi)
        phi0 = phi - red * math.pi
        t0 = np.where(red % 2 == 0, t, -t)
        s0, c0 = np.sin(phi0), np.cos(phi0)
        den0 = s0 / w2 - 1j * c0
        expo = math.pi * (
            1j * t0 * t0 * c0 / w2 - t0 * t0 * s0 + m * m * s0 / w2**2 - 2j * m * t0 / w2
        ) / den0 - math.pi * m * m / w2
        return (-1j) ** (red % 4) * (c0 + 1j * s0 / w2) ** -0.5 * np.exp(expo)


@dataclass(frozen=True, eq=False)
class TableFn(Window):
    """Piecewise-linear interpolant of samples, zero outside the grid."""

    grid: np.ndarray
    values: np.ndarray
    decay_class_eta: float = field(default=1.0, init=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ParameterError("grid and values must be 1-d arrays of equal length >= 2")
        if np.any(np.diff(grid) <= 0):
            raise ParameterError("grid must be strictly increasing")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_csv(cls, path) -> "TableFn":
        """Read a two-column CSV (t, f(t)); a non-numeric first row is a header."""
        rows = []
        with open(path, newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                if not row:
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    if i == 0:
                        continue
                    raise ParameterError(f"{path}: bad row {i + 1}: {row!r}") from None
        data = np.array(rows)
        return cls(data[:, 0], data[:, 1])

    @property
    def support(self):
        return (float(self.grid[0]), float(self.grid[-1]))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.interp(t, self.grid, self.values, left=0.0, right=0.0)

    def panels(self):
        edges = [self.grid[0]]
        for lo, hi in zip(self.grid[:-1], self.grid[1:]):
            n = max(1, math.ceil((hi - lo) / 0.25))
            edges.extend(np.linspace(lo, hi, n + 1)[1:])
        return np.asarray(edges)

    def norm_sq(self):
        x, w = composite_gauss_legendre(4, self.panels())
        return float(np.sum(w * self(x) ** 2))

    def rotated(self, phi, t):
        return _reduce_and_apply(_table_core, self, phi, t, self)


# --- Hermite expansion -------------------------------------------------------


def hermite_coeffs(f: Window, K: int) -> np.ndarray:
    """(f^(0), ..., f^(K-1)) by composite Gauss-Legendre over the support of f."""
    if K > K_MAX:
        raise CapacityError(f"K = {K} exceeds K_max = {K_MAX}")
    if isinstance(f, HermiteBasis):
        out = np.zeros(K)
        if f.k < K:
            out[f.k] = 1.0
        return out
    x, w = composite_gauss_legendre(64, f.panels())
    table = hermite_table(K - 1, x)
    return table @ (w * f(x))


@dataclass(frozen=True, eq=False)
class RotatedWindow:
    """Truncated Hermite representation of f_phi."""

    base: Window
    phi: float
    hermite_coeffs: np.ndarray
    truncation_bound: float

    def phases(self) -> np.ndarray:
        k = np.arange(self.hermite_coeffs.size)
        return np.exp(-0.5j * (2 * k + 1) * self.phi)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        table = hermite_table(self.hermite_coeffs.size - 1, t)
        weights = self.hermite_coeffs * self.phases()
        return np.tensordot(weights, table, axes=1)


def truncation_order(f: Window, tol: float, k_cap: int = K_MAX):
    """Smallest K with l2 tail < tol/2 and sup-norm tail bound < tol/2.

    Returns (K, coefficients, achieved sup bound).  The l2 tail uses the
    exact norm of f; the sup bound applies sup|psi_k| <= 1.09 k^(-1/12)
    to the computed coefficients and is only trusted once the l2 tail
    beyond the cap is itself negligible.
    """
    coeffs = hermite_coeffs(f, k_cap)
    sq = coeffs**2
    l2_tail = np.maximum(f.norm_sq() - np.cumsum(sq), 0.0)  # tail beyond index K-1
    l2_tail = np.concatenate([[f.norm_sq()], l2_tail])
    k = np.arange(k_cap)
    sup_terms = np.abs(coeffs) * SUP_PSI_CONST * np.maximum(k, 1) ** (-1.0 / 12.0)
    sup_tail = np.concatenate([np.cumsum(sup_terms[::-1])[::-1], [0.0]])
    # beyond the cap only the l2 remainder is known; bound sup by it crudely
    sup_tail = sup_tail + SUP_PSI_CONST * np.sqrt(l2_tail[-1]) * math.sqrt(k_cap)
    ok = np.flatnonzero((l2_tail < (tol / 2) ** 2) & (sup_tail < tol / 2))
    if ok.size == 0:
        raise AccuracyError(
            f"Hermite truncation cannot reach tol = {tol} within K_max = {k_cap}",
            achieved_sup_bound=float(sup_tail[-1]),
            achieved_l2_tail=float(math.sqrt(l2_tail[-1])),
        )
    kk = max(int(ok[0]), 1)
    return kk, coeffs[:kk], float(sup_tail[kk])


def rotate(f: Window, phi: float, tol: float = 1e-10, K: int | None = None) -> RotatedWindow:
    """Build the truncated Hermite representation of f_phi."""
    if K is not None:
        coeffs = hermite_coeffs(f, K)
        bound = math.sqrt(max(f.norm_sq() - float(np.sum(coeffs**2)), 0.0))
        return RotatedWindow(f, float(phi), coeffs, bound)
    kk, coeffs, bound = truncation_order(f, tol)
    return RotatedWindow(f, float(phi), coeffs, bound)


def rotated_window(f: Window, phi, t, tol: float = 1e-10, method: str = "auto", K: int | None = None):
    """f_phi(t), broadcasting over ``phi`` and ``t``.

    ``method`` is "auto" (closed form / kernel where available, otherwise the
    Hermite series), "hermite" or "kernel".  Passing ``K`` forces a fixed
    Hermite truncation.
    """
    if tol < 1e-10:
        raise ParameterError("tol must be >= 1e-10")
    if method not in ("auto", "hermite", "kernel"):
        raise ParameterError(f"unknown method {method!r}")
    scalar = np.ndim(phi) == 0 and np.ndim(t) == 0
    if K is not None or method == "hermite":
        phi_b, t_b = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(t, dtype=float))
        rw = rotate(f, 0.0, tol, K)
        table = hermite_table(rw.hermite_coeffs.size - 1, t_b)
        k = np.arange(rw.hermite_coeffs.size).reshape((-1,) + (1,) * phi_b.ndim)
        out = np.sum(
            rw.hermite_coeffs.reshape(k.shape) * np.exp(-0.5j * (2 * k + 1) * phi_b) * table, axis=0
        )
    elif method == "kernel":
        if f.support is None:
            raise ParameterError("kernel path needs a compactly supported window")
        out = _reduce_and_apply(_kernel_core, f, phi, t, f)
    else:
        out = f.rotated(phi, t)
        if out is None:
            return rotated_window(f, phi, t, tol, "hermite")
    return complex(out) if scalar else out


# --- closed forms ------------------------------------------------------------


def _reduce_and_apply(core, data, phi, t, f):
    """Map phi to delta in [0, pi/2] via the exact symmetries, evaluate ``core``."""
    phi, t = np.broadcast_arrays(np.asarray(phi, dtype=float), np.asarray(t, dtype=float))
    red = np.floor(phi / math.pi)
    phi0 = phi - red * math.pi
    t0 = np.where(red % 2 == 0, t, -t)
    factor = (-1j) ** (red % 4)
    upper = phi0 > 0.5 * math.pi
    # f_{phi0}(t) = -i conj(f_{pi - phi0}(-t)) for real f
    delta = np.where(upper, math.pi - phi0, phi0)
    tt = np.where(upper, -t0, t0)
    out = np.empty(phi.shape, dtype=complex)
    at_zero = delta == 0.0
    out[at_zero] = f(tt[at_zero])
    rest = ~at_zero
    if np.any(rest):
        out[rest] = core(data, delta[rest], tt[rest])
    out = np.where(upper, -1j * np.conj(out), out)
    return factor * out


def mehler_kernel(phi, t, s):
    """K_phi(t, s) for 0 < phi < pi."""
    sn, cot = np.sin(phi), np.cos(phi) / np.sin(phi)
    return np.exp(-0.25j * math.pi) / np.sqrt(sn) * np.exp(
        1j * math.pi * ((t * t + s * s) * cot - 2 * t * s / sn)
    )


def _fresnel_aux(x):
    """Auxiliary functions (f, g) for x >= 5 by their asymptotic series.

    C(x) + i S(x) = (1 + i)/2 - (g + i f) exp(i pi x^2 / 2) for x > 0.
    """
    y = (math.pi * x * x) ** -2
    # 12 terms reach 1e-17 at x = 5; 3 suffice beyond x = 40
    n_terms = 12 if np.any(x < 40.0) else 3
    f_sum = np.ones_like(x)
    g_sum = np.ones_like(x)
    tf = np.ones_like(x)
    tg = np.ones_like(x)
    for k in range(n_terms):
        tf = -tf * ((4 * k + 1) * (4 * k + 3)) * y
        tg = -tg * ((4 * k + 3) * (4 * k + 5)) * y
        f_sum += tf
        g_sum += tg
    return f_sum / (math.pi * x), g_sum / (math.pi**2 * x**3)


def fresnel_aux(x):
    """(f, g) for any x >= 0; scipy below 5 and asymptotics above."""
    x = np.asarray(x, dtype=float)
    fa = np.empty_like(x)
    ga = np.empty_like(x)
    small = x < _FRESNEL_ASYM
    if np.any(small):
        xs = x[small]
        s, c = fresnel(xs)
        ph = 0.5 * math.pi * xs * xs
        # (1+i)/2 - (C + iS) = (g + i f) e^{i ph}
        w = ((0.5 - c) + 1j * (0.5 - s)) * np.exp(-1j * ph)
        ga[small], fa[small] = w.real, w.imag
    big = ~small
    if np.any(big):
        xb = x[big]
        near = xb < 40.0
        fb, gb = np.empty_like(xb), np.empty_like(xb)
        for m in (near, ~near):
            if np.any(m):
                fb[m], gb[m] = _fresnel_aux(xb[m])
        fa[big], ga[big] = fb, gb
    return fa, ga


def _indicator_core(ab, delta, t):
    """Indicator of [a, b] rotated by delta in (0, pi/2]."""
    a, b = ab
    out = np.empty(delta.shape, dtype=complex)
    quad = np.abs(np.cos(delta)) < _COS_QUAD
    if np.any(quad):
        out[quad] = _kernel_quad(Indicator(a, b), delta[quad], t[quad])
    fr = ~quad
    if np.any(fr):
        out[fr] = _indicator_fresnel(a, b, delta[fr], t[fr])
    return out


def _edge_terms(e, delta, t):
    """G = e(-t^2 tan / 2) (C + iS)(v) and E = e(((t^2 + e^2) cot - 2 t e / sin) / 2) at an edge e.

    v = sqrt(2 cot)(e - t / cos).  For large |v| the constant part of C + iS
    and the oscillating remainder are kept apart so that differences of G
    between edges on the same side of t / cos do not cancel.
    """
    s, c = np.sin(delta), np.cos(delta)
    cot = c / s
    v = np.sqrt(2 * cot) * (e - t / c)
    E = np.exp(1j * math.pi * ((t * t + e * e) * cot - 2 * t * e / s))
    av = np.abs(v)
    small = av < _FRESNEL_ASYM
    h = np.sign(v) * (0.5 + 0.5j)
    fs, fc = fresnel(v[small])
    h[small] = fc + 1j * fs
    G = h * np.exp(-1j * math.pi * t * t * s / c)
    big = ~small
    if np.any(big):
        fa, ga = _fresnel_aux(av[big])
        G[big] -= np.sign(v[big]) * (ga + 1j * fa) * E[big]
    return G, E


def _indicator_fresnel(a, b, delta, t):
    pref = np.exp(-0.25j * math.pi) / np.sqrt(2 * np.cos(delta))
    return pref * (_edge_terms(b, delta, t)[0] - _edge_terms(a, delta, t)[0])


def _table_core(f, delta, t):
    """Piecewise-linear window rotated by delta in (0, pi/2].

    After completing the square the kernel is exp(i pi cot (s - t/cos)^2) up to
    factors, so each linear piece p + q (s - t/cos) integrates to Fresnel
    integrals plus q (E_b - E_a) / (2 i pi cot).
    """
    out = np.empty(delta.shape, dtype=complex)
    quad = np.abs(np.cos(delta)) < _COS_QUAD
    if np.any(quad):
        out[quad] = _kernel_quad(f, delta[quad], t[quad])
    fr = ~quad
    if np.any(fr):
        d, tt = delta[fr], t[fr]
        c = np.cos(d)
        s0 = tt / c
        root = np.sqrt(2 * c / np.sin(d))
        nodes = [_edge_terms(e, d, tt) for e in f.grid]
        acc = np.zeros(d.shape, dtype=complex)
        for k in range(f.grid.size - 1):
            lo, hi = f.grid[k], f.grid[k + 1]
            q = (f.values[k + 1] - f.values[k]) / (hi - lo)
            p = f.values[k] + q * (s0 - lo)
            (ga, ea), (gb, eb) = nodes[k], nodes[k + 1]
            acc += p * (gb - ga) + q * (eb - ea) / (1j * math.pi * root)
        out[fr] = np.exp(-0.25j * math.pi) / np.sqrt(2 * c) * acc
    return out


def _kernel_quad(f: Window, delta, t):
    """Composite Gauss-Legendre integral of K_delta(t, s) f(s) over the support."""
    a, b = f.support
    sn = np.sin(delta)
    cot = np.cos(delta) / sn
    # total phase variation over [a, b], in units of 2 pi
    span = (b - a) * (np.abs(cot) * max(abs(a), abs(b)) + np.abs(t) / sn)
    cycles = float(np.max(span)) if span.size else 0.0
    n_panels = max(1, math.ceil(cycles / 2.0))
    if n_panels > 20_000:
        raise AccuracyError("kernel quadrature too oscillatory", cycles=cycles)
    base_edges = f.panels()
    edges = np.unique(np.concatenate([base_edges, np.linspace(a, b, n_panels + 1)]))
    x, w = composite_gauss_legendre(_NODES_PER_PANEL, edges)
    fx = f(x) if not isinstance(f, Indicator) else np.ones_like(x)
    out = np.empty(delta.shape, dtype=complex)
    # chunk to bound memory
    flat_d, flat_t = delta.ravel(), t.ravel()
    res = np.empty(flat_d.shape, dtype=complex)
    step = max(1, 2_000_000 // max(x.size, 1))
    for i in range(0, flat_d.size, step):
        d = flat_d[i : i + step, None]
        tt = flat_t[i : i + step, None]
        res[i : i + step] = mehler_kernel(d, tt, x[None, :]) @ (w * fx)
    out[...] = res.reshape(delta.shape)
    return out


def _kernel_core(f, delta, t):
    return _kernel_quad(f, delta, t)


# --- diagnostics ---------------------------------------------------------------


@dataclass(frozen=True)
class KappaEta:
    value: float
    eta: float
    w_max: float
    n_w: int
    n_phi: int


def kappa_eta(f: Window, eta: float, w_max: float = 20.0, n_w: int = 4001, n_phi: int = 64) -> KappaEta:
    """Grid estimate of sup_{w, phi} |f_phi(w)| (1 + |w|)^eta."""
    if f.decay_class_eta <= 1.0:
        raise ParameterError("kappa_eta needs a smooth window (eta > 1)")
    w = np.linspace(-w_max, w_max, n_w)
    phi = np.linspace(0.0, math.pi, n_phi, endpoint=False)
    vals = np.abs(rotated_window(f, phi[:, None], w[None, :], tol=1e-8))
    value = float(np.max(vals * (1 + np.abs(w[None, :])) ** eta))
    return KappaEta(value, eta, w_max, n_w, n_phi)
