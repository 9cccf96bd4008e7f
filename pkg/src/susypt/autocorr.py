"""Autocorrelation functions of the Poschl-Teller model with windowed profiles.

With |c_n|^2 = f(n/N)/N the autocorrelation of the state is the trigonometric
sum A_N(t) = sum_n f(n/N) exp(i E_n t) / N, and X_N = sqrt(N) A_N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .pt_model import PTParams
from .windows import Window

NORMALISATION_TOL = 1e-6
_CHUNK_TERMS = 1 << 22


# --- time densities ------------------------------------------------------------


@dataclass(frozen=True)
class Uniform:
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if not self.b > self.a:
            raise ParameterError("uniform density needs a < b")

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.where((t >= self.a) & (t < self.b), 1.0 / (self.b - self.a), 0.0)

    def ppf(self, u):
        return self.a + (self.b - self.a) * np.asarray(u, dtype=float)


@dataclass(frozen=True)
class Triangular:
    """Symmetric triangular density on [a, b] with its peak at the midpoint."""

    a: float = 0.0
    b: float = 2.0

    def __post_init__(self):
        if not self.b > self.a:
            raise ParameterError("triangular density needs a < b")

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        h = 0.5 * (self.b - self.a)
        return np.clip(1.0 - np.abs(t - self.a - h) / h, 0.0, None) / h

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        h = 0.5 * (self.b - self.a)
        lower = self.a + h * np.sqrt(2 * u)
        upper = self.b - h * np.sqrt(2 * (1 - u))
        return np.where(u < 0.5, lower, upper)


@dataclass(frozen=True, eq=False)
class TableDensity:
    """Piecewise-linear density through (grid, values); must integrate to 1."""

    grid: np.ndarray
    values: np.ndarray
    cdf_nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ParameterError("density table needs matching 1-d grid and values")
        if np.any(np.diff(grid) <= 0):
            raise ParameterError("density grid must be strictly increasing")
        if np.any(values < 0):
            raise ParameterError("density values must be nonnegative")
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(grid))])
        if abs(cdf[-1] - 1.0) > NORMALISATION_TOL:
            raise ParameterError(f"density integrates to {cdf[-1]!r}, not 1 (tolerance {NORMALISATION_TOL})")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "cdf_nodes", cdf / cdf[-1])

    @classmethod
    def from_csv(cls, path) -> "TableDensity":
        data = np.loadtxt(path, delimiter=",", ndmin=2, comments="#")
        return cls(data[:, 0], data[:, 1])

    def pdf(self, t):
        return np.interp(t, self.grid, self.values, left=0.0, right=0.0)

    def ppf(self, u):
        # exact inverse of the piecewise-quadratic CDF
        u = np.asarray(u, dtype=float)
        i = np.clip(np.searchsorted(self.cdf_nodes, u, side="right") - 1, 0, self.grid.size - 2)
        t0, h = self.grid[i], np.diff(self.grid)[i]
        p0 = self.values[i]
        slope = (self.values[i + 1] - p0) / h
        r = u - self.cdf_nodes[i]
        # root of p0 h + slope h^2 / 2 = r in its cancellation-free form
        denom = p0 + np.sqrt(np.maximum(p0 * p0 + 2 * slope * r, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(denom > 0, 2 * r / denom, 0.0)
        return np.clip(t0 + step, self.grid[i], self.grid[i + 1])


Density = Uniform | Triangular | TableDensity


# --- time models ----------------------------------------------------------------


@dataclass(frozen=True)
class GridTimes:
    t0: float
    t1: float
    steps: int

    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.steps)


@dataclass(frozen=True)
class RandomTimes:
    density: Density
    count: int
    seed: int

    def times(self) -> np.ndarray:
        return sample_random_times(self)


def sample_random_times(model: RandomTimes) -> np.ndarray:
    """i.i.d. times by inverse CDF from an explicit seed."""
    if model.count < 0:
        raise ParameterError("count must be nonnegative")
    rng = np.random.default_rng(model.seed)
    return np.asarray(model.density.ppf(rng.uniform(0.0, 1.0, model.count)), dtype=float)


# --- autocorrelation ---------------------------------------------------------------


@dataclass(frozen=True)
class AutocorrConfig:
    params: PTParams
    f1: Window
    f0: Window
    N: int
    time_model: GridTimes | RandomTimes | None = None

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ParameterError(f"N must be an integer >= 1, got {self.N}")
        for f in (self.f1, self.f0):
            if f.support is None:
                raise ParameterError(f"window {f!r} is not compactly supported")


def _n_max(f: Window, N: int) -> int:
    return max(math.ceil(N * f.support[1]), 0)


def coefficient_profile(f: Window, N: int) -> np.ndarray:
    """|c_n|^2 = f(n/N)/N for n = 0 .. ceil(N sup supp f)."""
    if f.support is None:
        raise ParameterError("coefficient profiles need a compactly supported window")
    n = np.arange(_n_max(f, N) + 1)
    return np.asarray(f(n / N), dtype=float) / N


def _energies(p: PTParams, count: int) -> np.ndarray:
    return 0.5 * (2.0 * np.arange(count) + p.gamma) ** 2


def _trig_sums(weights: np.ndarray, energies: np.ndarray, t: np.ndarray) -> np.ndarray:
    """sum_n weights[k, n] exp(i E_n t) for every t, for each weight row k."""
    out = np.empty((weights.shape[0], t.size), dtype=complex)
    live = np.flatnonzero(np.any(weights != 0, axis=0))
    w, en = weights[:, live], energies[live]
    step = max(1, _CHUNK_TERMS // max(en.size, 1))
    for lo in range(0, t.size, step):
        ph = np.exp(1j * np.outer(t[lo : lo + step], en))
        out[:, lo : lo + step] = (ph @ w.T).T
    return out


def autocorrelation_batch(cfg: AutocorrConfig, t) -> tuple[np.ndarray, np.ndarray]:
    """(A_N^(1)(t), A_N^(0)(t)) for an array of times."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    c1, c0 = coefficient_profile(cfg.f1, cfg.N), coefficient_profile(cfg.f0, cfg.N)
    m = max(c1.size, c0.size)
    weights = np.zeros((2, m))
    weights[0, : c1.size], weights[1, : c0.size] = c1, c0
    sums = _trig_sums(weights, _energies(cfg.params, m), t)
    return sums[0], sums[1]


def autocorrelation(cfg: AutocorrConfig, t: float) -> tuple[complex, complex]:
    a1, a0 = autocorrelation_batch(cfg, [t])
    return complex(a1[0]), complex(a0[0])


def rescaled_X_batch(cfg: AutocorrConfig, t) -> tuple[np.ndarray, np.ndarray]:
    a1, a0 = autocorrelation_batch(cfg, t)
    s = math.sqrt(cfg.N)
    return s * a1, s * a0


def rescaled_X(cfg: AutocorrConfig, t: float) -> tuple[complex, complex]:
    x1, x0 = rescaled_X_batch(cfg, [t])
    return complex(x1[0]), complex(x0[0])
