"""Monte Carlo laws of theta pairs and X_N, tail and dependence diagnostics."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .autocorr import AutocorrConfig, Density, RandomTimes, rescaled_X_batch, sample_random_times
from .errors import AccuracyError, ParameterError
from .jacobi_theta import sample_haar_batch, theta_pair_batch
from .quadrature import composite_gauss_legendre, gauss_legendre
from .windows import Window, kappa_eta, rotated_window

CHUNK = 50_000
FAILURE_LIMIT = 1e-3
MIN_EXCEEDANCES = 20
MIN_DEPENDENCE_EXCEEDANCES = 100
HAAR_VOLUME = math.pi**2 / 3


@dataclass(frozen=True, eq=False)
class EmpiricalLaw:
    """Samples of (X1, X0) with the provenance needed to regenerate them."""

    samples: np.ndarray  # shape (count, 2), complex
    provenance: dict
    seed: int
    count: int = field(init=False)
    failures: int = 0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex).reshape(-1, 2)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "count", s.shape[0])

    @property
    def theta1(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def theta0(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def kind(self) -> str:
        return self.provenance["kind"]


def chunk_seeds(seed: int, count: int, chunk: int = CHUNK):
    """(chunk index, size, SeedSequence) for each chunk; independent of worker count."""
    out = []
    for c, lo in enumerate(range(0, count, chunk)):
        out.append((c, min(chunk, count - lo), np.random.SeedSequence([seed, c])))
    return out


def _map(fn, jobs, workers: int):
    # executor.map returns results in submission order, so merging is deterministic
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def _haar_chunk(job):
    f1, f0, size, ss, tol = job
    rng = np.random.default_rng(ss)
    gb = sample_haar_batch(rng, size)
    t1, t0 = theta_pair_batch(f1, f0, gb, tol)
    return np.stack([t1, t0], axis=1)


def sample_limit_law(
    f1: Window, f0: Window, count: int, seed: int, *, tol: float | None = None, workers: int = 1, chunk: int = CHUNK
) -> EmpiricalLaw:
    """count theta pairs at Haar-random points of the fundamental domain."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    jobs = [(f1, f0, size, ss, tol) for _, size, ss in chunk_seeds(seed, count, chunk)]
    samples = np.concatenate(_map(_haar_chunk, jobs, workers))
    bad = ~np.all(np.isfinite(samples), axis=1)
    failures = int(bad.sum())
    if failures > FAILURE_LIMIT * count:
        raise AccuracyError(f"{failures} of {count} theta evaluations failed", failures=failures)
    prov = dict(kind="haar_sampled", f1=repr(f1), f0=repr(f0), tol=tol, chunk=chunk)
    return EmpiricalLaw(samples[~bad], prov, seed, failures)


def _time_chunk(job):
    cfg, density, size, ss = job
    seed = int(ss.generate_state(1, np.uint64)[0])
    t = sample_random_times(RandomTimes(density, size, seed))
    x1, x0 = rescaled_X_batch(cfg, t)
    return np.stack([x1, x0], axis=1)


def sample_time_law(
    cfg: AutocorrConfig, density: Density, count: int, seed: int, *, workers: int = 1, chunk: int = CHUNK
) -> EmpiricalLaw:
    """X_N(t) at count random times t drawn from density."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    jobs = [(cfg, density, size, ss) for _, size, ss in chunk_seeds(seed, count, chunk)]
    samples = np.concatenate(_map(_time_chunk, jobs, workers))
    prov = dict(
        kind="time_sampled", N=cfg.N, density=repr(density), gamma=cfg.params.gamma,
        f1=repr(cfg.f1), f0=repr(cfg.f0), chunk=chunk,
    )
    return EmpiricalLaw(samples, prov, seed)


# --- the tail constant ------------------------------------------------------------------


def d_constant(f: Window, *, w_max: float = 12.0, n_phi: int = 48, panels: int = 96, tol: float = 1e-10) -> float:
    """D(f) = int_0^pi int_R |f_phi(w)|^6 dw dphi by tensor Gauss-Legendre.

    The tail |w| > w_max is bounded through kappa_eta with eta = 4, and the
    quadrature error by comparing against a grid with twice the nodes.
    """
    if f.decay_class_eta <= 1.0:
        raise ParameterError("D(f) needs a smooth window (eta > 1)")

    def integrate(n_phi, panels):
        phi, wp = gauss_legendre(n_phi, 0.0, math.pi)
        w, ww = composite_gauss_legendre(16, np.linspace(-w_max, w_max, panels + 1))
        fv = f.rotated(phi[:, None], w[None, :])
        if fv is None:
            fv = rotated_window(f, phi[:, None], w[None, :], tol=1e-10)
        vals = np.abs(fv) ** 6
        return float(wp @ vals @ ww)

    value = integrate(n_phi, panels)
    check = integrate(2 * n_phi, 2 * panels)
    eta = 4.0
    kap = kappa_eta(f, eta, w_max=w_max).value
    tail = 2 * math.pi * kap**6 * (1 + w_max) ** (1 - 6 * eta) / (6 * eta - 1)
    err = abs(value - check) + tail
    if err > tol * max(1.0, abs(value)):
        raise AccuracyError(f"D(f) quadrature error {err:.3g} exceeds {tol}", estimate=err, value=value)
    return check


def predicted_tail(d: float, radii) -> np.ndarray:
    """Normalised-measure tail (2 D / pi^2) R^-6."""
    return 2.0 * d / math.pi**2 * np.asarray(radii, dtype=float) ** -6


# --- tails -------------------------------------------------------------------------------


@dataclass(frozen=True)
class TailReport:
    radii: list
    empirical_probs: list
    predicted: list | None
    d_constant: float | None
    ci_low: list
    ci_high: list
    exceedances: list
    unreliable: list
    component: int
    count: int


def _component(law: EmpiricalLaw, component: int) -> np.ndarray:
    if component not in (0, 1):
        raise ParameterError("component must be 1 or 0")
    return law.theta1 if component == 1 else law.theta0


def wilson_interval(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    ci = sps.binomtest(int(k), int(n)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def tail_report(law: EmpiricalLaw, f: Window | None, radii, component: int = 1) -> TailReport:
    """Empirical P(|Theta| > R) with Wilson intervals, next to (2 D(f) / pi^2) R^-6."""
    if law.kind != "haar_sampled":
        raise ParameterError("tail_report needs a Haar-sampled law")
    radii = [float(r) for r in radii]
    mod = np.abs(_component(law, component))
    k = [int(np.count_nonzero(mod > r)) for r in radii]
    n = law.count
    ci = [wilson_interval(ki, n) for ki in k]
    smooth = f is not None and f.decay_class_eta > 1.0
    d = d_constant(f) if smooth else None
    return TailReport(
        radii=radii,
        empirical_probs=[ki / n for ki in k],
        predicted=predicted_tail(d, radii).tolist() if smooth else None,
        d_constant=d,
        ci_low=[c[0] for c in ci],
        ci_high=[c[1] for c in ci],
        exceedances=k,
        unreliable=[ki < MIN_EXCEEDANCES for ki in k],
        component=component,
        count=n,
    )


def tail_slope(law: EmpiricalLaw, r_lo: float, r_hi: float, points: int = 7, component: int = 1) -> float:
    """Least-squares slope of log P(|Theta| > R) against log R on [r_lo, r_hi]."""
    radii = np.geomspace(r_lo, r_hi, points)
    mod = np.abs(_component(law, component))
    p = np.array([np.count_nonzero(mod > r) for r in radii]) / law.count
    if np.any(p == 0):
        raise AccuracyError("no exceedances at some radius; cannot fit the tail slope")
    return float(np.polyfit(np.log(radii), np.log(p), 1)[0])


# --- distribution comparisons ---------------------------------------------------------------

FUNCTIONALS = {
    "abs1": lambda s: np.abs(s[:, 0]),
    "abs0": lambda s: np.abs(s[:, 1]),
    "re1": lambda s: s[:, 0].real,
    "im1": lambda s: s[:, 0].imag,
    "re0": lambda s: s[:, 1].real,
    "im0": lambda s: s[:, 1].imag,
    "abs_sum": lambda s: np.abs(s[:, 0]) + np.abs(s[:, 1]),
}


def ks_distance(law_a: EmpiricalLaw, law_b: EmpiricalLaw, functional: str = "abs1") -> float:
    """Two-sample Kolmogorov-Smirnov statistic of a real functional of the samples."""
    if law_a.count == 0 or law_b.count == 0:
        raise ParameterError("KS distance needs nonempty laws")
    try:
        fn = FUNCTIONALS[functional]
    except KeyError:
        raise ParameterError(f"unknown functional {functional!r}; choose from {sorted(FUNCTIONALS)}") from None
    return float(sps.ks_2samp(fn(law_a.samples), fn(law_b.samples)).statistic)


@dataclass(frozen=True)
class DependenceReport:
    R: float
    joint: float
    product: float
    ratio: float
    ratio_se: float
    z_score: float
    corr_sq_moduli: float
    exceed1: int
    exceed0: int
    unreliable: bool


def dependence_report(law: EmpiricalLaw, R: float) -> DependenceReport:
    """Joint against product exceedance of (|Theta1|, |Theta0|) beyond R.

    The standard error of joint/product comes from its influence function,
    ratio * (ab / p10 - a / p1 - b / p0 + 1) for indicators a, b.
    """
    a = (np.abs(law.theta1) > R).astype(float)
    b = (np.abs(law.theta0) > R).astype(float)
    n = law.count
    p1, p0, p10 = a.mean(), b.mean(), (a * b).mean()
    product = p1 * p0
    ratio = p10 / product if product > 0 else math.nan
    if p10 > 0:
        infl = ratio * (a * b / p10 - a / p1 - b / p0 + 1.0)
        se = float(np.std(infl) / math.sqrt(n))
    else:
        se = math.nan
    z = (ratio - 1.0) / se if se > 0 else math.nan
    m1, m0 = np.abs(law.theta1) ** 2, np.abs(law.theta0) ** 2
    corr = float(np.corrcoef(m1, m0)[0, 1]) if np.std(m1) > 0 and np.std(m0) > 0 else math.nan
    k1, k0 = int(a.sum()), int(b.sum())
    return DependenceReport(
        R=float(R), joint=float(p10), product=float(product), ratio=float(ratio), ratio_se=se,
        z_score=float(z), corr_sq_moduli=corr, exceed1=k1, exceed0=k0,
        unreliable=min(k1, k0) < MIN_DEPENDENCE_EXCEEDANCES,
    )


def moment_growth(law: EmpiricalLaw, p: float, fractions=(0.01, 0.1, 1.0), component: int = 1) -> list[float]:
    """E|Theta|^p over growing prefixes of the sample; grows without bound when p >= 6."""
    mod = np.abs(_component(law, component))
    return [float(np.mean(mod[: max(1, int(q * law.count))] ** p)) for q in fractions]


def mean_test(law: EmpiricalLaw, component: int = 1) -> tuple[complex, float]:
    """Sample mean of a component and its standard error."""
    v = _component(law, component)
    return complex(v.mean()), float(np.std(v) / math.sqrt(v.size))
