"""Jacobi theta functions on the Jacobi group and the lattice Gamma.

Coordinates (x + iy, phi; xi1, xi2, zeta) with

    Theta_f(g) = y^(1/4) e(zeta - xi1 xi2 / 2) sum_n f_phi((n - xi2) sqrt(y)) e((n - xi2)^2 x / 2 + n xi1),

e(t) = exp(2 pi i t).  Generator actions (left multiplication by gamma_i):

    g1: z -> -1/z, phi -> phi + arg z, (xi1, xi2) -> (-xi2, xi1), zeta -> zeta + 1/8
    g2: z -> z + 1, xi1 -> xi1 + xi2 + 1/2, zeta -> zeta + xi2/4
    g3: xi1 -> xi1 + 1, zeta -> zeta + xi2/2
    g4: xi2 -> xi2 + 1, zeta -> zeta - xi1/2
    g5: zeta -> zeta + 1

Indicator windows at general phi have rotated windows decaying only like
1/|w|, so the lattice sum converges conditionally.  They are evaluated by
first moving g along its Gamma-orbit until the rotation angle is close to
0 mod pi (a continued-fraction expansion of the backward geodesic endpoint
x + y cot(phi)); there the rotated window is the indicator plus tails of
size sqrt(|sin phi|) / |w|.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import AccuracyError, ParameterError, ReductionError
from .windows import GaussianBump, HermiteBasis, Indicator, Window, rotated_window

MAX_REDUCTION_STEPS = 1000
HAAR_ACCEPTANCE = (math.pi / 3) / (2 / math.sqrt(3))  # mu(F)/area of the strip part
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class GroupPoint:
    x: float
    y: float
    phi: float
    xi1: float
    xi2: float
    zeta: float

    def __post_init__(self):
        if not self.y > 0:
            raise ParameterError(f"need y > 0, got {self.y}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    def in_fundamental_domain(self) -> bool:
        return (
            -0.5 <= self.x < 0.5
            and self.x * self.x + self.y * self.y >= 1.0
            and 0.0 <= self.phi < math.pi
            and -0.5 <= self.xi1 < 0.5
            and -0.5 <= self.xi2 < 0.5
            and -0.5 <= self.zeta < 0.5
        )


@dataclass(frozen=True)
class ThetaPair:
    theta1: complex
    theta0: complex


def e(t):
    return np.exp(TWO_PI * 1j * t)


# --- group actions -------------------------------------------------------------


def _atan2(y, x):
    # coordinates may be mpmath numbers (exact_point); keep their precision
    return math.atan2(y, x) if isinstance(x, float) and isinstance(y, float) else x.context.atan2(y, x)


def _inv(g: GroupPoint):
    r2 = g.x * g.x + g.y * g.y
    return -g.x / r2, g.y / r2


def _g1(g: GroupPoint) -> GroupPoint:
    wx, wy = _inv(g)
    return GroupPoint(wx, wy, g.phi + _atan2(g.y, g.x), -g.xi2, g.xi1, g.zeta + 0.125)


def _g1_inv(g: GroupPoint) -> GroupPoint:
    wx, wy = _inv(g)
    return GroupPoint(wx, wy, g.phi - _atan2(wy, wx), g.xi2, -g.xi1, g.zeta - 0.125)


def exact_point(g: GroupPoint) -> GroupPoint:
    """g with multiprecision coordinates, so generator actions do not round.

    Indicator thetas are rough functions of g (a one-ulp change of x moves
    them by ~1e-5), so invariance checks at that level need exact actions.
    """
    mp = _mp()
    return GroupPoint(*(mp.mpf(getattr(g, k)) for k in _FIELDS))


def _g2_pow(g: GroupPoint, k: int) -> GroupPoint:
    return replace(g, x=g.x + k, xi1=g.xi1 + k * (g.xi2 + 0.5), zeta=g.zeta + k * g.xi2 / 4)


def _g3_pow(g: GroupPoint, k: int) -> GroupPoint:
    return replace(g, xi1=g.xi1 + k, zeta=g.zeta + k * g.xi2 / 2)


def _g4_pow(g: GroupPoint, k: int) -> GroupPoint:
    return replace(g, xi2=g.xi2 + k, zeta=g.zeta - k * g.xi1 / 2)


def _g5_pow(g: GroupPoint, k: int) -> GroupPoint:
    return replace(g, zeta=g.zeta + k)


def apply_generator(i: int, g: GroupPoint, power: int = 1) -> GroupPoint:
    """gamma_i^power . g for power in {1, -1} (any integer for i = 2..5)."""
    if i == 1:
        if power == 1:
            return _g1(g)
        if power == -1:
            return _g1_inv(g)
        out = g
        for _ in range(abs(power)):
            out = _g1(out) if power > 0 else _g1_inv(out)
        return out
    if i == 2:
        return _g2_pow(g, power)
    if i == 3:
        return _g3_pow(g, power)
    if i == 4:
        return _g4_pow(g, power)
    if i == 5:
        return _g5_pow(g, power)
    raise ParameterError(f"generator index must be 1..5, got {i}")


def _box(v: float) -> int:
    """k with v - k in [-1/2, 1/2)."""
    return math.floor(v + 0.5)


def reduce_heisenberg(g: GroupPoint) -> GroupPoint:
    """Move phi into [0, pi) with gamma1^2, then xi and zeta into their boxes."""
    m = math.floor(g.phi / math.pi)
    if m:
        sign = -1.0 if m % 2 else 1.0
        g = replace(g, phi=g.phi - m * math.pi, xi1=sign * g.xi1, xi2=sign * g.xi2, zeta=g.zeta - m / 4)
        if g.phi >= math.pi:  # tiny negative phi rounds to pi; one more gamma1^2 step
            g = replace(g, phi=g.phi - math.pi, xi1=-g.xi1, xi2=-g.xi2, zeta=g.zeta - 0.25)
    g = _g4_pow(g, -_box(g.xi2))
    g = _g3_pow(g, -_box(g.xi1))
    return _g5_pow(g, -_box(g.zeta))


def reduce_to_fundamental(g: GroupPoint, max_steps: int = MAX_REDUCTION_STEPS) -> GroupPoint:
    """A representative of Gamma g in the fundamental domain."""
    for _ in range(max_steps):
        g = _g2_pow(g, -_box(g.x))
        if g.x * g.x + g.y * g.y >= 1.0:
            break
        g = _g1(g)
    else:
        raise ReductionError(f"modular reduction did not finish in {max_steps} steps")
    return reduce_heisenberg(g)


def reduce_rotation(g: GroupPoint, sin_target: float, max_steps: int = MAX_REDUCTION_STEPS):
    """Move g within its Gamma-orbit until |sin phi| <= sin_target.

    The backward geodesic endpoint X = x + y cot(phi) transforms as
    X -> X + 1 under gamma2 and X -> -1/X under gamma1, so alternating
    gamma2^(-round X) and gamma1 runs its continued fraction; |X| grows and
    the direction at the point turns towards phi = 0 mod pi.
    """
    steps = 0
    while abs(math.sin(g.phi)) > sin_target:
        if steps >= max_steps:
            raise ReductionError(f"rotation reduction did not finish in {max_steps} steps")
        big_x = g.x + g.y * math.cos(g.phi) / math.sin(g.phi)
        g = _g2_pow(g, -round(big_x))
        g = _g1(g)
        steps += 1
    # phi into (-pi/2, pi/2] keeps cos(phi) > 0
    m = round(g.phi / math.pi)
    if m:
        sign = -1.0 if m % 2 else 1.0
        g = replace(g, phi=g.phi - m * math.pi, xi1=sign * g.xi1, xi2=sign * g.xi2, zeta=g.zeta - m / 4)
    g = _g4_pow(g, -_box(g.xi2))
    g = _g3_pow(g, -_box(g.xi1))
    return _g5_pow(g, -_box(g.zeta)), steps


# --- theta evaluation ------------------------------------------------------------


def _smooth_radius(f: Window, phi: float, tol: float) -> tuple[float, float]:
    """Interval in w outside which |f_phi(w)| is below tol (smooth windows)."""
    if isinstance(f, HermiteBasis):
        r = math.sqrt((2 * f.k + 1) / TWO_PI) + math.sqrt(max(-math.log(tol), 1.0) / math.pi) + 1.0
        return -r, r
    if isinstance(f, GaussianBump):
        # |f_phi(t)| is a Gaussian in t with center m cos(phi) / |...| and
        # width sqrt(cos^2 w^2 + sin^2 / w^2); bound both generously
        s, c = abs(math.sin(phi)), abs(math.cos(phi))
        width = math.sqrt(c * c * f.width**2 + s * s / f.width**2)
        centre_bound = abs(f.center) * max(1.0, 1.0 / f.width**2)
        r = centre_bound + width * (math.sqrt(max(-math.log(tol), 1.0) / math.pi) + 1.0)
        return -r, r
    raise ParameterError(f"no smooth truncation rule for {type(f).__name__}")


def _lattice_terms(f_vals, n, xi2, x, xi1):
    return f_vals * e(0.5 * (n - xi2) ** 2 * x + n * xi1)


def _prefactor(g: GroupPoint) -> complex:
    return g.y**0.25 * complex(e(g.zeta - 0.5 * g.xi1 * g.xi2))


def _n_range(lo: float, hi: float, xi2: float, sy: float):
    n0 = math.ceil(xi2 + lo / sy)
    n1 = math.floor(xi2 + hi / sy)
    return np.arange(n0, n1 + 1, dtype=float)


def theta_direct(f: Window, g: GroupPoint, w_lo: float, w_hi: float, tol: float = 1e-10) -> complex:
    """Truncated lattice sum over (n - xi2) sqrt(y) in [w_lo, w_hi]."""
    sy = math.sqrt(g.y)
    n = _n_range(w_lo, w_hi, g.xi2, sy)
    if n.size > 50_000_000:
        raise AccuracyError("theta sum too long", terms=int(n.size))
    total = 0j
    for chunk in np.array_split(n, max(1, n.size // 1_000_000)):
        w = (chunk - g.xi2) * sy
        fv = rotated_window(f, g.phi, w, tol=max(tol, 1e-10))
        total += complex(np.sum(_lattice_terms(fv, chunk, g.xi2, g.x, g.xi1)))
    return _prefactor(g) * total


def _theta_phi_zero(f: Window, g: GroupPoint) -> complex:
    """Exact finite sum when phi = 0 mod pi and f is compactly supported."""
    m = round(g.phi / math.pi)
    a, b = f.support
    sign = -1 if m % 2 else 1
    lo, hi = (a, b) if sign > 0 else (-b, -a)
    sy = math.sqrt(g.y)
    n = _n_range(lo, hi, g.xi2, sy)
    w = (n - g.xi2) * sy
    fv = (-1j) ** (m % 4) * f(sign * w)
    return _prefactor(g) * complex(np.sum(_lattice_terms(fv, n, g.xi2, g.x, g.xi1)))



# --- indicator windows at general phi ----------------------------------------------
#
# After reduce_rotation the point has |sin phi| = d tiny and y ~ 5 d, so the
# lattice phases n^2 x / 2 and the tail phases pi t^2 cot(d) are of size 1/d.
# Double precision would leave ~1e-16/d radians of error in every term.  The
# reduction is therefore carried out in multiprecision (inputs taken as exact),
# and each phase is written as Q2 n^2 + Q1 n + Q0 with coefficients reduced
# mod 1 before evaluation in extended precision.

_MP_DPS = 60
# largest lattice sum attempted by the scalar indicator path
MAX_TERMS = 20_000_000


@dataclass(frozen=True)
class IndicatorPlan:
    """Rotation target and tail radius for an indicator theta evaluation."""

    sin_target: float
    tail_radius: float

    @classmethod
    def for_tol(cls, tol: float, length: float) -> "IndicatorPlan":
        # RMS tail error ~ sqrt(d / (2 pi^2 R)) and cost ~ (length + 2R) / sqrt(d),
        # balanced at R ~ length / 2; a 3-sigma margin sets d
        radius = max(0.5 * length, 0.5)
        sin_target = min(2 * math.pi**2 * tol * tol * radius / 9.0, 0.5)
        return cls(sin_target, radius)

    def expected_terms(self, length: float) -> float:
        # reduced points have y ~ 5 |sin phi|
        return (length + 2 * self.tail_radius) / math.sqrt(5 * self.sin_target)


def _mp():
    import mpmath

    ctx = mpmath.mp.clone()
    ctx.dps = _MP_DPS
    return ctx


def _rotation_path_mp(g: GroupPoint, sin_target: float, max_steps: int = MAX_REDUCTION_STEPS):
    """Every point visited by reduce_rotation, in multiprecision with exact inputs."""
    mp = _mp()
    x, y, phi = mp.mpf(g.x), mp.mpf(g.y), mp.mpf(g.phi)
    xi1, xi2, zeta = mp.mpf(g.xi1), mp.mpf(g.xi2), mp.mpf(g.zeta)
    half = mp.mpf(0.5)
    path = [(x, y, phi, xi1, xi2, zeta)]
    while abs(mp.sin(phi)) > sin_target:
        if len(path) > max_steps:
            raise ReductionError(f"rotation reduction did not finish in {max_steps} steps")
        k = -int(mp.nint(x + y * mp.cot(phi)))
        x, xi1, zeta = x + k, xi1 + k * (xi2 + half), zeta + k * xi2 / 4
        r2 = x * x + y * y
        phi = phi + mp.atan2(y, x)
        x, y = -x / r2, y / r2
        xi1, xi2, zeta = -xi2, xi1, zeta + mp.mpf(0.125)
        path.append((x, y, phi, xi1, xi2, zeta))
    return mp, path


def _normalise_mp(mp, state) -> dict:
    """Bring phi into (-pi/2, pi/2] and xi into [-1/2, 1/2)^2 without moving the orbit point."""
    x, y, phi, xi1, xi2, zeta = state
    half = mp.mpf(0.5)
    m = int(mp.nint(phi / mp.pi))
    if m:
        sign = -1 if m % 2 else 1
        phi, xi1, xi2, zeta = phi - m * mp.pi, sign * xi1, sign * xi2, zeta - mp.mpf(m) / 4
    k = -int(mp.floor(xi2 + half))
    xi2, zeta = xi2 + k, zeta - k * xi1 / 2
    k = -int(mp.floor(xi1 + half))
    xi1, zeta = xi1 + k, zeta + k * xi2 / 2
    return dict(x=x, y=y, phi=phi, xi1=xi1, xi2=xi2, zeta=zeta)


_TWO64 = 2.0**64


def _fixed(q) -> np.uint64:
    """A phase in cycles as a 64-bit fixed-point fraction of a turn."""
    return np.uint64(int(q * (1 << 64)) % (1 << 64))


def _fixed_array(q):
    q = q - np.floor(q)
    # two 32-bit halves keep the full 64 bits of the double's fraction
    hi = np.floor(q * 2.0**32)
    lo = np.round((q * 2.0**32 - hi) * 2.0**32)
    return (hi.astype(np.uint64) << np.uint64(32)) + lo.astype(np.uint64)


def _cycles(n, q2, q1):
    """(q2 n^2 + q1 n) mod 1 with wrap-around uint64 arithmetic, as float64."""
    nu = n.view(np.uint64)
    with np.errstate(over="ignore"):
        ph = nu * nu * q2 + nu * q1
    return ph.astype(np.float64) / _TWO64


def _reduced_terms(a: float, b: float, n, c: dict):
    """Lattice terms of an indicator theta at a reduced point, prefactor excluded.

    ``n`` holds the lattice indices as int64; every entry of ``c`` is a scalar
    or an array aligned with ``n``.  Phases are in cycles, Q2 n^2 + Q1 n + Q0,
    with Q2 and Q1 held as 64-bit fixed-point fractions of a turn.  For a
    negative reduced angle the window is the complex conjugate, which enters
    through ``sg`` multiplying every imaginary part.
    """
    from scipy.special import fresnel

    from .windows import _fresnel_aux

    t = (n.astype(np.float64) - c["xi2"]) * c["sy"]
    sg = c["sg"]
    smooth = np.zeros(t.shape, dtype=complex)
    osc = np.zeros(t.shape, dtype=complex)
    for edge, s_e, q1, q0 in ((b, 1.0, c["q1b"], c["q0b"]), (a, -1.0, c["q1a"], c["q0a"])):
        v = c["scale"] * (edge - t / c["cos"])
        av = np.abs(v)
        sv = s_e * np.sign(v)
        # large |v|: C + iS -> sgn(v) [(1+i)/2 - (g + i f) e(v^2/4)]; the (1+i)/2
        # limits cancel exactly between edges on the same side
        fa, ga = _fresnel_aux(np.maximum(av, 40.0))
        near = np.flatnonzero(av < 40.0)
        if near.size:
            fa_n, ga_n = _fresnel_aux(np.maximum(av[near], 5.0))
            fa[near], ga[near] = fa_n, ga_n
        smooth += sv * (0.5 + 0.5j * sg)
        osc_e = sv * (ga + 1j * sg * fa) * e(_cycles(n, c["q2"], q1) + q0)
        small = np.flatnonzero(av < 5.0)
        if small.size:
            fs, fc = fresnel(v[small])
            sg_s = _take(sg, small)
            smooth[small] += s_e * (fc + 1j * sg_s * fs) - sv[small] * (0.5 + 0.5j * sg_s)
            osc_e[small] = 0.0
        osc -= osc_e
    inside = np.flatnonzero(smooth)
    if inside.size:
        cyc = _cycles(n[inside], _take(c["qA"], inside), _take(c["qB"], inside))
        cyc = cyc - 0.5 * _take(sg, inside) * t[inside] ** 2 * _take(c["tan"], inside)
        smooth[inside] *= e(cyc)
    return smooth + osc


def _take(v, mask):
    return v if np.ndim(v) == 0 else v[mask]


def _reduced_coeffs(mp, r: dict, a: float, b: float):
    """Phase coefficients and prefactor of the reduced indicator sum (scalar, precise)."""
    x, y, phi, xi1, xi2, zeta = (r[k] for k in ("x", "y", "phi", "xi1", "xi2", "zeta"))
    sg = 1.0 if phi > 0 else -1.0
    d = abs(phi)
    sd, cd = mp.sin(d), mp.cos(d)
    cot = cd / sd
    sy = mp.sqrt(y)
    ycot = y * cot

    def fixed(v):
        return _fixed(mp.mpf(v) - mp.floor(v))

    c = dict(
        xi2=float(xi2), sy=float(sy), sg=sg, cos=float(cd), tan=float(sd / cd),
        scale=math.sqrt(2 * float(cot)),
        qA=fixed(x / 2), qB=fixed(xi1 - xi2 * x), q2=fixed(x / 2 + sg * ycot / 2),
    )
    for name, edge in (("a", a), ("b", b)):
        em = mp.mpf(edge)
        c["q1" + name] = fixed(xi1 - xi2 * x + sg * (-xi2 * ycot - em * sy / sd))
        q0 = sg * (xi2 * xi2 * ycot + em * em * cot + 2 * em * xi2 * sy / sd) / 2
        c["q0" + name] = float(q0 - mp.floor(q0))
    pref = complex(mp.expjpi(2 * (zeta - xi1 * xi2 / 2 + xi2 * xi2 * x / 2))) * float(y ** mp.mpf(0.25))
    pref *= np.exp(-0.25j * math.pi * sg) / math.sqrt(2 * float(cd))
    return c, pref


# points past sin_target are not worth considering further up the path
_CANDIDATE_SIN = 1e-3


def _cheapest_reduction(g: GroupPoint, plan: IndicatorPlan, length: float):
    """The cheapest point on the reduction path that meets the plan's error level.

    The tail error scales like sqrt(|sin phi| / R), so a point with |sin phi| = s
    needs radius R s / sin_target to match the plan.  A large partial quotient in
    the last step can drive s far below the target and y with it; an earlier
    point with a wider tail is then much cheaper.
    """
    mp, path = _rotation_path_mp(g, plan.sin_target)
    best = None
    for k, state in enumerate(path):
        s = float(abs(mp.sin(state[2])))
        if s == 0.0:
            return mp, _normalise_mp(mp, state), plan.tail_radius
        if s > _CANDIDATE_SIN and k < len(path) - 1:
            continue
        radius = plan.tail_radius * max(1.0, s / plan.sin_target)
        cost = (length + 2 * radius) / math.sqrt(float(state[1]))
        if best is None or cost < best[0]:
            best = (cost, state, radius)
    return mp, _normalise_mp(mp, best[1]), best[2]


def theta_indicator(f: Indicator, g: GroupPoint, plan: IndicatorPlan, chunk: int = 1 << 20) -> complex:
    """Theta for an indicator window at arbitrary phi via rotation reduction."""
    if math.sin(g.phi) == 0.0:
        return _theta_phi_zero(f, g)
    mp, r, radius = _cheapest_reduction(g, plan, f.b - f.a)
    if r["phi"] == 0:
        gr = GroupPoint(*(float(r[k]) for k in ("x", "y", "phi", "xi1", "xi2", "zeta")))
        return _theta_phi_zero(f, gr)
    c, pref = _reduced_coeffs(mp, r, f.a, f.b)
    n_all = _n_range(f.a - radius, f.b + radius, c["xi2"], c["sy"])
    if n_all.size > MAX_TERMS:
        raise AccuracyError("indicator theta needs too many terms", terms=int(n_all.size))
    total = 0j
    for lo in range(0, n_all.size, chunk):
        n = n_all[lo : lo + chunk].astype(np.int64)
        total += complex(np.sum(_reduced_terms(f.a, f.b, n, c)))
    return pref * total


# --- batches --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupBatch:
    """Structure-of-arrays form of many group points."""

    x: np.ndarray
    y: np.ndarray
    phi: np.ndarray
    xi1: np.ndarray
    xi2: np.ndarray
    zeta: np.ndarray

    def __len__(self):
        return self.x.size

    def point(self, i: int) -> GroupPoint:
        return GroupPoint(*(float(getattr(self, k)[i]) for k in _FIELDS))

    @classmethod
    def from_points(cls, points) -> "GroupBatch":
        return cls(*(np.array([getattr(p, k) for p in points], dtype=float) for k in _FIELDS))


_FIELDS = ("x", "y", "phi", "xi1", "xi2", "zeta")


def sample_haar_batch(rng: np.random.Generator, count: int) -> GroupBatch:
    """``count`` points from the normalised Haar measure on the fundamental domain."""
    xs, ys = [], []
    need = count
    while need > 0:
        m = int(need / HAAR_ACCEPTANCE * 1.05) + 16
        x = rng.uniform(-0.5, 0.5, m)
        y = (math.sqrt(3) / 2) / (1.0 - rng.uniform(0.0, 1.0, m))
        keep = x * x + y * y >= 1.0
        xs.append(x[keep][:need])
        ys.append(y[keep][:need])
        need -= xs[-1].size
    x, y = np.concatenate(xs), np.concatenate(ys)
    phi = rng.uniform(0.0, math.pi, count)
    xi1 = rng.uniform(-0.5, 0.5, count)
    xi2 = rng.uniform(-0.5, 0.5, count)
    zeta = rng.uniform(-0.5, 0.5, count)
    return GroupBatch(x, y, phi, xi1, xi2, zeta)


def sample_haar(rng_seed, count: int | None = None):
    """One Haar point (count None) or a GroupBatch, from an explicit seed."""
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    batch = sample_haar_batch(rng, 1 if count is None else count)
    return batch.point(0) if count is None else batch


def haar_acceptance_rate(rng_seed, draws: int) -> float:
    """Fraction of strip proposals kept by the rejection step."""
    rng = np.random.default_rng(rng_seed)
    x = rng.uniform(-0.5, 0.5, draws)
    y = (math.sqrt(3) / 2) / (1.0 - rng.uniform(0.0, 1.0, draws))
    return float(np.mean(x * x + y * y >= 1.0))


def reduce_rotation_batch(gb: GroupBatch, sin_target: float, max_steps: int = 200) -> GroupBatch:
    """Vectorised reduce_rotation in double precision (moderate targets only)."""
    x, y, phi = gb.x.copy(), gb.y.copy(), gb.phi.copy()
    xi1, xi2, zeta = gb.xi1.copy(), gb.xi2.copy(), gb.zeta.copy()
    for _ in range(max_steps):
        act = np.flatnonzero(np.abs(np.sin(phi)) > sin_target)
        if act.size == 0:
            break
        xa, ya, pa = x[act], y[act], phi[act]
        k = -np.round(xa + ya / np.tan(pa))
        xa = xa + k
        x1 = xi1[act] + k * (xi2[act] + 0.5)
        z1 = zeta[act] + k * xi2[act] / 4
        r2 = xa * xa + ya * ya
        phi[act] = pa + np.arctan2(ya, xa)
        x[act], y[act] = -xa / r2, ya / r2
        xi1[act], xi2[act], zeta[act] = -xi2[act], x1, z1 + 0.125
    else:
        raise ReductionError(f"rotation reduction did not finish in {max_steps} steps")
    m = np.round(phi / math.pi)
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    phi, xi1, xi2, zeta = phi - m * math.pi, sign * xi1, sign * xi2, zeta - m / 4
    k = -np.floor(xi2 + 0.5)
    xi2, zeta = xi2 + k, zeta - k * xi1 / 2
    k = -np.floor(xi1 + 0.5)
    xi1, zeta = xi1 + k, zeta + k * xi2 / 2
    return GroupBatch(x, y, phi, xi1, xi2, zeta)


def _flat_ranges(lo, hi):
    """Concatenated integer ranges [lo_i, hi_i] with the owning index of each entry."""
    counts = np.maximum(hi - lo + 1, 0).astype(np.int64)
    owner = np.repeat(np.arange(lo.size), counts)
    starts = np.cumsum(counts) - counts
    n = lo.astype(np.int64)[owner] + (np.arange(counts.sum()) - starts[owner])
    return n, owner


def _chunks_by_terms(counts, max_terms):
    """Split sample indices into consecutive chunks of bounded total term count."""
    bounds = [0]
    acc = 0
    for i, c in enumerate(counts):
        if acc and acc + c > max_terms:
            bounds.append(i)
            acc = 0
        acc += c
    bounds.append(len(counts))
    return list(zip(bounds[:-1], bounds[1:]))


def _batch_indicator(f: Indicator, gr: GroupBatch, radius: float, max_terms: int) -> np.ndarray:
    """Indicator theta at already reduced points (|sin phi| small), float64 path."""
    a, b = f.a, f.b
    out = np.zeros(len(gr), dtype=complex)
    sg = np.where(gr.phi >= 0, 1.0, -1.0)
    d = np.abs(gr.phi)
    zero = d == 0.0
    if np.any(zero):
        for i in np.flatnonzero(zero):
            out[i] = _theta_phi_zero(f, gr.point(i))
    sd, cd = np.sin(d), np.cos(d)
    with np.errstate(divide="ignore"):
        cot = cd / sd
    sy = np.sqrt(gr.y)
    ycot = gr.y * cot
    x, xi1, xi2 = gr.x, gr.xi1, gr.xi2
    coeff = dict(
        xi2=xi2, sy=sy, sg=sg, cos=cd, tan=sd / cd, scale=np.sqrt(2 * cot),
        qA=_fixed_array(x / 2), qB=_fixed_array(xi1 - xi2 * x), q2=_fixed_array(x / 2 + sg * ycot / 2),
    )
    for name, edge in (("a", a), ("b", b)):
        coeff["q1" + name] = _fixed_array(xi1 - xi2 * x + sg * (-xi2 * ycot - edge * sy / sd))
        q0 = sg * (xi2 * xi2 * ycot + edge * edge * cot + 2 * edge * xi2 * sy / sd) / 2
        coeff["q0" + name] = q0 - np.floor(q0)
    pref = gr.y**0.25 * e(gr.zeta - 0.5 * xi1 * xi2 + 0.5 * xi2 * xi2 * x)
    pref = pref * np.exp(-0.25j * math.pi * sg) / np.sqrt(2 * cd)
    lo = np.ceil(xi2 + (a - radius) / sy)
    hi = np.floor(xi2 + (b + radius) / sy)
    live = np.flatnonzero(~zero)
    counts = np.maximum(hi[live] - lo[live] + 1, 0)
    for s0, s1 in _chunks_by_terms(counts, max_terms):
        idx = live[s0:s1]
        n, owner = _flat_ranges(lo[idx], hi[idx])
        if n.size == 0:
            continue
        c = {k: (v[idx][owner] if np.ndim(v) else v) for k, v in coeff.items()}
        terms = _reduced_terms(a, b, n, c)
        sums = np.bincount(owner, terms.real, idx.size) + 1j * np.bincount(owner, terms.imag, idx.size)
        out[idx] = pref[idx] * sums
    return out


def _batch_smooth(f: Window, gb: GroupBatch, tol: float, max_terms: int) -> np.ndarray:
    out = np.zeros(len(gb), dtype=complex)
    sy = np.sqrt(gb.y)
    bounds = np.array([_smooth_radius(f, p, tol) for p in gb.phi]) if isinstance(f, GaussianBump) else None
    if bounds is None:
        lo_w, hi_w = _smooth_radius(f, 0.0, tol)
        lo = np.ceil(gb.xi2 + lo_w / sy)
        hi = np.floor(gb.xi2 + hi_w / sy)
    else:
        lo = np.ceil(gb.xi2 + bounds[:, 0] / sy)
        hi = np.floor(gb.xi2 + bounds[:, 1] / sy)
    counts = np.maximum(hi - lo + 1, 0)
    for s0, s1 in _chunks_by_terms(counts, max_terms):
        idx = np.arange(s0, s1)
        n, owner = _flat_ranges(lo[idx], hi[idx])
        if n.size == 0:
            continue
        xi2 = gb.xi2[idx][owner]
        nf = n.astype(np.float64)
        w = (nf - xi2) * sy[idx][owner]
        fv = f.rotated(gb.phi[idx][owner], w)
        terms = fv * e(0.5 * (nf - xi2) ** 2 * gb.x[idx][owner] + nf * gb.xi1[idx][owner])
        sums = np.bincount(owner, terms.real, idx.size) + 1j * np.bincount(owner, terms.imag, idx.size)
        out[idx] = sums
    return out * gb.y**0.25 * e(gb.zeta - 0.5 * gb.xi1 * gb.xi2)


def theta_batch(f: Window, gb: GroupBatch, tol: float | None = None, max_terms: int = 2_000_000) -> np.ndarray:
    """Theta_f at every point of a batch.

    Smooth windows are summed directly.  Indicator windows go through the
    double-precision rotation reduction, which is adequate down to
    tol ~ 1e-3 (its phases lose about 1e-4); use ``theta`` for tighter tolerances.
    """
    if isinstance(f, (HermiteBasis, GaussianBump)):
        return _batch_smooth(f, gb, 1e-14 if tol is None else tol, max_terms)
    if isinstance(f, Indicator):
        tol = DEFAULT_BATCH_TOL if tol is None else tol
        if tol < 1e-3:
            raise ParameterError("batch indicator theta supports tol >= 1e-3; use theta()")
        plan = IndicatorPlan.for_tol(tol, f.b - f.a)
        gr = reduce_rotation_batch(gb, plan.sin_target)
        return _batch_indicator(f, gr, plan.tail_radius, max_terms)
    return np.array([theta(f, gb.point(i), tol) for i in range(len(gb))])


DEFAULT_BATCH_TOL = 3e-3
DEFAULT_INDICATOR_TOL = 1e-6


def theta(f: Window, g: GroupPoint, tol: float | None = None) -> complex:
    """Theta_f(g).

    ``tol`` is an absolute accuracy target: rigorous for smooth windows
    (tail of a Gaussian-type bound), a 3-sigma target for indicators, whose
    truncation error after rotation reduction behaves like a random walk.
    """
    if isinstance(f, (HermiteBasis, GaussianBump)):
        tol = 1e-14 if tol is None else tol
        lo, hi = _smooth_radius(f, g.phi, tol)
        return theta_direct(f, g, lo, hi, tol)
    if f.support is not None and math.sin(g.phi) == 0.0:
        return _theta_phi_zero(f, g)
    if isinstance(f, Indicator):
        tol = DEFAULT_INDICATOR_TOL if tol is None else tol
        plan = IndicatorPlan.for_tol(tol, f.b - f.a)
        if plan.expected_terms(f.b - f.a) > MAX_TERMS:
            raise AccuracyError(
                f"tol = {tol} needs about {plan.expected_terms(f.b - f.a):.3g} terms",
                expected_terms=plan.expected_terms(f.b - f.a),
            )
        return theta_indicator(f, g, plan)
    # other compactly supported windows: float reduction, kernel-evaluated window
    tol = 1e-3 if tol is None else tol
    a, b = f.support
    plan = IndicatorPlan.for_tol(tol, b - a)
    gr, _ = reduce_rotation(g, plan.sin_target)
    if math.sin(gr.phi) == 0.0:
        return _theta_phi_zero(f, gr)
    return theta_direct(f, gr, a - plan.tail_radius, b + plan.tail_radius)


def theta_pair(f1: Window, f0: Window, g: GroupPoint, tol: float | None = None) -> ThetaPair:
    t1 = theta(f1, g, tol)
    t0 = t1 if f0 == f1 else theta(f0, g, tol)
    return ThetaPair(t1, t0)


def theta_pair_batch(f1: Window, f0: Window, gb: GroupBatch, tol: float | None = None, max_terms: int = 2_000_000):
    if f0 != f1 and isinstance(f1, Indicator) and isinstance(f0, Indicator):
        # one reduction serves both windows
        tol = DEFAULT_BATCH_TOL if tol is None else tol
        if tol < 1e-3:
            raise ParameterError("batch indicator theta supports tol >= 1e-3; use theta()")
        plan = IndicatorPlan.for_tol(tol, max(f1.b - f1.a, f0.b - f0.a))
        gr = reduce_rotation_batch(gb, plan.sin_target)
        return (
            _batch_indicator(f1, gr, plan.tail_radius, max_terms),
            _batch_indicator(f0, gr, plan.tail_radius, max_terms),
        )
    t1 = theta_batch(f1, gb, tol)
    t0 = t1.copy() if f0 == f1 else theta_batch(f0, gb, tol)
    return t1, t0


# --- horocycle lift ------------------------------------------------------------------


def check_gamma(gamma: float, max_den: int = 100, tol: float = 1e-12) -> None:
    """Warn when gamma is numerically a rational with small denominator."""
    frac = Fraction(gamma).limit_denominator(max_den)
    if abs(float(frac) - gamma) <= tol:
        warnings.warn(
            f"gamma = {gamma!r} is rational ({frac}) to {tol}; the limit law assumes irrational gamma",
            stacklevel=2,
        )


def lift_time(t: float, N: int, gamma: float) -> GroupPoint:
    """(u, N^-2, 0; gamma u / 2, 0, gamma^2 u / 8) with u = 2 t / pi."""
    if N < 1:
        raise ParameterError("N must be >= 1")
    u = 2.0 * t / math.pi
    return GroupPoint(u, float(N) ** -2, 0.0, gamma * u / 2, 0.0, gamma * gamma * u / 8)
