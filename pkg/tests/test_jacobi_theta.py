import cmath
import math
import warnings

import numpy as np
import pytest
from scipy import integrate
from scipy import stats as sps

from susypt.autocorr import Triangular
from susypt.errors import AccuracyError, ParameterError, ReductionError
from susypt.jacobi_theta import (
    HAAR_ACCEPTANCE,
    GroupBatch,
    GroupPoint,
    IndicatorPlan,
    apply_generator,
    check_gamma,
    exact_point,
    haar_acceptance_rate,
    lift_time,
    reduce_rotation,
    reduce_to_fundamental,
    sample_haar,
    theta,
    theta_batch,
    theta_indicator,
    theta_pair,
    theta_pair_batch,
)
from susypt.windows import GaussianBump, HermiteBasis, Indicator, TableFn

ORIGIN = GroupPoint(0.0, 1.0, 0.0, 0.0, 0.0, 0.0)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1.0)


def test_theta_hermite0_at_origin():
    n = np.arange(-10, 11)
    oracle = 2**0.25 * np.sum(np.exp(-math.pi * n * n))
    got = theta(HermiteBasis(0), ORIGIN)
    assert abs(got - oracle) < 1e-14
    assert abs(got - 1.2920) < 1e-4


@pytest.mark.parametrize("f", [HermiteBasis(1), Indicator(0, 1), GaussianBump(0.2, 0.5)], ids=repr)
def test_zeta_shift_is_a_phase(f):
    g = GroupPoint(0.3, 0.7, 1.1, 0.2, -0.1, 0.05)
    s = 0.2137
    shifted = GroupPoint(g.x, g.y, g.phi, g.xi1, g.xi2, g.zeta + s)
    assert abs(theta(f, shifted, 1e-5) - cmath.exp(2j * math.pi * s) * theta(f, g, 1e-5)) < 1e-12


def test_empty_support_gives_zero():
    g = GroupPoint(0.0, 100.0, 0.0, 0.0, 0.0, 0.0)
    assert theta(Indicator(0.2, 0.8), g) == 0


def test_gamma1_at_identity():
    assert apply_generator(1, ORIGIN) == GroupPoint(0.0, 1.0, math.pi / 2, 0.0, 0.0, 0.125)


def test_gamma5_twice():
    g = GroupPoint(0.1, 1.3, 0.4, 0.2, 0.3, 0.1)
    g2 = apply_generator(5, apply_generator(5, g))
    assert g2.zeta == pytest.approx(g.zeta + 2)
    f = HermiteBasis(2)
    assert abs(theta(f, g2) - theta(f, g)) < 1e-12


@pytest.mark.parametrize("i", [1, 2, 3, 4, 5])
def test_generator_inverse(i):
    g = GroupPoint(0.31, 0.8, 2.0, 0.13, -0.4, 0.2)
    back = apply_generator(i, apply_generator(i, g), -1)
    for k in ("x", "y", "phi", "xi1", "xi2", "zeta"):
        assert getattr(back, k) == pytest.approx(getattr(g, k), abs=1e-14)


def test_generator_index_checked():
    with pytest.raises(ParameterError):
        apply_generator(6, ORIGIN)
    with pytest.raises(ParameterError):
        GroupPoint(0, 0, 0, 0, 0, 0)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_invariance_hermite(k):
    rng = np.random.default_rng(100 + k)
    f = HermiteBasis(k)
    for _ in range(10):
        g = sample_haar(rng)
        ref = theta(f, g)
        for i in range(1, 6):
            assert _rel(theta(f, apply_generator(i, g)), ref) < 1e-8


def test_invariance_gaussian_and_table():
    rng = np.random.default_rng(7)
    g = sample_haar(rng)
    f = GaussianBump(0.3, 0.6)
    ref = theta(f, g)
    for i in range(1, 6):
        assert _rel(theta(f, apply_generator(i, g)), ref) < 1e-8
    # piecewise-linear windows go through rotation reduction; tol is a 3-sigma target
    f = TableFn([0.0, 0.5, 1.0], [0.0, 1.0, 0.0])
    ref = theta(f, g, 1e-5)
    for i in range(1, 6):
        assert abs(theta(f, apply_generator(i, g), 1e-5) - ref) < 1e-4


def test_invariance_indicator_exact_actions():
    rng = np.random.default_rng(11)
    f = Indicator(0.0, 1.0)
    g = exact_point(sample_haar(rng))
    plan_a = IndicatorPlan.for_tol(2e-6, 1.0)
    plan_b = IndicatorPlan(plan_a.sin_target, 1.0)
    ref = theta_indicator(f, g, plan_a)
    for i in range(1, 6):
        assert _rel(theta_indicator(f, apply_generator(i, g), plan_b), ref) < 1e-5


def test_indicator_poisson_oracle():
    # at x = 0, phi = pi/2 Poisson summation turns the rotated sum into a finite one
    rng = np.random.default_rng(3)
    f = Indicator(0.0, 1.0)
    for _ in range(4):
        y = rng.uniform(0.05, 3.0)
        x1, x2, z = rng.uniform(-0.5, 0.5, 3)
        g = GroupPoint(0.0, y, math.pi / 2, x1, x2, z)
        m = np.arange(-200, 200)
        s = (x1 - m) / math.sqrt(y)
        fv = ((s >= 0) & (s < 1)).astype(float)
        oracle = (
            y**-0.25 * cmath.exp(2j * math.pi * (z - x1 * x2 / 2)) * cmath.exp(-0.25j * math.pi)
            * np.sum(np.exp(2j * math.pi * (x1 - m) * x2) * fv)
        )
        assert abs(theta(f, g, 1e-6) - oracle) < 1e-6


def test_indicator_tol_too_tight():
    with pytest.raises(AccuracyError):
        theta(Indicator(0, 1), GroupPoint(0.1, 1.2, 0.7, 0, 0, 0), tol=1e-9)


def test_plan_for_tol():
    p = IndicatorPlan.for_tol(1e-5, 1.0)
    assert p.tail_radius == 0.5
    assert p.sin_target == pytest.approx(2 * math.pi**2 * 1e-10 * 0.5 / 9)
    assert p.expected_terms(1.0) > IndicatorPlan.for_tol(1e-4, 1.0).expected_terms(1.0)


def test_reduce_to_fundamental_membership_and_idempotence():
    rng = np.random.default_rng(21)
    for _ in range(200):
        g = GroupPoint(rng.uniform(-5, 5), 10 ** rng.uniform(-3, 1), rng.uniform(-10, 10), *rng.uniform(-3, 3, 3))
        r = reduce_to_fundamental(g)
        assert r.in_fundamental_domain()
        assert reduce_to_fundamental(r) == r


def test_reduce_fixed_point():
    g = GroupPoint(0.2, 1.5, 0.5, 0.1, -0.2, 0.3)
    assert reduce_to_fundamental(g) == g


def test_reduce_modular_example():
    r = reduce_to_fundamental(GroupPoint(0.5, 0.1, 0.0, 0.0, 0.0, 0.0))
    assert abs(r.x) <= 0.5 and abs(r.z) >= 1.0
    # standard modular reduction on z alone
    z = complex(0.5, 0.1)
    for _ in range(100):
        z -= round(z.real)
        if abs(z) >= 1:
            break
        z = -1 / z
    # the two edges x = +-1/2 are identified
    assert abs(r.y - z.imag) < 1e-12
    assert abs((r.x - z.real + 0.5) % 1.0 - 0.5) < 1e-12


def test_reduction_cross_oracle_small_y():
    rng = np.random.default_rng(6)
    f = HermiteBasis(0)
    for _ in range(20):
        g = GroupPoint(rng.uniform(-2, 2), 10 ** rng.uniform(-4, -1), rng.uniform(0, 6), *rng.uniform(-1, 1, 3))
        assert _rel(theta(f, reduce_to_fundamental(g)), theta(f, g)) < 1e-8


def test_reduction_cap():
    with pytest.raises(ReductionError):
        reduce_to_fundamental(GroupPoint(0.3, 1e-6, 0, 0, 0, 0), max_steps=1)


def test_reduce_rotation():
    g = GroupPoint(0.1, 1.4, 1.2, 0.3, 0.2, 0.0)
    r, steps = reduce_rotation(g, 1e-3)
    assert abs(math.sin(r.phi)) <= 1e-3 and steps > 0
    f = HermiteBasis(1)
    assert _rel(theta(f, r), theta(f, g)) < 1e-8


def test_haar_acceptance_rate():
    assert abs(haar_acceptance_rate(1, 1_000_000) - HAAR_ACCEPTANCE) < 0.002
    assert abs(HAAR_ACCEPTANCE - 0.9069) < 1e-4


def test_haar_samples_in_domain():
    gb = sample_haar(5, 20_000)
    assert len(gb) == 20_000
    assert np.all((gb.x >= -0.5) & (gb.x < 0.5) & (gb.x**2 + gb.y**2 >= 1))
    for arr, lo, hi in ((gb.phi, 0, math.pi), (gb.xi1, -0.5, 0.5), (gb.xi2, -0.5, 0.5), (gb.zeta, -0.5, 0.5)):
        assert np.all((arr >= lo) & (arr < hi))
    assert gb.point(3).in_fundamental_domain()
    assert sample_haar(5).in_fundamental_domain()


def test_haar_mean_inverse_y():
    gb = sample_haar(8, 400_000)
    # the (phi, xi, zeta) box has volume pi, so the z-marginal is dx dy / y^2 over pi/3
    inner, _ = integrate.dblquad(lambda y, x: y**-3, -0.5, 0.5, lambda x: math.sqrt(1 - x * x), lambda x: np.inf)
    oracle = inner / (math.pi / 3)
    assert abs(np.mean(1 / gb.y) / oracle - 1) < 0.01


def test_haar_chi_square():
    # in (x, v = 1/y) the measure is Lebesgue on v < 1/sqrt(1 - x^2)
    gb = sample_haar(9, 1_000_000)
    v = 1 / gb.y
    xe = np.linspace(-0.5, 0.5, 11)
    ve = np.linspace(0, 2 / math.sqrt(3), 11)
    counts, _, _ = np.histogram2d(gb.x, v, bins=[xe, ve])
    expected = np.empty_like(counts)
    for i in range(10):
        for j in range(10):
            area, _ = integrate.quad(
                lambda x: np.clip(min(ve[j + 1], 1 / math.sqrt(1 - x * x)) - ve[j], 0, None), xe[i], xe[i + 1]
            )
            expected[i, j] = area / (math.pi / 3) * len(gb)
    keep = expected > 5
    assert abs(expected.sum() - len(gb)) < 1e-6 * len(gb)
    stat = np.sum((counts[keep] - expected[keep]) ** 2 / expected[keep])
    assert sps.chi2.sf(stat, keep.sum() - 1) > 0.01


def test_lift_time_zero():
    assert lift_time(0.0, 7, 1.3) == GroupPoint(0.0, 7.0**-2, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(ParameterError):
        lift_time(1.0, 0, 1.0)


@pytest.mark.parametrize("N", [8, 16, 32, 128])
def test_lift_identity(N):
    rng = np.random.default_rng(N)
    gamma = math.sqrt(2) + 3
    n = np.arange(N)
    E = 0.5 * (2 * n + gamma) ** 2
    for f in (Indicator(0, 1), TableFn([0, 0.5, 1], [0, 1, 0])):
        w = f(n / N)
        for t in rng.uniform(0, 1, 20):
            direct = np.sum(w * np.exp(1j * E * t)) / math.sqrt(N)
            assert abs(direct - theta(f, lift_time(t, N, gamma))) < 1e-10


def test_u_density():
    # sigma(u) = (pi/2) rho(pi u / 2); the sup-norm bound is applied to the CDF,
    # where 1e5 draws leave ~0.003 of noise, and loosely to a 10-bin histogram
    rho = Triangular(0.0, 2.0)
    t = rho.ppf(np.random.default_rng(4).uniform(size=100_000))
    u = np.sort(2 * t / math.pi)
    sigma_cdf = integrate.cumulative_trapezoid(math.pi / 2 * rho.pdf(math.pi / 2 * u), u, initial=0.0)
    sigma_cdf += np.mean(u <= u[0])
    emp = np.arange(1, u.size + 1) / u.size
    assert np.max(np.abs(emp - sigma_cdf)) < 0.02
    hist, edges = np.histogram(u, bins=10, range=(0, 4 / math.pi), density=True)
    mid = 0.5 * (edges[1:] + edges[:-1])
    assert np.max(np.abs(hist - math.pi / 2 * rho.pdf(math.pi / 2 * mid))) < 0.05


def test_check_gamma_warns():
    with pytest.warns(UserWarning, match="rational"):
        check_gamma(1.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        check_gamma(math.sqrt(2) + 3)


def test_theta_pair():
    g = GroupPoint(0.2, 1.1, 0.9, 0.1, 0.3, -0.2)
    f = HermiteBasis(1)
    p = theta_pair(f, f, g)
    assert p.theta1 == p.theta0
    # disjoint windows at small y on the phi = 0 slice draw on disjoint n ranges
    g0 = GroupPoint(0.3701, 1e-4, 0.0, 0.1, 0.0, 0.0)
    p = theta_pair(Indicator(0, 1), Indicator(1, 2), g0)
    n = np.arange(0, 200)
    lhs = np.sum(np.exp(2j * math.pi * (0.5 * n * n * 0.3701 + n * 0.1))[:100])
    assert abs(p.theta1 - 0.1 * lhs) < 1e-10
    assert abs(p.theta0) > 0 and abs(p.theta0 - p.theta1) > 1e-3


def test_batch_matches_scalar():
    gb = sample_haar(17, 30)
    for f in (HermiteBasis(2), GaussianBump(0.5, 0.4)):
        b = theta_batch(f, gb)
        p = np.array([theta(f, gb.point(i)) for i in range(len(gb))])
        assert np.max(np.abs(b - p)) < 1e-10
    f = Indicator(0, 1)
    b = theta_batch(f, gb, 1e-3)
    p = np.array([theta(f, gb.point(i), 1e-5) for i in range(len(gb))])
    assert np.max(np.abs(b - p)) < 3e-3


def test_pair_batch_shares_reduction():
    gb = sample_haar(18, 20)
    f1, f0 = Indicator(0, 1), Indicator(1 / 3, 4 / 3)
    t1, t0 = theta_pair_batch(f1, f0, gb, 3e-3)
    assert np.allclose(t1, theta_batch(f1, gb, 3e-3), atol=1e-2)
    assert np.allclose(t0, theta_batch(f0, gb, 3e-3), atol=1e-2)
    with pytest.raises(ParameterError):
        theta_pair_batch(f1, f0, gb, 1e-4)


def test_group_batch_roundtrip():
    pts = [GroupPoint(0.1 * i, 1 + i, 0.2, 0.0, 0.1, 0.0) for i in range(3)]
    gb = GroupBatch.from_points(pts)
    assert [gb.point(i) for i in range(3)] == pts
