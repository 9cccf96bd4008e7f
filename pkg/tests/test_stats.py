import math

import numpy as np
import pytest
from scipy import integrate

from susypt import stats
from susypt.autocorr import AutocorrConfig, Uniform
from susypt.errors import AccuracyError, ParameterError
from susypt.pt_model import PTParams
from susypt.specfun import hermite_fn
from susypt.stats import (
    EmpiricalLaw,
    chunk_seeds,
    d_constant,
    dependence_report,
    ks_distance,
    mean_test,
    moment_growth,
    predicted_tail,
    sample_limit_law,
    sample_time_law,
    tail_report,
    tail_slope,
    wilson_interval,
)
from susypt.windows import HermiteBasis, Indicator, Window

H0 = HermiteBasis(0)


class Scaled(Window):
    """c * base, for the homogeneity check."""

    def __init__(self, base, c):
        self.base, self.c = base, c
        self.support = base.support
        self.decay_class_eta = base.decay_class_eta

    def __call__(self, t):
        return self.c * self.base(t)

    def rotated(self, phi, t):
        return self.c * self.base.rotated(phi, t)


@pytest.fixture(scope="module")
def h0_law():
    return sample_limit_law(H0, H0, 1_000_000, 2024)


def test_d_constant_hermite0():
    assert abs(d_constant(H0) - 2 * math.pi / math.sqrt(3)) < 1e-8


def test_d_constant_hermite1_against_1d_quadrature():
    one_d, _ = integrate.quad(lambda w: hermite_fn(1, w) ** 6, -np.inf, np.inf, epsabs=1e-14)
    assert abs(d_constant(HermiteBasis(1)) - math.pi * one_d) < 1e-8


def test_d_constant_homogeneity():
    c = 1.3
    assert d_constant(Scaled(H0, c)) == pytest.approx(c**6 * d_constant(H0), rel=1e-12)


def test_d_constant_needs_smooth_window():
    with pytest.raises(ParameterError):
        d_constant(Indicator(0, 1))


def test_predicted_tail_value():
    assert predicted_tail(2 * math.pi / math.sqrt(3), [3.0])[0] == pytest.approx(1.008e-3, rel=1e-3)


def test_same_window_identical_components(h0_law):
    assert np.array_equal(h0_law.theta1, h0_law.theta0)
    assert h0_law.count == 1_000_000 and h0_law.kind == "haar_sampled"


def test_mean_is_zero(h0_law):
    m, se = mean_test(h0_law)
    assert abs(m) < 3 * math.sqrt(2) * se


def test_moment_growth(h0_law):
    m4 = moment_growth(h0_law, 4)
    m6 = moment_growth(h0_law, 6)
    assert abs(m4[2] / m4[1] - 1) < 0.2
    assert m6[2] > m6[0]


def test_tail_report(h0_law):
    radii = [2.0, 2.5, 3.0, 3.5, 6.0]
    rep = tail_report(h0_law, H0, radii)
    assert rep.d_constant == pytest.approx(2 * math.pi / math.sqrt(3))
    assert all(a >= b for a, b in zip(rep.empirical_probs, rep.empirical_probs[1:]))
    assert rep.predicted[2] == pytest.approx(1.008e-3, rel=1e-3)
    assert 0.8 < rep.empirical_probs[2] / rep.predicted[2] < 1.25
    for p, lo, hi in zip(rep.empirical_probs, rep.ci_low, rep.ci_high):
        assert lo <= p <= hi
    assert rep.unreliable == [k < 20 for k in rep.exceedances]
    assert rep.unreliable[-1]
    assert -6.6 <= tail_slope(h0_law, 2.5, 4.0) <= -5.4


def test_tail_report_indicator_has_no_prediction():
    law = sample_limit_law(Indicator(0, 1), Indicator(0, 1), 2000, 1, tol=1e-2)
    rep = tail_report(law, Indicator(0, 1), [1.0, 2.0])
    assert rep.predicted is None and rep.d_constant is None


def test_tail_report_needs_haar_law():
    cfg = AutocorrConfig(PTParams(math.sqrt(2), 3.0), Indicator(0, 1), Indicator(0, 1), 16)
    law = sample_time_law(cfg, Uniform(), 100, 3)
    with pytest.raises(ParameterError):
        tail_report(law, None, [1.0])


def test_tail_slope_needs_exceedances():
    law = EmpiricalLaw(np.zeros((10, 2)), {"kind": "haar_sampled"}, 0)
    with pytest.raises(AccuracyError):
        tail_slope(law, 1.0, 2.0)


def test_wilson_interval_formula():
    k, n, z = 30, 1000, 1.959963984540054
    p = k / n
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    lo, hi = wilson_interval(k, n)
    assert lo == pytest.approx(centre - half, rel=1e-9)
    assert hi == pytest.approx(centre + half, rel=1e-9)


def test_ks_distance(h0_law):
    assert ks_distance(h0_law, h0_law) == 0
    other = sample_limit_law(H0, H0, 100_000, 99)
    assert ks_distance(h0_law, other) < 0.02
    for name in stats.FUNCTIONALS:
        assert 0 <= ks_distance(h0_law, other, name) < 0.02
    with pytest.raises(ParameterError):
        ks_distance(h0_law, other, "median")
    empty = EmpiricalLaw(np.zeros((0, 2)), {"kind": "haar_sampled"}, 0)
    with pytest.raises(ParameterError):
        ks_distance(h0_law, empty)


def test_dependence_identical_windows(h0_law):
    rep = dependence_report(h0_law, 2.0)
    p = np.mean(np.abs(h0_law.theta1) > 2.0)
    assert rep.ratio == pytest.approx(1 / p, rel=1e-12)
    assert rep.corr_sq_moduli == pytest.approx(1.0)
    assert not rep.unreliable


def test_dependence_overlapping_indicators():
    law = sample_limit_law(Indicator(0, 1), Indicator(1 / 3, 4 / 3), 100_000, 10, tol=1e-2)
    rep = dependence_report(law, 2.0)
    assert not rep.unreliable
    assert abs(rep.z_score) > 5
    assert np.isfinite(rep.corr_sq_moduli)


def test_dependence_flags_few_exceedances():
    law = sample_limit_law(H0, H0, 1000, 4)
    assert dependence_report(law, 3.0).unreliable


def test_chunks_do_not_depend_on_workers():
    a = sample_limit_law(H0, HermiteBasis(1), 3000, 5, chunk=700)
    b = sample_limit_law(H0, HermiteBasis(1), 3000, 5, chunk=700, workers=2)
    assert np.array_equal(a.samples, b.samples)
    sizes = [s for _, s, _ in chunk_seeds(5, 3000, 700)]
    assert sizes == [700, 700, 700, 700, 200]


def test_time_law_provenance():
    cfg = AutocorrConfig(PTParams(math.sqrt(2), 3.0), Indicator(0, 1), Indicator(1 / 3, 4 / 3), 32)
    law = sample_time_law(cfg, Uniform(), 500, 8, chunk=128)
    assert law.count == 500 and law.kind == "time_sampled" and law.provenance["N"] == 32
    again = sample_time_law(cfg, Uniform(), 500, 8, chunk=128, workers=2)
    assert np.array_equal(law.samples, again.samples)


def test_failures_abort(monkeypatch):
    def broken(f1, f0, gb, tol):
        out = np.ones(len(gb), dtype=complex)
        out[::10] = np.nan
        return out, out

    monkeypatch.setattr(stats, "theta_pair_batch", broken)
    with pytest.raises(AccuracyError):
        sample_limit_law(H0, H0, 1000, 1)


def test_count_validation():
    with pytest.raises(ParameterError):
        sample_limit_law(H0, H0, 0, 1)
