import math

import numpy as np
import pytest
from scipy import integrate
from scipy import stats as sps

from susypt.autocorr import (
    AutocorrConfig,
    GridTimes,
    RandomTimes,
    TableDensity,
    Triangular,
    Uniform,
    autocorrelation,
    autocorrelation_batch,
    coefficient_profile,
    rescaled_X,
    rescaled_X_batch,
    sample_random_times,
)
from susypt.errors import ParameterError
from susypt.jacobi_theta import lift_time, theta
from susypt.pt_model import PTParams, eigenvalue
from susypt.windows import GaussianBump, HermiteBasis, Indicator, TableFn

F1, F0 = Indicator(0, 1), Indicator(1 / 3, 4 / 3)
MAIN = PTParams(math.sqrt(2), 3.0)


def _cfg(N, f1=F1, f0=F0, params=MAIN):
    return AutocorrConfig(params, f1, f0, N)


def test_profile_indicator_half_open():
    assert coefficient_profile(Indicator(0, 1), 4).tolist() == [0.25, 0.25, 0.25, 0.25, 0.0]


def test_profile_riemann_sum_and_sign():
    p = coefficient_profile(Indicator(0, 1), 512)
    assert abs(p.sum() - 1.0) < 0.01
    tri = TableFn([0, 0.5, 1], [0, 2, 0])
    q = coefficient_profile(tri, 300)
    assert np.all(q >= 0)
    assert abs(q.sum() - 1.0) < 1e-3


def test_profile_needs_compact_support():
    with pytest.raises(ParameterError):
        coefficient_profile(HermiteBasis(0), 8)


def test_config_validation():
    with pytest.raises(ParameterError):
        _cfg(0)
    with pytest.raises(ParameterError):
        _cfg(2.5)
    with pytest.raises(ParameterError):
        AutocorrConfig(MAIN, HermiteBasis(0), F0, 8)


def test_energies_match_model():
    cfg = _cfg(16)
    t = 0.37
    a1, _ = autocorrelation(cfg, t)
    n = np.arange(16)
    E = np.array([eigenvalue(MAIN, int(k)) for k in n])
    assert abs(a1 - np.sum(np.exp(1j * E * t)) / 16) < 1e-12


def test_t_zero_real_positive():
    cfg = _cfg(40)
    a1, a0 = autocorrelation(cfg, 0.0)
    assert a1.imag == 0 and a0.imag == 0
    assert a1.real == pytest.approx(coefficient_profile(F1, 40).sum())
    assert a0.real == pytest.approx(coefficient_profile(F0, 40).sum())


def test_modulus_bound_and_conjugate_symmetry(rng):
    cfg = _cfg(40, f1=GaussianBump(0.5, 0.1))
    t = rng.uniform(-20, 20, 200)
    a1, a0 = autocorrelation_batch(cfg, t)
    b1, b0 = autocorrelation_batch(cfg, -t)
    z1, z0 = autocorrelation(cfg, 0.0)
    assert np.all(np.abs(a1) <= z1.real + 1e-12) and np.all(np.abs(a0) <= z0.real + 1e-12)
    assert np.max(np.abs(b1 - np.conj(a1))) < 1e-12
    assert np.max(np.abs(b0 - np.conj(a0))) < 1e-12


def test_single_term():
    cfg = _cfg(1)
    t = 1.234
    x1, _ = rescaled_X(cfg, t)
    assert abs(x1 - np.exp(1j * eigenvalue(MAIN, 0) * t)) < 1e-14
    assert abs(abs(x1) - 1) < 1e-14


@pytest.mark.parametrize("params", [MAIN, PTParams(math.e / 2, math.e / 2)], ids=["sqrt2+3", "e"])
def test_rescaled_matches_theta(params, rng):
    N = 128
    cfg = _cfg(N, params=params)
    t = rng.uniform(0, 1, 100)
    x1, x0 = rescaled_X_batch(cfg, t)
    for k in range(t.size):
        g = lift_time(t[k], N, params.gamma)
        assert abs(x1[k] - theta(F1, g)) < 1e-10
        assert abs(x0[k] - theta(F0, g)) < 1e-10


def test_uniform_times_ks():
    t = sample_random_times(RandomTimes(Uniform(0, 1), 100_000, 3))
    assert sps.kstest(t, "uniform").statistic < 0.005


def test_triangular_times_histogram():
    rho = Triangular(0, 2)
    t = sample_random_times(RandomTimes(rho, 100_000, 4))
    assert np.all((t >= 0) & (t <= 2))
    # CDF sup-norm, then a coarse histogram
    emp = np.arange(1, t.size + 1) / t.size
    s = np.sort(t)
    cdf = np.where(s < 1, s * s / 2, 1 - (2 - s) ** 2 / 2)
    assert np.max(np.abs(emp - cdf)) < 0.005
    hist, edges = np.histogram(t, bins=10, range=(0, 2), density=True)
    assert np.max(np.abs(hist - rho.pdf(0.5 * (edges[1:] + edges[:-1])))) < 0.02


def test_seed_determinism():
    m = RandomTimes(Triangular(0, 2), 1000, 77)
    assert np.array_equal(sample_random_times(m), m.times())
    assert not np.array_equal(m.times(), RandomTimes(Triangular(0, 2), 1000, 78).times())


def test_table_density(tmp_path):
    grid = np.array([0.0, 1.0, 3.0])
    vals = np.array([0.0, 0.4, 0.4])
    dens = TableDensity(grid, vals)
    u = np.linspace(0, 1, 101)
    t = dens.ppf(u)
    cdf = np.array([integrate.quad(dens.pdf, 0, x, points=[1.0])[0] for x in t])
    assert np.max(np.abs(cdf - u)) < 1e-10
    p = tmp_path / "rho.csv"
    np.savetxt(p, np.column_stack([grid, vals]), delimiter=",", header="t,rho")
    assert np.array_equal(TableDensity.from_csv(p).ppf(u), t)
    with pytest.raises(ParameterError, match="integrates"):
        TableDensity(grid, 2 * vals)
    with pytest.raises(ParameterError):
        TableDensity(grid, -vals)


def test_density_validation():
    with pytest.raises(ParameterError):
        Uniform(1, 1)
    with pytest.raises(ParameterError):
        Triangular(2, 0)
    with pytest.raises(ParameterError):
        sample_random_times(RandomTimes(Uniform(), -1, 0))


def test_grid_times():
    assert GridTimes(0, 1, 5).times().tolist() == [0, 0.25, 0.5, 0.75, 1.0]


def test_rho_independence_at_512():
    # law of |X_N| at N = 512 under two time densities, 1e5 draws each
    cfg = _cfg(512)
    t_u = sample_random_times(RandomTimes(Uniform(0, 1), 100_000, 11))
    t_t = sample_random_times(RandomTimes(Triangular(0, 2), 100_000, 12))
    xu, _ = rescaled_X_batch(cfg, t_u)
    xt, _ = rescaled_X_batch(cfg, t_t)
    assert sps.ks_2samp(np.abs(xu), np.abs(xt)).statistic < 0.03
