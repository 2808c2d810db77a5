import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special, stats

from spectral_heat import specfun
from spectral_heat import subordinator as sub
from spectral_heat.errors import DomainError

ALPHAS = [0.3, 0.6, 1.0, 1.2, 1.5, 1.8]


def levy_density(x):
    return x ** -1.5 * np.exp(-0.25 / x) / (2.0 * math.sqrt(math.pi))


def mp_series_density(alpha, x, terms=600, dps=80):
    rho = mpmath.mpf(alpha) / 2
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        s = mpmath.mpf(0)
        for n in range(1, terms + 1):
            s += (-1) ** (n + 1) * mpmath.gamma(1 + rho * n) / mpmath.factorial(n) \
                * mpmath.sinpi(rho * n) * x ** (-rho * n - 1)
        return float(s / mpmath.pi)


class TestAlpha:
    @pytest.mark.parametrize("alpha,case", [(0.5, "subcritical"), (1.0, "critical"),
                                            (1.5, "supercritical")])
    def test_case(self, alpha, case):
        assert sub.Alpha(alpha).case == case
        assert sub.Alpha(alpha).rho == alpha / 2

    @pytest.mark.parametrize("alpha", [0.0, 2.0, -1.0, float("nan")])
    def test_rejects(self, alpha):
        with pytest.raises(DomainError):
            sub.Alpha(alpha)


class TestDensityOracles:
    def test_levy_closed_form(self):
        x = np.exp(np.linspace(math.log(1e-3), math.log(1e4), 400))
        ev = sub.density_at_one(1.0, x)
        np.testing.assert_allclose(ev.value, levy_density(x), rtol=1e-11)
        assert set(ev.method) == {"series", "kanter"}

    def test_one_third_closed_form(self):
        x = np.exp(np.linspace(math.log(1e-2), math.log(1e4), 200))
        got = sub.g1(2.0 / 3.0, x)
        ref = np.array([float(mpmath.besselk(mpmath.mpf(1) / 3, 2 / (3 * mpmath.sqrt(3 * xi))))
                        / (3 * math.pi) * xi ** -1.5 for xi in x])
        np.testing.assert_allclose(got, ref, rtol=1e-11)

    @pytest.mark.parametrize("alpha", [0.4, 0.9, 1.3, 1.7])
    @pytest.mark.parametrize("x", [0.6, 1.0, 4.0, 30.0])
    def test_high_precision_series(self, alpha, x):
        np.testing.assert_allclose(sub.g1(alpha, x), mp_series_density(alpha, x), rtol=1e-11)

    @pytest.mark.parametrize("alpha", [0.8, 1.2, 1.6])
    @pytest.mark.parametrize("x", [0.5, 1.0, 3.0])
    def test_fourier_inversion(self, alpha, x):
        np.testing.assert_allclose(sub.g1(alpha, x), sub.density_fourier(alpha, x).value,
                                   rtol=1e-8)

    @pytest.mark.parametrize("alpha", np.linspace(0.1, 1.9, 20))
    def test_branches_overlap(self, alpha):
        rho = alpha / 2
        xs = sub.crossover(alpha)
        x = np.exp(np.linspace(math.log(xs / 2), math.log(2 * xs), 9))
        kanter, k_err = sub._kanter_density(rho, x)
        above = x >= xs
        series = sub._series_sum(sub._series_terms(rho, x[above]))[0]
        np.testing.assert_allclose(series, kanter[above], rtol=1e-8)
        if alpha >= 0.5:
            # the Fourier integrand is barely damped for small alpha
            four = [sub.density_fourier(alpha, xi) for xi in x[~above]]
            f_val = np.array([f.value for f in four])
            f_err = np.array([f.est_error for f in four])
            assert np.all(np.abs(kanter[~above] - f_val) <= 1e-8 * kanter[~above] + 10 * f_err)
        assert np.all(k_err <= 1e-8 * kanter + 1e-300)

    def test_method_switches_once(self):
        x = np.exp(np.linspace(math.log(1e-3), math.log(1e4), 300))
        m = sub.density_at_one(1.5, x).method
        assert np.count_nonzero(m[1:] != m[:-1]) == 1
        assert m[0] == "kanter" and m[-1] == "series"


class TestDensityIdentities:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_normalization(self, alpha):
        got = sub.expect(alpha, lambda u: np.ones_like(u), tail=lambda U: sub.sf(alpha, U))
        np.testing.assert_allclose(got, 1.0, rtol=1e-10)

    @pytest.mark.parametrize("alpha", ALPHAS)
    @pytest.mark.parametrize("lam", [0.5, 2.0])
    def test_laplace(self, alpha, lam):
        got = sub.expect(alpha, lambda u: np.exp(-lam * u), upper=2000.0 / lam)
        np.testing.assert_allclose(got, math.exp(-lam ** (alpha / 2)), rtol=1e-10)

    @pytest.mark.parametrize("alpha,t", [(0.6, 0.01), (1.5, 3.0), (1.0, 250.0)])
    def test_scaling(self, alpha, t):
        x = np.array([1e-3, 0.1, 1.0, 10.0, 1e3])
        s = t ** (2 / alpha)
        np.testing.assert_allclose(sub.density(alpha, t, x).value, sub.g1(alpha, x / s) / s,
                                   rtol=1e-15)

    @pytest.mark.parametrize("alpha,gamma", [(0.6, 0.2), (0.6, -1.0), (1.0, 0.4), (1.5, 0.7),
                                             (1.5, -0.5), (1.9, 0.9)])
    def test_fractional_moment_against_quadrature(self, alpha, gamma):
        got = sub.expect(alpha, lambda u: u ** gamma,
                         tail=lambda U: sub._series_tail(alpha / 2, np.array([U]), gamma)[0])
        np.testing.assert_allclose(sub.fractional_moment(alpha, gamma), got, rtol=1e-9)

    def test_infinite_moment_rejected(self):
        with pytest.raises(DomainError):
            sub.fractional_moment(1.0, 0.5)

    @pytest.mark.parametrize("alpha", [1.0, 1.5])
    def test_tail_law_converges(self, alpha):
        c = specfun.tail_density_constant(alpha)
        x = np.array([1e4, 1e6, 1e8])
        r = sub.g1(alpha, x) * x ** (1 + alpha / 2) / c - 1
        assert abs(r[-1]) < 2e-6
        assert np.all(np.abs(np.diff(np.abs(r))) >= 0) or abs(r[-1]) < abs(r[0])

    @pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
    def test_cdf_sf(self, alpha):
        x = np.array([0.05, 0.5, 2.0, 40.0, 1e4])
        np.testing.assert_allclose(sub.cdf(alpha, x) + sub.sf(alpha, x), 1.0, atol=1e-12)
        np.testing.assert_allclose(sub.cdf(1.0, x), special.erfc(0.5 / np.sqrt(x)), rtol=1e-11)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    def test_envelope_dominates(self, alpha):
        x = np.exp(np.linspace(math.log(1e-4), math.log(1e9), 500))
        for t in (0.1, 1.0, 7.0):
            assert np.all(sub.density(alpha, t, x).value <= sub.density_upper_envelope(alpha, t, x))


class TestSeriesBound:
    @pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
    def test_bound_majorizes_tail(self, alpha):
        rho = alpha / 2
        x = 50.0
        terms = sub._series_terms(rho, np.array([x]))[:, 0]
        for n0 in (3, 10, 30):
            tail = np.abs(terms[n0 - 1:]).sum()
            assert sub.series_truncation_bound(alpha, x, n0).bound >= tail


class TestSampler:
    @pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
    def test_ks(self, alpha):
        rng = np.random.default_rng(7)
        s = sub.sample(alpha, 1.0, rng, 20000)
        res = stats.kstest(s, lambda x: sub.cdf(alpha, x))
        assert res.pvalue > 1e-3

    @pytest.mark.parametrize("alpha", [0.6, 1.5])
    def test_laplace(self, alpha):
        rng = np.random.default_rng(11)
        s = sub.sample(alpha, 2.0, rng, 200000)
        v = np.exp(-s)
        se = v.std() / math.sqrt(v.size)
        assert abs(v.mean() - math.exp(-2.0)) < 4 * se

    def test_positive_and_shape(self):
        s = sub.sample(1.2, 0.5, np.random.default_rng(0), (3, 4))
        assert s.shape == (3, 4) and np.all(s > 0)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.1, max_value=1.95), st.floats(min_value=1e-3, max_value=1e5))
def test_density_finite_nonnegative(alpha, x):
    # the left tail decays like exp(-c x^(-alpha/(2-alpha))) and may underflow
    v = sub.g1(alpha, x)
    assert np.isfinite(v) and v >= 0
    if x >= 0.5:
        assert v > 0


class TestWorkedValues:
    def test_levy_points(self):
        np.testing.assert_allclose(sub.g1(1.0, 1.0), 0.219695644733861, rtol=1e-13)
        np.testing.assert_allclose(sub.g1(1.0, 0.04), 125 * math.exp(-6.25) / (2 * math.sqrt(math.pi)),
                                   rtol=1e-11)

    def test_time_scaling_levy(self):
        np.testing.assert_allclose(sub.density(1.0, 4.0, 1.0).value,
                                   0.0625 * levy_density(0.0625), rtol=1e-11)
        assert sub.density(1.0, 1.0, 1.0) == sub.density_at_one(1.0, 1.0)

    def test_tail_at_one_million(self):
        r = sub.g1(1.2, 1e6) * 1e6 ** 1.6 / specfun.tail_density_constant(1.2)
        assert abs(r - 1) < 1e-2

    @pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
    @pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
    def test_normalization_in_time(self, alpha, t):
        s = t ** (2 / alpha)
        got = sub.expect(alpha, lambda u: np.ones_like(u), tail=lambda U: sub.sf(alpha, U))
        x = np.array([0.3, 3.0])
        np.testing.assert_allclose(sub.density(alpha, t, x * s).value * s, sub.g1(alpha, x),
                                   rtol=1e-14)
        assert abs(got - 1) <= 1e-8

    def test_moment_values(self):
        assert sub.fractional_moment(0.7, 0.0) == 1.0
        np.testing.assert_allclose(sub.fractional_moment(1.5, 0.5),
                                   specfun.gamma(1 / 3) / math.sqrt(math.pi), rtol=1e-14)
        quad = sub.expect(1.2, lambda u: u ** 0.3,
                          tail=lambda U: sub._series_tail(0.6, np.array([U]), 0.3)[0])
        np.testing.assert_allclose(quad, sub.fractional_moment(1.2, 0.3), rtol=1e-6)


class TestEnvelope:
    @pytest.mark.parametrize("alpha", [0.6, 1.0, 1.5])
    def test_domination_dense_grid(self, alpha):
        x = np.exp(np.linspace(math.log(1e-4), math.log(1e8), 10_000))
        for t in (0.1, 1.0, 10.0):
            assert np.all(sub.density(alpha, t, x).value <= sub.density_upper_envelope(alpha, t, x))

    def test_levy_tail_ratio(self):
        ratio = sub.density_upper_envelope(1.0, 1.0, 1e8) / sub.g1(1.0, 1e8)
        np.testing.assert_allclose(ratio, sub.envelope_constant(1.0) / (0.5 / math.sqrt(math.pi)),
                                   rtol=1e-8)
        assert ratio > 1

    def test_scale_consistent(self):
        x = np.array([1e-3, 1.0, 1e3])
        for t in (0.2, 5.0):
            s = t ** (-2 / 1.5)
            np.testing.assert_allclose(sub.density_upper_envelope(1.5, t, x),
                                       s * sub.density_upper_envelope(1.5, 1.0, x * s),
                                       rtol=1e-13)


class TestTruncatedMoments:
    def test_monotone_limit(self):
        vals = [sub.truncated_moment(1.5, 1, c) for c in (10.0, 1e3, 1e6)]
        assert vals[0] < vals[1] < vals[2] < sub.fractional_moment(1.5, 0.5)
        np.testing.assert_allclose(sub.truncated_moment(1.5, 1, 1e30),
                                   sub.fractional_moment(1.5, 0.5), rtol=1e-7)

    @pytest.mark.parametrize("t", [1e-3, 1e-6])
    def test_second_moment_ratio(self, t):
        a = 1.5
        r = sub.truncated_moment(a, 2, t ** (-2 / a)) / t ** (1 - 2 / a)
        assert abs(r / (a / ((2 - a) * specfun.gamma(1 - a / 2))) - 1) < 0.05

    def test_log_ratio_critical(self):
        t = 1e-6
        r = sub.truncated_moment(1.0, 1, 1 / t ** 2) / math.log(1 / t)
        assert abs(r * math.sqrt(math.pi) - 1) < 0.1

    def test_half_moment_tail(self):
        np.testing.assert_allclose(sub.tail_half_moment(1.5, 0.0), sub.fractional_moment(1.5, 0.5),
                                   rtol=1e-10)
        v = sub.tail_half_moment(1.5, 1e-6 ** (-2 / 1.5)) / 1e-6 ** (1 / 3)
        assert abs(v / 0.827446 - 1) < 0.01
        cut = [sub.tail_half_moment(1.5, c) for c in (0.5, 5.0, 50.0)]
        assert cut[0] > cut[1] > cut[2]

    def test_bound_decreasing(self):
        b = [sub.series_truncation_bound(1.5, 20.0, n).bound for n in (2, 5, 10, 40)]
        assert all(p > q for p, q in zip(b, b[1:]))


class TestSamplerValues:
    def test_laplace_million(self):
        v = np.exp(-sub.sample(1.3, 1.0, np.random.default_rng(17), 10 ** 6))
        assert abs(v.mean() - math.exp(-1)) <= 3 * v.std() / 1e3

    def test_levy_cdf_at_one(self):
        s = sub.sample(1.0, 1.0, np.random.default_rng(2), 200_000)
        p = np.mean(s <= 1.0)
        ref = math.erfc(0.5)
        np.testing.assert_allclose(ref, 0.4795001221869535, rtol=1e-14)
        assert abs(p - ref) <= 4 * math.sqrt(ref * (1 - ref) / s.size)

    def test_time_scaling_same_seed(self):
        a, t = 0.9, 3.0
        s1 = sub.sample(a, 1.0, np.random.default_rng(8), 50)
        st_ = sub.sample(a, t, np.random.default_rng(8), 50)
        np.testing.assert_allclose(st_, t ** (2 / a) * s1, rtol=1e-14)
