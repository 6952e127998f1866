import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special, stats

from oracles import bisect
from ustat_gof import specfun
from ustat_gof.errors import DomainError

EULER = 0.5772156649015329
CRIT95 = 5.991464547107979


class TestLnGamma:
    @pytest.mark.parametrize(
        "x, expected", [(1.0, 0.0), (2.0, 0.0), (1.5, math.log(math.sqrt(math.pi) / 2))]
    )
    def test_examples(self, x, expected):
        assert specfun.ln_gamma(x) == pytest.approx(expected, abs=1e-15)

    def test_against_scipy(self):
        xs = np.geomspace(1e-3, 1e3, 2001)
        ours = np.array([specfun.ln_gamma(x) for x in xs])
        ref = special.gammaln(xs)
        rel = np.abs(ours - ref) / np.maximum(1.0, np.abs(ref))
        assert rel.max() <= 1e-13

    def test_gamma_small_integers(self):
        for k in range(1, 12):
            assert specfun.gamma(k) == pytest.approx(math.factorial(k - 1), rel=1e-13)

    @pytest.mark.parametrize("bad", [0.0, -1.0, -0.5, math.nan])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            specfun.ln_gamma(bad)

    @given(st.floats(0.5, 50.0))
    def test_recurrence(self, x):
        lhs = specfun.ln_gamma(x + 1.0)
        rhs = specfun.ln_gamma(x) + math.log(x)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


class TestDigamma:
    def test_examples(self):
        assert specfun.digamma(1.0) == pytest.approx(-EULER, abs=1e-14)
        assert specfun.digamma(2.0) == pytest.approx(1.0 - EULER, abs=1e-14)
        # 2 - gamma - 2 ln 2, cross-checked below by finite difference
        assert specfun.digamma(1.5) == pytest.approx(2.0 - EULER - 2.0 * math.log(2.0), abs=1e-14)
        assert specfun.digamma(1.5) == pytest.approx(0.0364899740, abs=1e-10)

    def test_finite_difference_at_1_5(self):
        h = 1e-5
        fd = (specfun.ln_gamma(1.5 + h) - specfun.ln_gamma(1.5 - h)) / (2 * h)
        assert specfun.digamma(1.5) == pytest.approx(fd, abs=1e-6)

    def test_against_scipy(self):
        xs = np.geomspace(1e-3, 1e3, 2001)
        ours = np.array([specfun.digamma(x) for x in xs])
        ref = special.digamma(xs)
        rel = np.abs(ours - ref) / np.maximum(1e-300, np.abs(ref))
        # the root of psi near 1.4616 makes relative error meaningless there
        ok = (rel <= 1e-12) | (np.abs(ours - ref) <= 1e-15)
        assert ok.all()

    @given(st.floats(0.5, 50.0))
    def test_recurrence(self, x):
        assert specfun.digamma(x + 1.0) - specfun.digamma(x) == pytest.approx(1.0 / x, abs=1e-10)

    @given(st.floats(0.5, 50.0))
    def test_finite_difference(self, x):
        h = 1e-5
        fd = (specfun.ln_gamma(x + h) - specfun.ln_gamma(x - h)) / (2 * h)
        assert specfun.digamma(x) == pytest.approx(fd, abs=1e-5)

    def test_domain(self):
        with pytest.raises(DomainError):
            specfun.digamma(0.0)


class TestTrigamma:
    @pytest.mark.parametrize(
        "x, expected",
        [(1.0, math.pi**2 / 6), (1.5, math.pi**2 / 2 - 4), (2.0, math.pi**2 / 6 - 1)],
    )
    def test_examples(self, x, expected):
        assert specfun.trigamma(x) == pytest.approx(expected, rel=1e-13)

    def test_against_scipy(self):
        xs = np.geomspace(1e-3, 1e3, 2001)
        ours = np.array([specfun.trigamma(x) for x in xs])
        ref = special.polygamma(1, xs)
        assert np.max(np.abs(ours - ref) / ref) <= 1e-10

    @given(st.floats(0.5, 50.0))
    def test_recurrence(self, x):
        d = specfun.trigamma(x + 1.0) - specfun.trigamma(x)
        assert d == pytest.approx(-1.0 / x**2, abs=1e-10)

    @given(st.floats(0.5, 50.0))
    def test_finite_difference(self, x):
        h = 1e-5
        fd = (specfun.digamma(x + h) - specfun.digamma(x - h)) / (2 * h)
        assert specfun.trigamma(x) == pytest.approx(fd, abs=1e-5)

    def test_domain(self):
        with pytest.raises(DomainError):
            specfun.trigamma(-2.0)


class TestChi2:
    def test_cdf_examples(self):
        assert specfun.chi2_cdf(0.0, 2) == 0.0
        assert specfun.chi2_cdf(CRIT95, 2) == pytest.approx(0.95, abs=1e-12)
        assert specfun.chi2_cdf(2 * math.log(2), 2) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("df", [1, 2, 3, 4, 7, 10, 25])
    def test_cdf_against_scipy(self, df):
        xs = np.concatenate([np.linspace(0, 5, 101), np.geomspace(5, 200, 100)])
        ours = np.array([specfun.chi2_cdf(x, df) for x in xs])
        assert np.max(np.abs(ours - stats.chi2.cdf(xs, df))) <= 1e-12
        sf = np.array([specfun.chi2_sf(x, df) for x in xs])
        assert np.max(np.abs(sf - stats.chi2.sf(xs, df))) <= 1e-12

    def test_quantile_examples(self):
        assert specfun.chi2_quantile(0.95, 2) == pytest.approx(CRIT95, abs=1e-12)
        assert specfun.chi2_quantile(0.0, 2) == 0.0
        ref = bisect(lambda x: specfun.chi2_cdf(x, 1), 0.5, 0.0, 10.0)
        assert specfun.chi2_quantile(0.5, 1) == pytest.approx(ref, abs=1e-10)
        assert specfun.chi2_quantile(0.5, 1) == pytest.approx(0.4549364, abs=1e-7)

    @pytest.mark.parametrize("df", [1, 2, 3, 5, 10])
    def test_quantile_inverts_cdf(self, df):
        for p in np.linspace(0.001, 0.999, 57):
            q = specfun.chi2_quantile(p, df)
            assert specfun.chi2_cdf(q, df) == pytest.approx(p, abs=1e-10)

    @given(st.floats(0.01, 50.0), st.integers(1, 10))
    def test_quantile_of_cdf(self, x, df):
        p = specfun.chi2_cdf(x, df)
        if p < 1.0 - 1e-9:  # beyond that the inverse is ill-conditioned in x
            assert specfun.chi2_quantile(p, df) == pytest.approx(x, rel=1e-8, abs=1e-8)

    @pytest.mark.parametrize("df", [1, 2, 5])
    def test_cdf_monotone(self, df):
        vals = [specfun.chi2_cdf(x, df) for x in np.linspace(0, 60, 600)]
        assert np.all(np.diff(vals) >= 0)

    def test_quantile_monotone(self):
        qs = [specfun.chi2_quantile(p, 2) for p in np.linspace(0, 0.999, 300)]
        assert np.all(np.diff(qs) > 0)

    @pytest.mark.parametrize(
        "call",
        [
            lambda: specfun.chi2_cdf(-1.0, 2),
            lambda: specfun.chi2_cdf(1.0, 0),
            lambda: specfun.chi2_quantile(1.0, 2),
            lambda: specfun.chi2_quantile(-0.1, 2),
            lambda: specfun.noncentral_chi2_sf(1.0, 2, -1.0),
            lambda: specfun.noncentral_chi2_sf(-1.0, 2, 1.0),
        ],
    )
    def test_domain(self, call):
        with pytest.raises(DomainError):
            call()


class TestNoncentral:
    def test_examples(self):
        assert specfun.noncentral_chi2_sf(CRIT95, 2, 0.0) == pytest.approx(0.05, abs=1e-12)
        assert specfun.noncentral_chi2_sf(0.0, 2, 7.3) == 1.0

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(20240601)
        n = 10**7
        z1 = rng.standard_normal(n) + math.sqrt(10.0)
        z2 = rng.standard_normal(n)
        hits = (z1 * z1 + z2 * z2) > CRIT95
        p = hits.mean()
        se = math.sqrt(p * (1 - p) / n)
        val = specfun.noncentral_chi2_sf(CRIT95, 2, 10.0)
        assert 0.05 < val < 1.0
        assert abs(val - p) <= 3 * se

    @pytest.mark.parametrize("df", [1, 2, 4])
    @pytest.mark.parametrize("ncp", [0.0, 0.3, 2.0, 10.0, 50.0, 400.0])
    def test_against_scipy(self, df, ncp):
        for x in [0.1, 1.0, 5.991, 20.0, 100.0, 500.0]:
            ref = stats.ncx2.sf(x, df, ncp) if ncp > 0 else stats.chi2.sf(x, df)
            assert specfun.noncentral_chi2_sf(x, df, ncp) == pytest.approx(ref, abs=1e-10)

    def test_reduces_to_central(self):
        for x in np.linspace(0, 30, 31):
            assert specfun.noncentral_chi2_sf(x, 3, 0.0) == pytest.approx(
                1.0 - specfun.chi2_cdf(x, 3), abs=1e-13
            )

    def test_monotone_in_ncp(self):
        for x in [1.0, CRIT95, 15.0]:
            vals = [specfun.noncentral_chi2_sf(x, 2, c) for c in np.linspace(0, 60, 121)]
            assert np.all(np.diff(vals) >= -1e-15)

    @settings(max_examples=50)
    @given(st.floats(0, 200), st.integers(1, 8), st.floats(0, 300))
    def test_is_probability(self, x, df, ncp):
        assert 0.0 <= specfun.noncentral_chi2_sf(x, df, ncp) <= 1.0
