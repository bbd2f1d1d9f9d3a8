"""Special-function layer: frozen oracle anchors plus live cross-checks.

Frozen values were produced by independent high-precision computations
(adaptive quadrature of the Bessel integral representation, extended
precision series, bisection) and are asserted as literals; scipy and
mpmath serve as broad-grid references, never as implementations.
"""

import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from invsqnls import specfun as sf


class TestGamma:
    def test_one(self):
        assert sf.gamma_fn(1.0) == pytest.approx(1.0, rel=1e-14)

    def test_half(self):
        assert sf.gamma_fn(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)

    def test_frozen_4p2(self):
        # independent high-precision recursion oracle
        assert sf.gamma_fn(4.2) == pytest.approx(7.7566895357931776, rel=1e-13)

    def test_against_scipy_grid(self):
        x = np.concatenate([np.linspace(1e-3, 30, 997), np.linspace(30, 170, 431)])
        assert_allclose(sf.gamma_fn(x), sp.gamma(x), rtol=1e-13)

    def test_domain_error(self):
        with pytest.raises(sf.SpecFunError):
            sf.gamma_fn(0.0)
        with pytest.raises(sf.SpecFunError):
            sf.gamma_fn(-1.5)

    @given(st.floats(min_value=0.05, max_value=80.0))
    @settings(max_examples=60, deadline=None)
    def test_recursion_property(self, x):
        assert sf.gamma_fn(x + 1.0) == pytest.approx(x * sf.gamma_fn(x), rel=5e-13)


class TestBesselJ:
    def test_half_integer_sine_zero(self):
        assert sf.bessel_j(0.5, math.pi) == pytest.approx(0.0, abs=1e-15)

    def test_at_zero(self):
        assert sf.bessel_j(0.0, 0.0) == 1.0
        assert sf.bessel_j(0.9, 0.0) == 0.0

    def test_frozen_integral_representation_oracle(self):
        # J_nu(x) = (1/pi) int_0^pi cos(x sin t - nu t) dt
        #         - (sin(nu pi)/pi) int_0^inf e^{-x sinh s - nu s} ds
        # evaluated by adaptive quadrature at 25 digits
        assert sf.bessel_j(0.75, 2.5) == pytest.approx(0.4223024495963356, rel=1e-12)

    @pytest.mark.parametrize("nu", [0.0, 0.5, 0.9, 1.0, 2.3, 3.7, 7.5, 12.0])
    def test_against_scipy_grid(self, nu):
        x = np.concatenate([np.linspace(1e-6, 60, 1200), np.linspace(60, 1000, 900)])
        mine = sf.bessel_j(nu, x)
        ref = sp.jv(nu, x)
        env = np.sqrt(2.0 / (math.pi * np.maximum(x, 1.0)))
        assert np.max(np.abs(mine - ref) / env) < 1e-12

    def test_recurrence_identity(self):
        # J_{nu-1}(x) + J_{nu+1}(x) = (2 nu / x) J_nu(x)
        rng = np.random.default_rng(7)
        x = 10.0 ** rng.uniform(-1.0, 2.0, size=300)
        for nu in (1.0, 1.7, 2.3, 5.5):
            lhs = sf.bessel_j(nu - 1.0, x) + sf.bessel_j(nu + 1.0, x)
            rhs = (2.0 * nu / x) * sf.bessel_j(nu, x)
            assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_domain_errors(self):
        with pytest.raises(sf.SpecFunError):
            sf.bessel_j(-0.5, 1.0)
        with pytest.raises(sf.SpecFunError):
            sf.bessel_j(1.0, -1.0)

    def test_bounded(self):
        x = np.linspace(0.0, 500.0, 2000)
        for nu in (0.0, 0.25, 1.0, 4.4):
            assert np.max(np.abs(sf.bessel_j(nu, x))) <= 1.0 + 1e-12

    @given(st.floats(min_value=0.0, max_value=20.0),
           st.floats(min_value=0.01, max_value=500.0))
    @settings(max_examples=80, deadline=None)
    def test_matches_scipy_property(self, nu, x):
        env = math.sqrt(2.0 / (math.pi * max(x, 1.0)))
        assert abs(sf.bessel_j(nu, x) - sp.jv(nu, x)) < 2e-12 * env + 1e-13


class TestBesselJp:
    def test_matches_scipy(self):
        x = np.linspace(0.05, 120.0, 700)
        for nu in (0.0, 0.5, 2.3):
            assert_allclose(sf.bessel_jp(nu, x), sp.jvp(nu, x), atol=2e-12)


class TestBesselIScaled:
    def test_at_zero(self):
        assert sf.bessel_i_scaled(0.0, 0.0) == 1.0
        assert sf.bessel_i_scaled(1.3, 0.0) == 0.0

    def test_half_integer_closed_form(self):
        # e^{-1} sqrt(2/pi) sinh(1)
        assert sf.bessel_i_scaled(0.5, 1.0) == pytest.approx(
            0.34495131388824463, rel=1e-12)

    def test_frozen_series_oracle(self):
        # extended-precision series at nu=1.3, x=50 (quadrature regime here)
        assert sf.bessel_i_scaled(1.3, 50.0) == pytest.approx(
            0.055604215016483002, rel=1e-11)

    @pytest.mark.parametrize("nu", [0.0, 0.25, 0.5, 1.3, 2.5, 10.0])
    def test_against_scipy_grid(self, nu):
        x = np.concatenate([np.linspace(1e-3, 29.9, 500),
                            np.linspace(30.1, 2000.0, 700)])
        mine = sf.bessel_i_scaled(nu, x)
        ref = sp.ive(nu, x)
        keep = ref > 1e-250
        assert_allclose(mine[keep], ref[keep], rtol=5e-12)

    def test_positive(self):
        x = np.linspace(1e-3, 500.0, 1000)
        for nu in (0.0, 0.5, 3.3, 20.5):
            v = sf.bessel_i_scaled(nu, x)
            assert np.all(v > 0.0)

    def test_large_order_regime(self):
        # moderate nu^2/x: quadrature branch must track the reference
        for nu, x in ((40.5, 300.0), (40.5, 1500.0), (80.0, 900.0)):
            assert sf.bessel_i_scaled(nu, x) == pytest.approx(
                float(sp.ive(nu, x)), rel=1e-10)

    def test_domain_error(self):
        with pytest.raises(sf.SpecFunError):
            sf.bessel_i_scaled(1.0, -0.1)


class TestBesselZeros:
    def test_half_integer_pi_multiples(self):
        z = sf.bessel_zeros(0.5, 3)
        assert_allclose(z, [math.pi, 2 * math.pi, 3 * math.pi], rtol=1e-13)

    def test_frozen_first_zero(self):
        # bisection oracle on J_0 to 1e-13
        assert sf.bessel_zeros(0.0, 1)[0] == pytest.approx(
            2.404825557695773, abs=1e-12)

    def test_residuals_and_ordering(self):
        for nu in (0.0, 0.9, 2.7, 5.8):
            z = sf.bessel_zeros(nu, 64)
            assert np.all(np.diff(z) > 0.0)
            assert np.max(np.abs(sf.bessel_j(nu, z))) <= 1e-11

    def test_against_scipy_integer_orders(self):
        for n in (0, 1, 3):
            assert_allclose(sf.bessel_zeros(float(n), 200),
                            sp.jn_zeros(n, 200), rtol=1e-12)

    def test_interlacing(self):
        # zeros of J_nu and J_{nu+1} strictly interlace
        for nu in (0.0, 0.5, 1.7, 2.3):
            a = sf.bessel_zeros(nu, 40)
            b = sf.bessel_zeros(nu + 1.0, 40)
            assert np.all(a[:-1] < b[:-1])
            assert np.all(b[:-1] < a[1:])

    def test_count_validation(self):
        with pytest.raises(sf.SpecFunError):
            sf.bessel_zeros(1.0, 0)


class TestLegendre:
    def test_low_orders(self):
        mu = np.linspace(-1.0, 1.0, 41)
        tab = sf.legendre_p_table(3, mu)
        assert_allclose(tab[0], np.ones_like(mu))
        assert_allclose(tab[1], mu)
        assert_allclose(tab[2], 0.5 * (3 * mu**2 - 1), atol=1e-14)
        assert_allclose(tab[3], 0.5 * (5 * mu**3 - 3 * mu), atol=1e-14)

    def test_endpoint_values(self):
        tab = sf.legendre_p_table(25, np.array([1.0, -1.0]))
        assert_allclose(tab[:, 0], np.ones(26), atol=1e-13)
        assert_allclose(tab[:, 1], (-1.0) ** np.arange(26), atol=1e-13)

    def test_against_scipy(self):
        mu = np.linspace(-1.0, 1.0, 101)
        tab = sf.legendre_p_table(40, mu)
        for k in (5, 17, 40):
            assert_allclose(tab[k], sp.eval_legendre(k, mu), atol=1e-11)


def test_selftest_report():
    rep = sf.selftest()
    assert rep["recurrence_max_abs"] < 1e-10
    assert rep["half_integer_j_max_abs"] < 1e-12
    assert rep["half_integer_i_max_rel"] < 1e-12
    assert rep["zero_residual_max"] < 1e-11
    assert rep["gamma_recursion_max_rel"] < 1e-12
