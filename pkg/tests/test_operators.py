import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

import invsqnls.hankel as hk
import invsqnls.operators as op


def params(n=3, a=0.0, p=3.0):
    return op.ModelParams(n=n, a=a, p=p)


class TestConstants:
    def test_lambda_n_values(self):
        assert op.lambda_n(3) == 0.25
        assert op.lambda_n(4) == 1.0
        assert op.lambda_n(6) == 4.0

    def test_lambda_n_rejects_bad_dimension(self):
        with pytest.raises(op.ModelError):
            op.lambda_n(2)
        with pytest.raises(op.ModelError):
            op.lambda_n(3.5)

    def test_hardy_constant(self):
        assert op.hardy_constant(3) == 4.0
        assert op.hardy_constant(4) == 1.0
        assert op.hardy_constant(10) == pytest.approx(1.0 / 16.0, rel=1e-15)

    def test_kinetic_bound_constant(self):
        assert op.kinetic_bound_constant(params(3, 0.0)) == 2.0
        assert op.kinetic_bound_constant(params(3, -0.1)) == \
            pytest.approx(10.0 / 3.0, rel=1e-14)
        assert op.kinetic_bound_constant(params(4, -0.75)) == \
            pytest.approx(8.0, rel=1e-14)

    def test_kinetic_constant_is_two_for_attractive_free_cases(self):
        # min hits 1 for every a >= 0
        assert op.kinetic_bound_constant(params(5, 2.3)) == 2.0

    def test_sphere_area(self):
        assert op.sphere_area(3) == pytest.approx(4.0 * math.pi, rel=1e-15)
        assert op.sphere_area(4) == pytest.approx(2.0 * math.pi ** 2, rel=1e-15)


class TestModelParams:
    def test_valid_construction(self):
        m = params(3, -0.2, 3.0)
        assert m.lam == 0.25

    def test_coupling_threshold_enforced(self):
        with pytest.raises(op.ModelError):
            params(3, -0.25, 3.0)  # exactly -lambda_3
        with pytest.raises(op.ModelError):
            params(4, -1.5, 2.5)

    def test_exponent_must_exceed_one(self):
        with pytest.raises(op.ModelError):
            params(3, 0.0, 1.0)

    def test_dimension_validation(self):
        with pytest.raises(op.ModelError):
            params(2, 0.0, 3.0)

    def test_intercritical_flag(self):
        assert params(3, 0.0, 3.0).intercritical
        assert not params(3, 0.0, 2.0).intercritical  # below 1 + 4/n
        assert not params(3, 0.0, 5.0).intercritical  # at 1 + 4/(n-2)
        assert params(4, 0.0, 2.5).intercritical

    def test_scattering_condition_flag(self):
        assert params(3, 0.0, 3.0).scattering_condition
        assert not params(3, -0.1, 3.0).scattering_condition
        # n >= 4 allows slightly negative coupling: threshold
        # 4/(p+1)^2 - lambda_n = 4/16 - 1 = -0.75 at n=4, p=3
        assert params(4, -0.5, 3.0).scattering_condition
        assert not params(4, -0.9, 3.0).scattering_condition


class TestSectorSpec:
    def test_ground_sector_free_coupling(self):
        s = op.SectorSpec.from_params(params(3, 0.0), 0)
        assert s.nu == pytest.approx(0.5, abs=1e-15)
        s4 = op.SectorSpec.from_params(params(4, 0.0), 0)
        assert s4.nu == pytest.approx(1.0, abs=1e-15)

    def test_ground_order_is_root_of_shifted_threshold(self):
        m = params(3, -3.0 / 16.0)
        s = op.SectorSpec.from_params(m, 0)
        assert s.nu == pytest.approx(math.sqrt(m.lam + m.a), rel=1e-15)
        assert s.nu == pytest.approx(0.25, rel=1e-14)

    def test_rejects_negative_sector(self):
        with pytest.raises(op.ModelError):
            op.SectorSpec.from_params(params(), -1)

    @given(a=st.floats(-0.24, 8.0), kmax=st.integers(1, 12))
    @settings(max_examples=50, deadline=None)
    def test_orders_strictly_increase(self, a, kmax):
        m = params(3, a, 3.0)
        nus = [op.SectorSpec.from_params(m, k).nu for k in range(kmax + 1)]
        assert all(b > c for b, c in zip(nus[1:], nus))


class TestSigma:
    def test_frozen_values(self):
        assert op.sigma_a(params(3, 0.0)) == 0.0
        # sqrt(1 - 3/4) = 1/2 so sigma = 1/2 - 1/4
        assert op.sigma_a(params(3, -3.0 / 16.0)) == pytest.approx(0.25, abs=1e-15)
        # sqrt(4 - 3) = 1 so sigma = 1 - 1/2
        assert op.sigma_a(params(4, -0.75)) == pytest.approx(0.5, abs=1e-15)

    @given(n=st.sampled_from([3, 4, 5, 6]), x=st.floats(0.0, 50.0))
    @settings(max_examples=50, deadline=None)
    def test_nonpositive_for_repulsive_coupling(self, n, x):
        assert op.sigma_a(params(n, x, 3.0 if n == 3 else 2.2)) <= 0.0

    @given(n=st.sampled_from([3, 4, 5, 6]), frac=st.floats(0.01, 0.99))
    @settings(max_examples=50, deadline=None)
    def test_range_for_attractive_coupling(self, n, frac):
        a = -frac * op.lambda_n(n)
        s = op.sigma_a(params(n, a, 3.0 if n == 3 else 2.2))
        assert 0.0 < s < (n - 2) / 2.0


class TestSobolevWindow:
    def test_free_coupling_windows(self):
        r0, r1 = op.sobolev_window(params(3, 0.0))
        assert (r0, r1) == (1.0, pytest.approx(3.0, rel=1e-15))
        r0, r1 = op.sobolev_window(params(4, 0.0))
        assert (r0, r1) == (1.0, pytest.approx(4.0, rel=1e-15))

    def test_attractive_coupling_window(self):
        r0, r1 = op.sobolev_window(params(3, -3.0 / 16.0))
        assert r0 == pytest.approx(12.0 / 11.0, rel=1e-14)
        assert r1 == pytest.approx(12.0 / 5.0, rel=1e-14)

    def test_upper_endpoint_unbounded_for_strong_repulsion(self):
        # the max in the denominator hits zero once a >= n - 1
        r0, r1 = op.sobolev_window(params(3, 2.0))
        assert r0 == 1.0
        assert r1 is op.UNBOUNDED
        _, r1 = op.sobolev_window(params(4, 5.0))
        assert r1 is op.UNBOUNDED

    def test_unbounded_marker_is_singleton_with_clear_repr(self):
        assert repr(op.UNBOUNDED) == "unbounded"
        assert op.Unbounded() is op.UNBOUNDED

    @given(n=st.sampled_from([3, 4, 5, 6]), frac=st.floats(-0.99, 0.0),
           bump=st.floats(0.0, 10.0))
    @settings(max_examples=80, deadline=None)
    def test_window_brackets_two(self, n, frac, bump):
        a = frac * op.lambda_n(n) + bump
        r0, r1 = op.sobolev_window(params(n, a, 2.2))
        assert r0 < 2.0
        assert r1 is op.UNBOUNDED or r1 > 2.0


class TestAdmissible:
    def test_endpoint_pair(self):
        assert op.admissible(2.0, 6.0, 3)

    def test_trivial_pair(self):
        assert op.admissible(math.inf, 2.0, 3)

    def test_excluded_two_dimensional_endpoint(self):
        assert not op.admissible(2.0, math.inf, 2)

    def test_scaling_identity_enforced(self):
        assert op.admissible(8.0, 12.0 / 5.0, 3)
        assert not op.admissible(8.0, 2.5, 3)

    def test_lower_bounds(self):
        assert not op.admissible(1.9, 6.0, 3)
        assert not op.admissible(4.0, 1.5, 3)


class TestLwpExponents:
    def test_free_coupling_pair(self):
        plan = op.lwp_exponents(params(3, 1.0, 3.0))
        assert plan.q == pytest.approx(8.0, rel=1e-14)
        assert plan.r == pytest.approx(12.0 / 5.0, rel=1e-14)
        assert plan.regime == op.REGIME_NONNEGATIVE

    def test_free_coupling_pair_dimension_four(self):
        plan = op.lwp_exponents(params(4, 0.3, 2.4))
        assert plan.q == pytest.approx(4.857142857142858, rel=1e-14)
        assert plan.r == pytest.approx(2.518518518518518, rel=1e-14)

    def test_deep_negative_regime(self):
        plan = op.lwp_exponents(params(3, -0.1, 3.0))
        assert plan.regime == op.REGIME_DEEP
        assert plan.q == pytest.approx(9.607679644189552, rel=1e-13)
        assert plan.r == pytest.approx(2.3222812493559655, rel=1e-13)

    def test_mild_negative_regime(self):
        plan = op.lwp_exponents(params(5, -0.5, 2.0))
        assert plan.regime == op.REGIME_MILD
        assert plan.q == pytest.approx(7.628787878787878, rel=1e-13)
        assert plan.r == pytest.approx(2.234302196583093, rel=1e-13)

    def test_floor_rejected(self):
        # floor at n=3, p=3 is -4 * 0.25 * 3 / 16 = -0.1875
        with pytest.raises(op.ModelError):
            op.lwp_exponents(params(3, -0.2, 3.0))
        with pytest.raises(op.ModelError):
            op.lwp_exponents(params(3, -0.1875, 3.0))

    def test_exponent_window_enforced(self):
        with pytest.raises(op.ModelError):
            op.lwp_exponents(params(3, 0.0, 2.0))
        with pytest.raises(op.ModelError):
            op.lwp_exponents(params(3, 0.0, 5.0))

    def test_margin_validated(self):
        with pytest.raises(op.ModelError):
            op.lwp_exponents(params(3, -0.1, 3.0), margin=0.0)

    @given(n=st.sampled_from([3, 4, 5, 6]), pf=st.floats(0.1, 0.9),
           af=st.floats(-0.9, 0.0), bump=st.floats(0.0, 4.0))
    @settings(max_examples=80, deadline=None)
    def test_plans_are_admissible_with_margin(self, n, pf, af, bump):
        lo, hi = 1.0 + 4.0 / n, 1.0 + 4.0 / (n - 2)
        p = lo + pf * (hi - lo)
        lam = op.lambda_n(n)
        floor = -4.0 * lam * p / (p + 1.0) ** 2
        a = af * abs(floor) * 0.98 + (bump if af == 0.0 else 0.0)
        plan = op.lwp_exponents(params(n, a, p))
        assert op.admissible(plan.q, plan.r, n)
        assert abs(2.0 / plan.q - n * (0.5 - 1.0 / plan.r)) <= 1e-12
        assert plan.q >= 2.0 and plan.r >= 2.0
        assert plan.r0 < 2.0


def bump_field(g, width=1.0):
    r = g.nodes
    vals = r ** g.nu * np.exp(-(r / width) ** 2) * (1.0 + 0.3j * np.cos(r))
    return hk.RadialField(g, vals, sector=0, dim=3)


class TestApplyMultiplier:
    def test_unit_multiplier_is_identity(self):
        g = hk.make_grid(0.5, 96, 10.0)
        f = bump_field(g)
        out = op.apply_multiplier(f, lambda lam: np.ones_like(lam))
        assert_allclose(out.values, f.values, rtol=0, atol=1e-10)

    def test_unimodular_multiplier_preserves_mass(self):
        g = hk.make_grid(0.5, 96, 10.0)
        f = bump_field(g)
        out = op.apply_multiplier(f, lambda lam: np.exp(-1.7j * lam))
        before = np.sum(g.weights * np.abs(f.values) ** 2)
        after = np.sum(g.weights * np.abs(out.values) ** 2)
        assert after == pytest.approx(before, rel=1e-10)

    def test_eigenmode_scaling(self):
        g = hk.make_grid(1.5, 64, 9.0)
        m = 7
        f = hk.RadialField(g, g.kernel[m].astype(complex))
        out = op.apply_multiplier(f, lambda lam: lam)
        want = g.rho[m] ** 2 * f.values
        # quasi-orthogonality leaks ~1e-9 into other modes; compare in
        # units of the mode's own amplitude
        tol = 1e-7 * np.max(np.abs(want))
        assert_allclose(out.values, want, rtol=0, atol=tol)

    def test_composition_is_pointwise_product(self):
        g = hk.make_grid(0.8, 80, 9.0)
        f = bump_field(g)
        phi = lambda lam: np.exp(-0.3 * lam)
        psi = lambda lam: 1.0 / (1.0 + lam)
        two_step = op.apply_multiplier(op.apply_multiplier(f, phi), psi)
        one_step = op.apply_multiplier(f, lambda lam: phi(lam) * psi(lam))
        assert_allclose(two_step.values, one_step.values, rtol=0, atol=1e-10)

    def test_linearity(self):
        g = hk.make_grid(0.5, 64, 8.0)
        f1, f2 = bump_field(g, 1.0), bump_field(g, 1.7)
        phi = lambda lam: np.exp(-lam / 3.0)
        combo = f1.with_values(2.0 * f1.values - 1.5j * f2.values)
        lhs = op.apply_multiplier(combo, phi).values
        rhs = 2.0 * op.apply_multiplier(f1, phi).values \
            - 1.5j * op.apply_multiplier(f2, phi).values
        assert_allclose(lhs, rhs, rtol=0, atol=1e-12)

    def test_non_finite_multiplier_rejected(self):
        g = hk.make_grid(0.5, 32, 6.0)
        f = bump_field(g)
        with np.errstate(divide="ignore"), pytest.raises(op.ModelError):
            op.apply_multiplier(f, lambda lam: 1.0 / (lam - lam[0]))

    def test_sector_metadata_preserved(self):
        g = hk.make_grid(2.5, 32, 6.0)
        f = hk.RadialField(g, bump_field(g).values, sector=2, dim=3)
        out = op.apply_multiplier(f, lambda lam: lam)
        assert out.sector == 2 and out.dim == 3


class TestFractionalPower:
    def test_zero_power_is_identity(self):
        g = hk.make_grid(0.5, 64, 9.0)
        f = bump_field(g)
        out = op.fractional_power(f, 0.0)
        assert_allclose(out.values, f.values, rtol=0, atol=1e-10)

    def test_power_round_trip(self):
        g = hk.make_grid(0.5, 64, 9.0)
        f = bump_field(g)
        out = op.fractional_power(op.fractional_power(f, 1.0), -1.0)
        assert_allclose(out.values, f.values, rtol=0, atol=1e-9)

    def test_full_power_matches_finite_difference_laplacian(self):
        # ground sector, free coupling, three dimensions: the operator is
        # the radial Laplacian.  For u = exp(-r^2/2) the reduced field is
        # sqrt(r) u; compare (operator u)(r) against centered differences
        # of -u'' - (2/r) u' at interior nodes.
        g = hk.make_grid(0.5, 128, 12.0)
        u = lambda r: np.exp(-r * r / 2.0)
        f = hk.RadialField(g, np.sqrt(g.nodes) * u(g.nodes))
        out = op.fractional_power(f, 2.0)
        got = out.values.real / np.sqrt(g.nodes)
        h = 1e-4
        r = g.nodes
        up = (u(r + h) - u(r - h)) / (2.0 * h)
        upp = (u(r + h) - 2.0 * u(r) + u(r - h)) / (h * h)
        fd = -(upp + 2.0 / r * up)
        sel = (r > 0.5) & (r < 5.0)
        assert np.max(np.abs(got[sel] - fd[sel])) < 5e-7

    def test_exponent_range_enforced(self):
        g = hk.make_grid(0.5, 32, 6.0)
        with pytest.raises(op.ModelError):
            op.fractional_power(bump_field(g), 2.5)
        with pytest.raises(op.ModelError):
            op.fractional_power(bump_field(g), -3.0)


def cg_solve(field, shift, itmax=4000, tol=1e-13):
    # conjugate-direction iteration for (operator + shift) x = f in the
    # node-weighted inner product, using the multiplier only as a matvec
    g = field.grid
    w = g.weights

    def matvec(vals):
        probe = field.with_values(vals)
        return op.apply_multiplier(probe, lambda lam: lam + shift).values

    def inner(x, y):
        return np.real(np.sum(w * np.conj(x) * y))

    b = field.values
    x = np.zeros_like(b)
    resid = b - matvec(x)
    d = resid.copy()
    rs = inner(resid, resid)
    b0 = inner(b, b)
    for _ in range(itmax):
        ad = matvec(d)
        step = rs / inner(d, ad)
        x = x + step * d
        resid = resid - step * ad
        rs_new = inner(resid, resid)
        if rs_new <= tol * tol * b0:
            break
        d = resid + (rs_new / rs) * d
        rs = rs_new
    return x


class TestResolvent:
    def test_matches_conjugate_direction_solve(self):
        g = hk.make_grid(0.5, 64, 8.0)
        f = hk.RadialField(g, np.sqrt(g.nodes) * np.exp(-g.nodes ** 2))
        got = op.resolvent(f, -1.0)
        want = cg_solve(f, 1.0)
        assert_allclose(got.values, want, rtol=1e-8, atol=1e-12)

    def test_inverse_consistency(self):
        g = hk.make_grid(1.2, 64, 8.0)
        f = bump_field(g)
        alpha = -0.7 + 0.9j
        back = op.apply_multiplier(op.resolvent(f, alpha),
                                   lambda lam: lam - alpha)
        assert_allclose(back.values, f.values, rtol=0, atol=1e-9)

    def test_spectrum_standoff_enforced(self):
        g = hk.make_grid(0.5, 32, 6.0)
        f = bump_field(g)
        with pytest.raises(op.ModelError, match="imaginary"):
            op.resolvent(f, 1.0)
        with pytest.raises(op.ModelError):
            op.resolvent(f, 4.0 + 1e-9j)

    def test_negative_real_shift_accepted(self):
        g = hk.make_grid(0.5, 32, 6.0)
        out = op.resolvent(bump_field(g), -1.0)
        assert np.all(np.isfinite(out.values.view(float)))
