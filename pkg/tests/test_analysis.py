import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from supportfn import analysis
from supportfn.analysis import (
    HFunction,
    OdePair,
    concavity_check,
    differential_inequality_check,
    ode_residuals,
    radial_g,
    radial_g_derivative,
    radial_g_grid,
    slab_lower_bound_check,
    support_lower_bound,
)
from supportfn.cutoffs import Constant, CtnFamily, Custom, ExpRate, PowerDecay
from supportfn.errors import DomainError, InvalidParameterError
from supportfn.model import HolPoly, Weight

mp.mp.dps = 30


def mp_h(c, t):
    return float(mp.quad(lambda l: mp.mpf(float(c(float(l)))) * mp.e ** (-l), [t, t + 5, t + 20, mp.inf]))


class TestH:
    @pytest.mark.parametrize("t", [0.0, 0.3, 2.0, 15.0])
    def test_closed_forms(self, t):
        assert HFunction(Constant(2.0)).h(t) == pytest.approx(2 * math.exp(-t), rel=1e-15)
        assert HFunction(ExpRate(0.5)).h(t) == pytest.approx(2 * math.exp(-t / 2), rel=1e-14)

    @pytest.mark.parametrize("t", [0.0, 1e-5, 0.7, 3.0, 12.0, 39.0, 45.0])
    def test_power_decay_oracle(self, t):
        c = PowerDecay(2.0)
        assert HFunction(c).h(t) == pytest.approx(mp_h(c, t), rel=1e-11)

    def test_ctn_oracle(self):
        c = CtnFamily(1.0, 4)
        H = HFunction(c)
        for t in (0.0, 0.9, 1.2, 1.5, 3.0):
            ref = float(mp.quad(lambda l: mp.mpf(float(c(float(l)))) * mp.e ** (-l),
                                [t] + [b for b in (1.0, 1.5) if b > t] + [mp.inf]))
            assert H.h(t) == pytest.approx(ref, rel=1e-10)

    @given(st.floats(0.0, 35.0), st.sampled_from([Constant(1.0), ExpRate(0.3), PowerDecay(2.0), PowerDecay(0.5)]))
    def test_inverse_round_trip(self, t, c):
        H = HFunction(c)
        assert abs(H.h(H.inv(H.h(t))) - H.h(t)) <= 1e-9 * H.h0

    def test_inverse_edges(self):
        H = HFunction(PowerDecay(2.0))
        assert H.inv(H.h0) == 0.0
        with pytest.raises(DomainError):
            H.inv(2 * H.h0)
        with pytest.raises(DomainError):
            H.inv(0.0)

    def test_negative_t(self):
        with pytest.raises(InvalidParameterError):
            HFunction(Constant(1.0)).h(-1.0)

    def test_derivative(self):
        H = HFunction(PowerDecay(2.0))
        d = 1e-6
        assert H.dh(1.0) == pytest.approx((H.h(1 + d) - H.h(1 - d)) / (2 * d), rel=1e-7)


class TestSupportBound:
    def test_constant(self):
        for t in (0.5, 2.0):
            assert support_lower_bound(Constant(1.0), t, 3.0) == pytest.approx(3 * math.exp(-t), rel=1e-15)

    def test_zero(self):
        assert support_lower_bound(PowerDecay(2.0), 0.0, 1.7) == 1.7

    def test_exp(self):
        assert support_lower_bound(ExpRate(0.5), 1.0, 2.0) == pytest.approx(2 * math.exp(-0.5), rel=1e-14)

    def test_invalid(self):
        with pytest.raises(DomainError):
            support_lower_bound(Constant(1.0), 1.0, math.inf)
        with pytest.raises(InvalidParameterError):
            support_lower_bound(Constant(1.0), -1.0, 1.0)

    @given(st.floats(0.3, 2.9), st.floats(0.0, 20.0))
    def test_holds_radial(self, alpha, t):
        w, F, c = Weight.radial(alpha), HolPoly((1, -1, 2)), PowerDecay(2.0)
        g0 = radial_g(w, F, c, 0.0)
        assert radial_g(w, F, c, t) >= support_lower_bound(c, t, g0) * (1 - 1e-10)


class TestRadialG:
    def test_grid_matches_solve(self):
        w, F, c = Weight.radial(2.5), HolPoly((1, 2, 3)), PowerDecay(2.0)
        ts = [0.0, 0.1, 1.0, 4.0, 17.0]
        grid = radial_g_grid(w, F, c, ts)
        for t, g in zip(ts, grid):
            assert g == pytest.approx(radial_g(w, F, c, t), rel=1e-11)

    def test_grid_unsorted(self):
        w, F, c = Weight.radial(1.5), HolPoly((1, 1)), ExpRate(0.2)
        ts = [3.0, 0.5, 1.0]
        assert np.allclose(radial_g_grid(w, F, c, ts), [radial_g(w, F, c, t) for t in ts], rtol=1e-12)

    def test_derivative(self):
        w, F, c = Weight.radial(2.5), HolPoly((1, 2, 3)), PowerDecay(2.0)
        d = 1e-5
        fd = (radial_g(w, F, c, 1 + d) - radial_g(w, F, c, 1 - d)) / (2 * d)
        assert radial_g_derivative(w, F, c, 1.0) == pytest.approx(fd, rel=1e-6)

    def test_derivative_needs_radial(self):
        w = Weight.log_poles((1.0, 0.5), (0, 0.5), blaschke=True)
        with pytest.raises(InvalidParameterError):
            radial_g_derivative(w, HolPoly((1,)), Constant(1.0), 1.0)


class TestConcavity:
    def test_sharp_linear(self):
        H = HFunction(Constant(1.0))
        rep = concavity_check(lambda t: radial_g(Weight.radial(1), HolPoly((1,)), Constant(1.0), t), H)
        assert rep.passed
        assert np.allclose(rep.phi, math.pi * rep.r, rtol=1e-9)

    @pytest.mark.parametrize("c", [Constant(1.0), PowerDecay(2.0), ExpRate(0.3), CtnFamily(1.0, 4)])
    def test_radial_concave(self, c):
        w, F = Weight.radial(2.999), HolPoly((3, 2, 0, 1))
        rep = concavity_check(lambda ts: radial_g_grid(w, F, c, ts), HFunction(c), vectorized=True)
        assert rep.passed

    def test_detects_convex(self):
        H = HFunction(Constant(1.0))
        rep = concavity_check(lambda t: H.h(t) ** 2, H)
        assert not rep.passed

    def test_infinite(self):
        H = HFunction(ExpRate(0.5))
        with pytest.raises(DomainError):
            concavity_check(lambda t: math.inf, H)


class TestDiffIneq:
    def test_sharp_equality(self):
        w, F, c = Weight.radial(1), HolPoly((1,)), Constant(1.0)
        G = lambda t: radial_g(w, F, c, t)
        exact = differential_inequality_check(G, c, 1.0, 0.5, dG=lambda t: radial_g_derivative(w, F, c, t))
        assert exact.margin == pytest.approx(0.0, abs=1e-14)
        fd = differential_inequality_check(G, c, 1.0, 0.5)
        assert abs(fd.margin) < 1e-6 and fd.bias < 1e-3

    def test_grid(self):
        # ExpRate(0.5) makes G(0) infinite for alpha = 2, so the finite substitute PowerDecay is used
        w, F = Weight.radial(2), HolPoly((1, 1))
        for c in (PowerDecay(2.0), ExpRate(0.2)):
            G = lambda t: radial_g(w, F, c, t)
            for t0 in np.linspace(0.1, 5, 10):
                for t1 in np.linspace(0, 5, 10):
                    r = differential_inequality_check(G, c, t0, t1)
                    assert r.margin >= -1e-6 * max(1.0, abs(r.lhs))

    def test_small_t0(self):
        w, F, c = Weight.radial(1.5), HolPoly((1, 1)), PowerDecay(2.0)
        G = lambda t: radial_g(w, F, c, t)
        dG = lambda t: radial_g_derivative(w, F, c, t)
        margins = [differential_inequality_check(G, c, t0, 1.0, dG=dG).margin for t0 in (1e-2, 1e-3, 1e-4)]
        assert all(m >= -1e-12 for m in margins)
        assert margins[-1] < margins[0]

    def test_invalid(self):
        G = lambda t: 1.0
        with pytest.raises(InvalidParameterError):
            differential_inequality_check(G, Constant(1.0), 0.0, 1.0)
        with pytest.raises(DomainError):
            differential_inequality_check(lambda t: math.inf, Constant(1.0), 1.0, 1.0)


class TestOde:
    @pytest.mark.parametrize("t", [0.01, 0.5, 1.0, 5.0, 20.0])
    def test_constant_closed(self, t):
        op = OdePair(Constant(1.0))
        H = -math.expm1(-t)
        u, u1, u2, s, s1, s2 = op.derivatives(t)
        assert u == pytest.approx(-math.log(H), rel=1e-14, abs=1e-300)
        assert s == pytest.approx((t - H) / H, rel=1e-14)
        assert u1 == pytest.approx(-math.exp(-t) / H, rel=1e-12)
        r1, r2, w, ds = ode_residuals(op, t)
        assert r1 < 1e-8 and r2 < 1e-8 and w > 0 and ds > 0

    @pytest.mark.parametrize("c", [ExpRate(0.5), PowerDecay(2.0), CtnFamily(1.0, 4)])
    @pytest.mark.parametrize("t", [0.05, 1.0, 3.0, 20.0])
    def test_residuals(self, c, t):
        r1, r2, w, ds = ode_residuals(OdePair(c), t)
        assert r1 < 1e-7 * max(1.0, 1.0 / float(c(t))) and r2 < 1e-8
        assert w > 0 and ds > 0

    def test_analytic_vs_fd(self):
        c = PowerDecay(2.0)
        a = OdePair(c).derivatives(1.3)
        b = OdePair(c, finite_differences=True).derivatives(1.3)
        assert np.allclose(a, b, rtol=1e-7)

    def test_custom_uses_fd(self):
        s = np.linspace(0, 30, 301)
        c = Custom(tuple(s), tuple(np.exp(-0.1 * s)))
        op = OdePair(c)
        assert op.finite_differences
        r1, r2, w, ds = ode_residuals(op, 2.0)
        assert r1 < 1e-5 and r2 < 1e-6

    def test_small_t(self):
        with pytest.raises(DomainError):
            OdePair(Constant(1.0)).derivatives(1e-5)


class TestSlab:
    @pytest.mark.parametrize("alpha", [1.0, 2.0, 2.999])
    def test_radial(self, alpha):
        w, F = Weight.radial(alpha), HolPoly((1, 1, 1))
        for t in (0.5, 2.0):
            r = slab_lower_bound_check(w, F, t, t / 2)
            assert r.skipped is None and r.margin >= -1e-12 * r.rhs

    def test_sharp_equality(self):
        r = slab_lower_bound_check(Weight.radial(1), HolPoly((1,)), 2.0, 0.7)
        assert r.margin == pytest.approx(0.0, abs=1e-14)

    def test_sentinel(self):
        r = slab_lower_bound_check(Weight.radial(0.5), HolPoly((1,)), 1.0, 0.5)
        assert r.skipped == "C is 0" and math.isnan(r.margin)

    def test_two_pole(self):
        w = Weight.log_poles((1.0, 0.5), (0, 0.5), blaschke=True)
        r = slab_lower_bound_check(w, HolPoly((1, 1)), 1.0, 0.5, quadrature="tensor-grid")
        assert r.margin >= -3 * r.error

    def test_invalid(self):
        with pytest.raises(InvalidParameterError):
            slab_lower_bound_check(Weight.radial(1), HolPoly((1,)), 1.0, 1.0)
