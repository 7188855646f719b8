import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from supportfn.cutoffs import Constant, CtnFamily, ExpRate, PowerDecay
from supportfn.errors import InvalidParameterError
from supportfn.model import HolPoly, Orientation, SuperlevelSet, Weight, superlevel_radius
from supportfn.quadrature import (
    RadialIntegralSpec,
    RegionQuadSpec,
    disc_samples,
    exp_weighted_integral,
    layer_cake_discrete,
    layer_cake_rhs,
    monte_carlo_sum,
    radial_integral,
    region_integral,
)

TWO_POLE = Weight.log_poles((1.0, 0.5), (0, 0.5), blaschke=True)


def radial_oracle(k, alpha, t, weight, bounds, c=None):
    """2 pi int r^{2k+1} w(r) dr directly in r (no change of variables)."""
    rt = math.exp(-t / (2 * alpha))
    if weight == "exp_psi":
        w = lambda r: r ** (-2 * alpha)
    elif weight == "c":
        w = lambda r: float(c(-2 * alpha * math.log(r)))
    else:
        w = lambda r: 1.0
    lo, hi = (0.0, rt) if bounds == "inner" else (rt, 1.0)
    val = integrate.quad(lambda r: r ** (2 * k + 1) * w(r), lo, hi, epsabs=0, epsrel=1e-12, limit=400)[0]
    return 2 * math.pi * val


class TestRadial:
    @pytest.mark.parametrize("t", [0.1, 1.0, 5.0])
    def test_annulus_exp_psi(self, t):
        r = radial_integral(RadialIntegralSpec(0, 1.0, t, "exp_psi", "annulus"))
        assert r.value == pytest.approx(math.pi * t, rel=1e-14)

    @pytest.mark.parametrize("t", [0.0, 0.5, 3.0])
    def test_inner_constant(self, t):
        r = radial_integral(RadialIntegralSpec(0, 1.0, t, "c", "inner", c=Constant(1.0)))
        assert r.value == pytest.approx(math.pi * math.exp(-t), rel=1e-14)

    def test_divergent(self):
        c = ExpRate(0.5)
        r = radial_integral(RadialIntegralSpec(0, 2.0, 1.0, "c", "inner", c=c))
        assert r.diverged and r.value == math.inf
        # partial integrals in s grow without bound: (1/4) * (L - t) * 2 pi
        part = [integrate.quad(lambda s: math.exp(c.log(s) - s / 2), 1.0, L)[0] for L in (1e3, 1e6)]
        assert part[1] > 1e5 and part[1] / part[0] > 900

    @given(k=st.integers(0, 4), alpha=st.floats(0.3, 3.0), t=st.floats(0.05, 8.0),
           which=st.sampled_from(["one-annulus", "exp-annulus", "c-inner", "one-inner"]),
           c=st.sampled_from([Constant(2.0), PowerDecay(2.0), CtnFamily(1.0, 4), ExpRate(0.3)]))
    def test_against_direct_r_integral(self, k, alpha, t, which, c):
        weight, bounds = which.split("-")
        weight = {"one": "one", "exp": "exp_psi", "c": "c"}[weight]
        if weight == "c" and (k + 1) / alpha <= c.tail_rate:
            return
        res = radial_integral(RadialIntegralSpec(k, alpha, t, weight, bounds, c=c))
        assert not res.diverged
        ref = radial_oracle(k, alpha, t, weight, bounds, c)
        assert res.value == pytest.approx(ref, rel=1e-8, abs=1e-300)

    def test_inner_nonincreasing(self):
        ts = np.linspace(0, 10, 41)
        for c in (Constant(1.0), PowerDecay(2.0), CtnFamily(1.0, 4)):
            vals = [radial_integral(RadialIntegralSpec(1, 1.5, t, "c", "inner", c=c)).value for t in ts]
            assert np.all(np.diff(vals) <= 0)

    @pytest.mark.parametrize("kw", [dict(k=-1), dict(alpha=0), dict(t=-1), dict(weight="x"),
                                    dict(bounds="x"), dict(weight="c")])
    def test_invalid(self, kw):
        base = dict(k=0, alpha=1.0, t=1.0, weight="one", bounds="annulus")
        base.update(kw)
        with pytest.raises(InvalidParameterError):
            RadialIntegralSpec(**base)


class TestExpWeighted:
    def test_closed_and_quad_agree(self):
        c = PowerDecay(2.0)
        r = exp_weighted_integral(c, 0.5, 0.0, math.inf)
        ref = integrate.quad(lambda s: math.exp(-0.5 * s) / (1 + s) ** 2, 0, math.inf, epsrel=1e-12)[0]
        assert r.value == pytest.approx(ref, rel=1e-9)

    def test_critical_rate_powdecay_converges(self):
        # lam equal to the growth rate of c: integrable because (1+s)^-2 is
        r = exp_weighted_integral(PowerDecay(2.0), 0.0, 0.0, math.inf)
        assert r.value == pytest.approx(1.0, rel=1e-8)

    def test_bounds_order(self):
        with pytest.raises(InvalidParameterError):
            exp_weighted_integral(Constant(1.0), 1.0, 2.0, 1.0)


class TestRegion:
    def test_annulus_area(self):
        region = SuperlevelSet(Weight.radial(1.0), 1.0)
        ref = math.pi * (1 - math.exp(-1))
        assert ref == pytest.approx(1.98587, abs=1e-5)
        mc = region_integral(RegionQuadSpec(region, lambda z, p: np.ones(z.shape)))
        assert abs(mc.value - ref) <= mc.abs_error_estimate and mc.seed == 0
        grid = region_integral(RegionQuadSpec(region, lambda z, p: np.ones(z.shape), "tensor-grid", 10**6))
        assert grid.value == pytest.approx(ref, rel=1e-12) and grid.converged

    def test_zero_integrand(self):
        region = SuperlevelSet(Weight.radial(1.0), 1.0)
        for method in ("monte-carlo", "tensor-grid"):
            r = region_integral(RegionQuadSpec(region, lambda z, p: np.zeros(z.shape), method, 10**5))
            assert r.value == 0 and r.abs_error_estimate == 0

    def test_exp_psi_mc(self):
        region = SuperlevelSet(Weight.radial(1.0), 1.0)
        r = region_integral(RegionQuadSpec(region, lambda z, p: np.exp(-p), seed=11))
        assert abs(r.value - math.pi) <= r.abs_error_estimate

    def test_non_converged_flag(self):
        region = SuperlevelSet(TWO_POLE, 1.0)
        r = region_integral(RegionQuadSpec(region, lambda z, p: np.exp(-p), "tensor-grid", 2000, rtol=1e-15))
        assert not r.converged and math.isfinite(r.value)

    def test_budget_floor(self):
        with pytest.raises(InvalidParameterError):
            RegionQuadSpec(SuperlevelSet(Weight.radial(1.0), 1.0), lambda z, p: z, budget=10)

    def test_seeded_reproducible(self):
        a, _ = disc_samples(5000, 3)
        b, _ = disc_samples(5000, 3)
        assert np.array_equal(a, b) and np.all(np.abs(a) < 1)

    def test_oracle_agreement_rate(self):
        rng = np.random.default_rng(2024)
        hits = 0
        for i in range(50):
            alpha = rng.uniform(0.3, 2.5)
            t = rng.uniform(0.2, 4.0)
            k = int(rng.integers(0, 4))
            region = SuperlevelSet(Weight.radial(alpha), t)
            mc = region_integral(RegionQuadSpec(region, lambda z, p, k=k: np.abs(z) ** (2 * k), seed=i))
            exact = radial_integral(RadialIntegralSpec(k, alpha, t, "one", "annulus")).value
            hits += abs(mc.value - exact) <= mc.abs_error_estimate
        assert hits >= 47

    def test_monte_carlo_sum(self):
        v, e = monte_carlo_sum(np.ones(100), 100)
        assert v == math.pi and e == 0


class TestLayerCake:
    def test_sharp(self):
        r = layer_cake_rhs(Weight.radial(1.0), HolPoly((1,)), 1.0)
        assert r.value == pytest.approx(math.pi, rel=1e-12)

    def test_small_t(self):
        vals = [layer_cake_rhs(Weight.radial(1.0), HolPoly((1,)), t).value for t in (1e-1, 1e-3, 1e-6)]
        assert vals[-1] < 1e-5 and vals[0] > vals[1] > vals[2]

    def test_alpha2(self):
        w, F = Weight.radial(2.0), HolPoly((1, 1))
        lhs = sum(radial_integral(RadialIntegralSpec(k, 2.0, 2.0, "exp_psi", "annulus")).value for k in (0, 1))
        assert layer_cake_rhs(w, F, 2.0).value == pytest.approx(lhs, rel=1e-6)

    def test_monte_carlo_against_grid(self):
        F = HolPoly((1, 1))
        region = SuperlevelSet(TWO_POLE, 1.0)
        lhs = region_integral(RegionQuadSpec(region, lambda z, p: np.abs(F(z)) ** 2 * np.exp(-p),
                                             "tensor-grid", 10**7)).value
        rhs = layer_cake_rhs(TWO_POLE, F, 1.0, budget=10**6)
        assert abs(rhs.value - lhs) / lhs < 1e-2
        assert rhs.seed == 0

    def test_step_function_self_test(self):
        # f piecewise constant on a 4 x 4 grid of unit cells
        rng = np.random.default_rng(5)
        f = rng.integers(0, 5, size=(4, 4)).astype(float)
        area = np.full(f.shape, 0.25 ** 2)
        direct = float((f * area).sum())
        assert layer_cake_discrete(f.ravel(), area.ravel()) == pytest.approx(direct, rel=1e-15)

    @given(st.lists(st.floats(0, 100), min_size=1, max_size=50), st.integers(0, 2**31))
    def test_layer_cake_discrete(self, values, seed):
        w = np.random.default_rng(seed).random(len(values))
        assert layer_cake_discrete(values, w) == pytest.approx(float(np.dot(values, w)), rel=1e-12, abs=1e-12)

    def test_rejects_t(self):
        with pytest.raises(InvalidParameterError):
            layer_cake_rhs(Weight.radial(1.0), HolPoly((1,)), 0.0)
