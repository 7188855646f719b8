"""End-to-end verification scenarios and the records they emit."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from . import analysis, cutoffs
from .cutoffs import ClassPFunction, Constant, CtnFamily, ExpRate, PowerDecay
from .extremal import ExtremalProblem, problem_norm, pythagoras_check, solve
from .model import HolPoly, Orientation, SuperlevelSet, Weight, jet_order, psi_eval
from .quadrature import (
    DEFAULT_MC_SAMPLES,
    RadialIntegralSpec,
    RegionQuadSpec,
    disc_samples,
    layer_cake_rhs,
    monte_carlo_sum,
    reduced_radial,
    region_integral,
)

CHECKS = (
    "theorem_ratio", "sharpness", "prop_p", "concavity", "pythagoras", "layer_cake",
    "slab_bound", "diff_ineq", "openness_demo", "cutoff_family", "ode",
)
STATUSES = ("pass", "fail", "skipped", "non-converged")

CATALOG_ALPHAS = (0.5, 1.0, 1.5, 2.0, 2.999)
CATALOG_POLYS = {"1": (1,), "z": (0, 1), "1+z": (1, 1), "3+2z+z^3": (3, 2, 0, 1)}
CATALOG_CUTOFFS = (Constant(1.0), ExpRate(0.5), PowerDecay(2.0), CtnFamily(1.0, 4))
CATALOG_T = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
TWO_POLE_T = (0.5, 1.0, 2.0)
LAYER_CAKE_T = (0.5, 1.0, 2.0)
ODE_CUTOFFS = (Constant(1.0), ExpRate(0.5), PowerDecay(2.0))
ODE_T = tuple(np.geomspace(0.01, 20.0, 20))
OPENNESS_EPS = tuple(np.geomspace(1e-6, 0.5, 61))
PYTHAGORAS_DRAWS = 20
LAYER_CAKE_SAMPLES = 1_000_000


@dataclass(frozen=True)
class Tolerances:
    """Pass tolerances.

    ``closed_rel`` is relative to the compared magnitude on closed-form
    paths; Monte-Carlo rows use the 3-sigma estimate plus ``mc_rel``.
    """

    closed_rel: float = 1e-9
    mc_rel: float = 1e-3
    pythagoras_radial: float = 1e-10
    pythagoras_gram: float = 1e-6
    layer_cake_radial: float = 1e-6
    layer_cake_mc: float = 1e-2
    ode: float = 1e-6
    cutoff: float = 1e-12


@dataclass(frozen=True)
class Scenario:
    id: str
    weight: Weight
    F: HolPoly
    c: ClassPFunction | None = None
    t_grid: tuple = CATALOG_T
    checks: tuple = ()
    seed: int = 0
    samples: int = DEFAULT_MC_SAMPLES
    basis_degree: int = 16

    @property
    def monte_carlo(self) -> bool:
        return not self.weight.is_radial


@dataclass(frozen=True)
class VerificationRecord:
    scenario: str
    check: str
    t: float | None
    lhs: float
    rhs: float
    bound: float
    margin: float
    tolerance: float
    status: str
    seed: int | None = None
    wall_ms: float = math.nan
    reason: str = field(default="", compare=False)

    def sort_key(self):
        return (self.scenario, self.check, -math.inf if self.t is None else self.t)


def make_record(scenario, check, t, lhs, rhs, bound, margin, tolerance, seed=None,
                converged=True, skipped=None, wall_ms=math.nan) -> VerificationRecord:
    """Build a record; ``fail`` exactly when ``margin < -tolerance`` (NaN margins fail)."""
    if skipped is not None:
        status = "skipped"
    elif not converged:
        status = "non-converged"
    elif margin >= -tolerance:
        status = "pass"
    else:
        status = "fail"
    return VerificationRecord(scenario, check, t, float(lhs), float(rhs), float(bound),
                              float(margin), float(tolerance), status, seed, wall_ms,
                              skipped or "")


class _Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = 1e3 * (time.perf_counter() - self.t0)


def _timed(fn):
    def wrapper(*args, **kw):
        with _Timer() as tm:
            recs = list(fn(*args, **kw))
        per = tm.ms / max(len(recs), 1)
        return [replace(r, wall_ms=per) for r in recs]
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# --- radial sums over all coefficients of F -------------------------------------

def _radial_sum(w: Weight, F: HolPoly, t, weight, bounds, c=None):
    """Reduced ``int |F|^2 (weight)`` over a radial region; ``inf`` on divergence."""
    G = F.about(w.base_point)
    total = 0.0
    for k, a in enumerate(G.coeffs):
        if a != 0:
            total += abs(a) ** 2 * reduced_radial(
                RadialIntegralSpec(k, w.alpha, t, weight, bounds, c=c)).value
    return total


def _tag(c) -> str:
    """Density spec usable inside a scenario id (no commas)."""
    return c.spec.replace(",", "_")


def support_bound(t) -> float:
    """``t/(1 - e^{-t})``."""
    return t / -math.expm1(-t)


def ratio_parts(s: Scenario, t):
    """``(numerator, C, ratio, rel_err, converged)`` for the theorem ratio.

    Radial values are in units of ``pi``; ``rel_err`` is the combined
    relative 3-sigma error on the Monte-Carlo path and 0 otherwise.
    """
    w, F = s.weight, s.F
    if not s.monte_carlo:
        num = _radial_sum(w, F, t, "exp_psi", "annulus")
        C = solve(ExtremalProblem.c_on_dt(w, F, t)).reduced
        ratio = math.inf if C == 0 or math.isinf(C) else num / C
        return num, C, ratio, 0.0, True
    region = SuperlevelSet(w, t, Orientation.AT_LEAST)
    res = region_integral(RegionQuadSpec(
        region, lambda z, psi: np.abs(F(z)) ** 2 * np.exp(-psi), "monte-carlo", s.samples, s.seed))
    sol = solve(ExtremalProblem.c_on_dt(w, F, t, basis_degree=s.basis_degree,
                                        samples=s.samples, seed=s.seed))
    C = sol.value
    if C == 0 or math.isinf(C):
        return res.value, C, math.inf, 0.0, sol.converged_in_degree
    rel = math.hypot(res.abs_error_estimate / res.value, sol.error_estimate / C)
    return res.value, C, res.value / C, rel, sol.converged_in_degree


@_timed
def check_theorem_ratio(s: Scenario, t, tol: Tolerances = Tolerances()):
    num, C, ratio, rel, conv = ratio_parts(s, t)
    bound = support_bound(t)
    if s.monte_carlo:
        tolerance = (rel * ratio + tol.mc_rel * bound) if math.isfinite(ratio) else 0.0
    else:
        tolerance = tol.closed_rel * bound
    margin = ratio - bound if math.isfinite(ratio) else math.inf
    yield make_record(s.id, "theorem_ratio", t, ratio, C, bound, margin, tolerance,
                      s.seed if s.monte_carlo else None, conv)


SHARP = Scenario("sharp", Weight.radial(1.0), HolPoly((1,)), Constant(1.0))


@_timed
def check_sharpness(t_grid=CATALOG_T, tol: Tolerances = Tolerances()):
    """``|ratio - t/(1-e^{-t})|`` on the canonical case, closed-form path."""
    for t in t_grid:
        _, _, ratio, _, _ = ratio_parts(SHARP, t)
        bound = support_bound(t)
        yield make_record(SHARP.id, "sharpness", t, ratio, ratio, bound,
                          -abs(ratio - bound), tol.closed_rel * bound)


def _sublevel_integral(s: Scenario, t):
    """``int_{psi<-t} |F|^2 c(-psi)`` and its absolute error estimate."""
    w, F, c = s.weight, s.F, s.c
    if not s.monte_carlo:
        return math.pi * _radial_sum(w, F, t, "c", "inner", c=c), 0.0
    if t == 0:
        z, _ = disc_samples(s.samples, s.seed)
        return monte_carlo_sum(np.abs(F(z)) ** 2 * c(-psi_eval(w, z)), z.size)
    res = region_integral(RegionQuadSpec(
        SuperlevelSet(w, t, Orientation.BELOW),
        lambda z, psi: np.abs(F(z)) ** 2 * c(-psi), "monte-carlo", s.samples, s.seed))
    return res.value, res.abs_error_estimate


def _g0(s: Scenario):
    sol = solve(ExtremalProblem.g_below(s.weight, s.F, 0.0, s.c, basis_degree=s.basis_degree,
                                        samples=s.samples, seed=s.seed))
    return sol


@_timed
def check_prop_p(s: Scenario, tol: Tolerances = Tolerances()):
    """``int_{psi<-t}|F|^2 c(-psi) >= (h(t)/h(0)) G(0)``, or the ``G(0) = inf`` dichotomy."""
    g0 = _g0(s)
    seed = s.seed if s.monte_carlo else None
    if math.isinf(g0.value):
        for t in s.t_grid:
            lhs, _ = _sublevel_integral(s, t)
            yield make_record(s.id, "prop_p", t, lhs, math.inf, math.inf,
                              0.0 if math.isinf(lhs) else -math.inf, 0.0, seed)
        return
    h = analysis.HFunction(s.c)
    for t in s.t_grid:
        lhs, err = _sublevel_integral(s, t)
        bound = analysis.support_lower_bound(s.c, t, g0.value, h)
        if s.monte_carlo:
            rel_b = g0.error_estimate / g0.value if g0.value else 0.0
            tolerance = err + rel_b * bound + tol.mc_rel * bound
        else:
            tolerance = tol.closed_rel * bound
        yield make_record(s.id, "prop_p", t, lhs, g0.value, bound, lhs - bound, tolerance,
                          seed, g0.converged_in_degree)


def _radial_g_inf(s: Scenario):
    return math.isinf(solve(ExtremalProblem.g_below(s.weight, s.F, 0.0, s.c)).value)


@_timed
def check_concavity(s: Scenario, tol: Tolerances = Tolerances()):
    """Second differences of ``G(h^{-1}(r))`` on a 200-point grid against the declared slack."""
    if s.monte_carlo:
        yield make_record(s.id, "concavity", None, math.nan, math.nan, math.nan, math.nan, 0.0,
                          skipped="needs a radial weight")
        return
    if _radial_g_inf(s):
        yield make_record(s.id, "concavity", None, math.inf, math.nan, math.nan, math.nan, 0.0,
                          skipped="G(0) is infinite")
        return
    h = analysis.HFunction(s.c)
    rep = analysis.concavity_check(lambda ts: analysis.radial_g_grid(s.weight, s.F, s.c, ts), h,
                                   vectorized=True)
    dr = rep.r[1] - rep.r[0]
    worst = max(rep.max_second_diff, rep.max_slope_increase * dr)
    yield make_record(s.id, "concavity", None, worst, 0.0, rep.slack, -worst, rep.slack)


def _random_feasible(rng, F: HolPoly, z0, order, top):
    G = F.about(z0)
    n = max(top + 1, order)
    coeffs = np.zeros(n, complex)
    coeffs[:order] = [G.coeff(k) for k in range(order)]
    coeffs[order:] = rng.normal(size=n - order) + 1j * rng.normal(size=n - order)
    return HolPoly(tuple(coeffs), z0)


@_timed
def check_pythagoras(s: Scenario, tol: Tolerances = Tolerances()):
    """Worst Pythagoras residual over random feasible competitors, per level.

    Uses the ``G`` objective (levels 0 and the grid) when ``c`` is given,
    else the ``C`` objective.  Radial residuals are absolute; Gram
    residuals are relative to ``||Fhat||^2``.
    """
    rng = np.random.default_rng(s.seed)
    levels = ((0.0,) + tuple(s.t_grid)) if s.c is not None else tuple(s.t_grid)
    for t in levels:
        if s.c is not None:
            p = ExtremalProblem.g_below(s.weight, s.F, t, s.c, basis_degree=s.basis_degree,
                                        samples=s.samples, seed=s.seed)
        else:
            p = ExtremalProblem.c_on_dt(s.weight, s.F, t, basis_degree=s.basis_degree,
                                        samples=s.samples, seed=s.seed)
        sol = solve(p)
        if math.isinf(sol.value):
            yield make_record(s.id, "pythagoras", t, math.inf, math.nan, math.nan, math.nan, 0.0,
                              skipped="minimum is infinite")
            continue
        m = p.constraint.order
        top = s.basis_degree if s.monte_carlo else m + 5
        worst = 0.0
        for _ in range(PYTHAGORAS_DRAWS):
            Fhat = _random_feasible(rng, s.F, s.weight.base_point, m, top)
            res = pythagoras_check(p, Fhat, sol)
            scale = problem_norm(p, Fhat, sol) if s.monte_carlo else 1.0
            worst = max(worst, res / scale)
        limit = tol.pythagoras_gram if s.monte_carlo else tol.pythagoras_radial
        yield make_record(s.id, "pythagoras", t, worst, sol.value, limit, -worst, limit,
                          s.seed if s.monte_carlo else None)


@_timed
def check_layer_cake(s: Scenario, tol: Tolerances = Tolerances()):
    """Relative gap between ``int_{D_t}|F|^2 e^{-psi}`` and its layer-cake form.

    The Monte-Carlo right side is compared with a tensor-grid left side, so
    the two sides are computed independently.
    """
    for t in LAYER_CAKE_T:
        if s.monte_carlo:
            lhs = region_integral(RegionQuadSpec(
                SuperlevelSet(s.weight, t), lambda z, psi: np.abs(s.F(z)) ** 2 * np.exp(-psi),
                "tensor-grid", budget=10**7)).value
            rhs = layer_cake_rhs(s.weight, s.F, t, "monte-carlo", LAYER_CAKE_SAMPLES, s.seed).value
            limit = tol.layer_cake_mc
        else:
            lhs = math.pi * _radial_sum(s.weight, s.F, t, "exp_psi", "annulus")
            rhs = layer_cake_rhs(s.weight, s.F, t, "radial").value
            limit = tol.layer_cake_radial
        err = abs(lhs - rhs) / abs(lhs) if lhs else abs(rhs)
        yield make_record(s.id, "layer_cake", t, lhs, rhs, limit, -err, limit,
                          s.seed if s.monte_carlo else None)


@_timed
def check_slab_bound(s: Scenario, tol: Tolerances = Tolerances(), l_frac=0.5):
    """Slab lower bound at ``l = l_frac * t`` for each grid level."""
    for t in s.t_grid:
        r = analysis.slab_lower_bound_check(s.weight, s.F, t, l_frac * t)
        if r.skipped:
            yield make_record(s.id, "slab_bound", t, r.lhs, r.rhs, math.nan, math.nan, 0.0,
                              skipped=r.skipped)
            continue
        yield make_record(s.id, "slab_bound", t, r.lhs, r.rhs, r.rhs, r.margin,
                          tol.closed_rel * max(abs(r.rhs), abs(r.lhs)))


@_timed
def check_diff_ineq(s: Scenario, tol: Tolerances = Tolerances(), t1=0.0):
    """The differential inequality with the exact derivative of ``G`` at each ``t0`` in the grid."""
    if s.monte_carlo:
        yield make_record(s.id, "diff_ineq", None, math.nan, math.nan, math.nan, math.nan, 0.0,
                          skipped="needs a radial weight")
        return
    if _radial_g_inf(s):
        yield make_record(s.id, "diff_ineq", None, math.inf, math.nan, math.nan, math.nan, 0.0,
                          skipped="G(0) is infinite")
        return
    w, F, c = s.weight, s.F, s.c
    for t0 in s.t_grid:
        r = analysis.differential_inequality_check(
            lambda t: analysis.radial_g(w, F, c, t), c, t0, t1,
            dG=lambda t: analysis.radial_g_derivative(w, F, c, t))
        yield make_record(s.id, "diff_ineq", t0, r.lhs, r.rhs, r.lhs, r.margin,
                          tol.closed_rel * max(abs(r.lhs), abs(r.rhs)) + r.bias)


@_timed
def check_openness_demo(alpha_grid=CATALOG_ALPHAS, eps_grid=OPENNESS_EPS):
    """For each alpha, the largest grid ``eps`` keeping the jet order, and ideal agreement below it."""
    eps_grid = sorted(eps_grid)
    for a in alpha_grid:
        m = jet_order(a)
        stable = []
        for e in eps_grid:
            if jet_order((1 + e) * a) != m:
                break
            stable.append(e)
        eps_star = stable[-1] if stable else 0.0
        # a monomial (z - z0)^k is constrained iff k < jet order
        agree = all(
            all((k < jet_order((1 + e) * a)) == (k < m) for k in range(m + 3)) for e in stable
        )
        threshold = (math.floor(a) + 1) / a - 1.0
        ok = eps_star > 0 and agree and eps_star < threshold
        yield make_record(f"openness-a{a:g}", "openness_demo", None, eps_star, m, threshold,
                          eps_star if ok else -math.inf, 0.0)


def _cutoff_rows(tol: Tolerances):
    """``(scenario, lhs, rhs, bound, margin, tolerance)`` rows for the cutoff constructions."""
    rows = []
    xs = np.linspace(0.0, 12.0, 2401)
    for (t, n) in ((1.0, 4), (0.5, 1), (2.0, 16)):
        vals = cutoffs.eval_ctn(t, n, xs)
        lo = 1.0 / (n + 1)
        viol = max(float(np.max(lo - vals)), float(np.max(vals - 1.0)), 0.0)
        rows.append((f"cutoff-ctn{t:g}_{n}-range", float(vals.min()), float(vals.max()), lo,
                     -viol, tol.cutoff))
        dec = max(float(np.max(np.diff(vals))), 0.0)
        rows.append((f"cutoff-ctn{t:g}_{n}-decreasing", dec, 0.0, 0.0, -dec, tol.cutoff))
        rep = cutoffs.validate_class_p(CtnFamily(t, n))
        rows.append((f"cutoff-ctn{t:g}_{n}-classp", float(rep.passed), 1.0, 1.0,
                     0.0 if rep.passed else -1.0, 0.0))
    mono = 0.0
    for n in range(1, 64):
        mono = max(mono, float(np.max(cutoffs.eval_ctn(1.0, n + 1, xs) - cutoffs.eval_ctn(1.0, n, xs))))
    rows.append(("cutoff-ctn-monotone-n", mono, 0.0, 0.0, -mono, tol.cutoff))
    seq = [cutoffs.eval_ctn(1.0, n, 2.0) for n in (10, 100, 1000)]
    gap = max(0.0, seq[1] - seq[0], seq[2] - seq[1])
    rows.append(("cutoff-ctn-limit", seq[2], 1e-3, 1e-3, (1e-3 - seq[2]) if gap == 0 else -gap, 0.0))

    t0, B = 1.0, 2.0
    ts = np.linspace(-t0 - 1.5 * B, 1.0, 3001)
    rp = cutoffs.RampPair(t0, B)
    b, v = cutoffs.eval_ramp(rp, ts)
    kinks = (-t0 - B, -t0)
    for div in (16, 64):
        eps = B / div
        mv = cutoffs.MollifiedV(t0, B, eps)
        ve, v1, v2 = cutoffs.eval_mollified_v(mv, ts)
        a_, b_ = mv.support
        right = ts >= -t0 - eps
        left = ts < -t0 - B + eps
        e_id = float(np.max(np.abs(ve[right] - ts[right])))
        e_d1 = float(np.max(np.abs(v1[right] - 1.0)))
        rows.append((f"cutoff-veps-B/{div}-identity", e_id, e_d1, 0.0, -max(e_id, e_d1), 1e-12))
        e_c = float(np.max(np.abs(ve[left] - ve[left][0]))) if left.any() else 0.0
        e_c1 = float(np.max(np.abs(np.concatenate([v1[left], v2[left]])))) if left.any() else 0.0
        rows.append((f"cutoff-veps-B/{div}-constant", e_c, e_c1, 0.0, -max(e_c, e_c1), 1e-12))
        outside = (ts <= a_) | (ts >= b_)
        v2_viol = max(float(np.max(-v2)), float(np.max(v2 - 2.0 / B)),
                      float(np.max(np.abs(v2[outside]))) if outside.any() else 0.0, 0.0)
        rows.append((f"cutoff-veps-B/{div}-convexity", float(v2.max()), 0.0, 2.0 / B, -v2_viol, 1e-12))
        v1_viol = max(float(np.max(-v1)), float(np.max(v1 - 1.0)),
                      float(np.max(-np.diff(v1))), 0.0)
        rows.append((f"cutoff-veps-B/{div}-monotone", float(v1.min()), float(v1.max()), 1.0,
                     -v1_viol, 1e-12))
        # measured rates: sup|v_eps - v| ~ eps/2, sup|v_eps' - b| ~ 2 eps/B away from the kinks
        away = np.min(np.abs(ts[:, None] - np.array(kinks)[None, :]), axis=1) > 2 * eps
        dv = float(np.max(np.abs(ve - v)))
        db = float(np.max(np.abs(v1[away] - b[away])))
        rows.append((f"cutoff-veps-B/{div}-limit", dv, db, eps,
                     min(eps - dv, 4 * eps / B - db), 0.0))
    return rows


@_timed
def check_cutoff_family(tol: Tolerances = Tolerances()):
    for sid, lhs, rhs, bound, margin, tolerance in _cutoff_rows(tol):
        yield make_record(sid, "cutoff_family", None, lhs, rhs, bound, margin, tolerance)


@_timed
def check_ode(c: ClassPFunction, t_grid=ODE_T, tol: Tolerances = Tolerances()):
    """ODE residuals and positivity witnesses; fails if a witness is not positive."""
    op = analysis.OdePair(c)
    for t in t_grid:
        r1, r2, w, s1 = analysis.ode_residuals(op, float(t))
        worst = max(r1, r2)
        margin = -worst if (w > 0 and s1 > 0) else -math.inf
        yield make_record(f"ode-{_tag(c)}", "ode", float(t), worst, min(w, s1), tol.ode, margin, tol.ode)


# --- catalog -----------------------------------------------------------------

def two_pole_scenario(seed=0, samples=DEFAULT_MC_SAMPLES) -> Scenario:
    w = Weight.log_poles((1.0, 0.5), (0j, 0.5 + 0j), blaschke=True)
    return Scenario("twopole-mc", w, HolPoly((1, 1)), Constant(1.0), TWO_POLE_T,
                    ("theorem_ratio", "prop_p", "pythagoras", "layer_cake"), seed, samples)


def catalog_scenarios(seed=0, samples=DEFAULT_MC_SAMPLES, t_grid=CATALOG_T,
                      alphas=CATALOG_ALPHAS, polys=None, cuts=CATALOG_CUTOFFS):
    """Radial scenarios without and with a density, then the two-pole scenario."""
    polys = dict(CATALOG_POLYS if polys is None else polys)
    out = []
    for a in alphas:
        w = Weight.radial(a)
        for name, co in polys.items():
            F = HolPoly(tuple(co))
            base = f"radial-a{a:g}-F{name}"
            out.append(Scenario(base, w, F, None, tuple(t_grid),
                                ("theorem_ratio", "pythagoras", "layer_cake", "slab_bound"), seed))
            for c in cuts:
                out.append(Scenario(f"{base}-c{_tag(c)}", w, F, c, tuple(t_grid),
                                    ("prop_p", "concavity", "pythagoras", "diff_ineq"), seed))
    return out


@dataclass(frozen=True)
class CatalogConfig:
    """What ``run_catalog`` executes.

    ``checks``/``scenario_filter`` restrict the run (``None`` keeps all);
    ``builtin`` toggles the built-in catalog; ``extra`` holds user scenarios.
    ``alphas``, ``polys`` (name, coefficients pairs) and ``cutoffs`` narrow the
    radial part of the catalog; ``two_pole`` toggles the two-pole scenario.
    """

    seed: int = 0
    samples: int = DEFAULT_MC_SAMPLES
    t_grid: tuple = CATALOG_T
    checks: tuple | None = None
    scenario_filter: tuple | None = None
    builtin: bool = True
    extra: tuple = ()
    ode_cutoffs: tuple = ODE_CUTOFFS
    tolerances: Tolerances = Tolerances()
    alphas: tuple = CATALOG_ALPHAS
    polys: tuple = tuple(CATALOG_POLYS.items())
    cutoffs: tuple = CATALOG_CUTOFFS
    two_pole: bool = True
    jobs: int = 1


_SCENARIO_CHECKS = {
    "theorem_ratio": lambda s, tol: [r for t in s.t_grid for r in check_theorem_ratio(s, t, tol)],
    "prop_p": check_prop_p,
    "concavity": check_concavity,
    "pythagoras": check_pythagoras,
    "layer_cake": check_layer_cake,
    "slab_bound": check_slab_bound,
    "diff_ineq": check_diff_ineq,
}


def _wanted(cfg: CatalogConfig, check):
    return cfg.checks is None or check in cfg.checks


def _selected(cfg: CatalogConfig, sid):
    return cfg.scenario_filter is None or any(f in sid for f in cfg.scenario_filter)


def iter_scenarios(cfg: CatalogConfig) -> Iterable[Scenario]:
    if cfg.builtin:
        yield from catalog_scenarios(cfg.seed, cfg.samples, cfg.t_grid, cfg.alphas,
                                     cfg.polys, cfg.cutoffs)
        if cfg.two_pole:
            yield two_pole_scenario(cfg.seed, cfg.samples)
    yield from cfg.extra


def _run_task(task):
    s, check, tol = task
    return list(_SCENARIO_CHECKS[check](s, tol))


def run_catalog(cfg: CatalogConfig = CatalogConfig()) -> list[VerificationRecord]:
    """Every record of the configured run, sorted by (scenario, check, t)."""
    tol = cfg.tolerances
    tasks = []
    ids = set()
    for s in iter_scenarios(cfg):
        if s.id in ids:
            raise ValueError(f"duplicate scenario id {s.id!r}")
        ids.add(s.id)
        if _selected(cfg, s.id):
            tasks.extend((s, check, tol) for check in s.checks if _wanted(cfg, check))
    out = []
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(cfg.jobs) as ex:
            for recs in ex.map(_run_task, tasks, chunksize=4):
                out.extend(recs)
    else:
        for task in tasks:
            out.extend(_run_task(task))
    if cfg.builtin:
        if _wanted(cfg, "sharpness") and _selected(cfg, SHARP.id):
            out.extend(check_sharpness(cfg.t_grid, tol))
        if _wanted(cfg, "openness_demo"):
            out.extend(r for r in check_openness_demo() if _selected(cfg, r.scenario))
        if _wanted(cfg, "cutoff_family"):
            out.extend(r for r in check_cutoff_family(tol) if _selected(cfg, r.scenario))
    if _wanted(cfg, "ode"):
        for c in cfg.ode_cutoffs:
            out.extend(r for r in check_ode(c, tol=tol) if _selected(cfg, r.scenario))
    out.sort(key=VerificationRecord.sort_key)
    return out


def any_failed(records) -> bool:
    return any(r.status == "fail" for r in records)
