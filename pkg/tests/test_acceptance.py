"""Acceptance gates 1-10; each test prints one PASS/FAIL line."""
import math
import time

import numpy as np
import pytest

from supportfn import analysis, verify
from supportfn.cutoffs import Constant, ExpRate
from supportfn.extremal import ExtremalProblem, solve
from supportfn.model import HolPoly, Weight
from supportfn.report import to_csv
from supportfn.verify import CatalogConfig, Scenario, ratio_parts, run_catalog, support_bound

SHARP_T = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0)


@pytest.fixture(scope="module")
def catalog():
    t0 = time.perf_counter()
    recs = run_catalog()
    return recs, time.perf_counter() - t0


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


def rows(recs, check, prefix=""):
    return [r for r in recs if r.check == check and r.scenario.startswith(prefix)]


def test_1_sharpness(report):
    t0 = time.perf_counter()
    s = Scenario("sharp", Weight.radial(1.0), HolPoly((1,)), Constant(1.0))
    worst = 0.0
    for t in SHARP_T:
        C = solve(ExtremalProblem.c_on_dt(s.weight, s.F, t)).value
        num, _, ratio, _, _ = ratio_parts(s, t)
        worst = max(worst,
                    abs(C / (math.pi * -math.expm1(-t)) - 1),
                    abs(math.pi * num / (math.pi * t) - 1),
                    abs(ratio / support_bound(t) - 1))
    secs = time.perf_counter() - t0
    report(1, worst < 1e-9 and secs < 1.0, f"max rel err {worst:.2e} (< 1e-9), {secs:.3f} s (< 1 s)")


def test_2_theorem(report):
    t0 = time.perf_counter()
    recs = run_catalog(CatalogConfig(checks=("theorem_ratio",)))
    secs = time.perf_counter() - t0
    radial = rows(recs, "theorem_ratio", "radial")
    worst_radial = min(r.lhs - r.bound for r in radial)
    mc = rows(recs, "theorem_ratio", "twopole")
    mc_ok = bool(mc) and all(r.lhs >= r.bound - r.tolerance for r in mc) and all(r.status == "pass" for r in mc)
    ok = len(radial) >= 60 and worst_radial >= -1e-9 and mc_ok and secs < 30
    report(2, ok, f"{len(radial)} radial rows, min ratio-bound {worst_radial:.2e}; "
                  f"two-pole {len(mc)} rows within 3 sigma: {mc_ok}; {secs:.1f} s (< 30 s)")


def test_3_prop_p(report, catalog):
    recs, _ = catalog
    pp = rows(recs, "prop_p")
    sharp = rows(recs, "prop_p", "radial-a1-F1-cconstant:1")
    sharp_gap = max(abs(r.margin) / r.bound for r in sharp)
    dich = rows(recs, "prop_p", "radial-a2-F1-cexp:0.5")
    ok = (all(r.status == "pass" for r in pp) and sharp and sharp_gap < 1e-9
          and dich and all(r.lhs == math.inf and r.rhs == math.inf for r in dich))
    report(3, ok, f"{len(pp)} rows pass; sharp gap {sharp_gap:.1e}; "
                  f"dichotomy +inf at {len(dich)} levels")


def test_4_pythagoras(report, catalog):
    recs, _ = catalog
    py = [r for r in rows(recs, "pythagoras") if r.status != "skipped"]
    radial = [r.lhs for r in py if r.scenario.startswith("radial")]
    gram = [r.lhs for r in py if r.scenario.startswith("twopole")]
    ok = verify.PYTHAGORAS_DRAWS == 20 and radial and gram and max(radial) < 1e-10 and max(gram) < 1e-6
    report(4, ok, f"{verify.PYTHAGORAS_DRAWS} draws/row; radial max {max(radial):.1e} over {len(radial)} rows, "
                  f"Gram max {max(gram):.1e} x||Fhat||^2 over {len(gram)} rows")


def test_5_concavity(report, catalog):
    recs, _ = catalog
    cc = rows(recs, "concavity")
    live = [r for r in cc if r.status != "skipped"]
    skipped_ok = all(r.status == "pass" or r.lhs == math.inf for r in cc)
    H = analysis.HFunction(Constant(1.0))
    rep = analysis.concavity_check(
        lambda t: analysis.radial_g(Weight.radial(1.0), HolPoly((1,)), Constant(1.0), t), H)
    lin = float(np.max(np.abs(rep.phi - math.pi * rep.r) / (math.pi * rep.r)))
    ok = (len(rep.r) == 200 and skipped_ok and all(r.status == "pass" for r in live) and lin < 1e-9)
    report(5, ok, f"{len(live)} radial (scenario, c) rows within slack, {len(cc) - len(live)} with G(0)=inf; "
                  f"sharp phi linear to {lin:.1e}")


def test_6_layer_cake(report, catalog):
    recs, _ = catalog
    lc = rows(recs, "layer_cake")
    radial = [-r.margin for r in lc if r.scenario.startswith("radial")]
    mc = [-r.margin for r in lc if r.scenario.startswith("twopole")]
    ts = {r.t for r in lc}
    ok = ts == {0.5, 1.0, 2.0} and max(radial) < 1e-6 and mc and max(mc) < 1e-2
    report(6, ok, f"radial max rel err {max(radial):.1e} (< 1e-6), Monte-Carlo {max(mc):.1e} (< 1e-2)")


def test_7_ode(report, catalog):
    recs, _ = catalog
    od = rows(recs, "ode")
    ok = (len(od) == 60 and len({r.scenario for r in od}) == 3
          and max(r.lhs for r in od) < 1e-6 and min(r.rhs for r in od) > 0)
    report(7, ok, f"{len(od)} rows, max residual {max(r.lhs for r in od):.1e}, "
                  f"min positivity witness {min(r.rhs for r in od):.2e}")


def test_8_cutoffs(report, catalog):
    recs, _ = catalog
    cf = rows(recs, "cutoff_family")
    names = {r.scenario for r in cf}
    need = {f"cutoff-veps-B/{d}-{k}" for d in (16, 64) for k in ("identity", "constant", "convexity", "monotone")}
    need |= {"cutoff-ctn-monotone-n", "cutoff-ctn-limit"}
    limit = next(r for r in cf if r.scenario == "cutoff-ctn-limit")
    ok = need <= names and all(r.status == "pass" for r in cf) and limit.lhs < 1e-3
    report(8, ok, f"{len(cf)} rows pass; c_t^n(2) at n=1000 is {limit.lhs:.4e} (< 1e-3)")


def test_9_slab(report, catalog):
    recs, _ = catalog
    sl = [r for r in rows(recs, "slab_bound") if r.status != "skipped"]
    worst = min(r.margin for r in sl)
    for a in verify.CATALOG_ALPHAS:
        for F in verify.CATALOG_POLYS.values():
            for t in (0.5, 2.0, 5.0):
                for frac in (0.0, 0.25, 0.75):
                    r = analysis.slab_lower_bound_check(Weight.radial(a), HolPoly(F), t, frac * t)
                    if r.skipped is None:
                        worst = min(worst, r.margin)
    canon = max(abs(analysis.slab_lower_bound_check(Weight.radial(1.0), HolPoly((1,)), t, l).margin)
                for t in SHARP_T for l in (0.0, 0.3 * t, 0.9 * t))
    ok = worst >= -1e-9 and canon < 1e-12
    report(9, ok, f"min margin {worst:.1e} (>= -1e-9); canonical |margin| {canon:.1e}")


def test_10_determinism(report, catalog):
    recs, secs = catalog
    t0 = time.perf_counter()
    again = run_catalog()
    secs2 = time.perf_counter() - t0
    same = to_csv(recs).encode() == to_csv(again).encode()
    n_fail = sum(r.status == "fail" for r in recs)
    ok = same and n_fail == 0 and max(secs, secs2) < 60
    report(10, ok, f"{len(recs)} records byte-identical: {same}; {n_fail} fail; "
                   f"catalog wall time {secs:.1f} s (< 60 s)")
