"""Integration: 1D adaptive quadrature, radial reduction, region quadrature.

Radial integrals over discs and annuli of a radial weight ``2 alpha log|z|``
are mapped by ``s = -2 alpha log r`` to

    2 pi int r^{2k+1} w(r) dr = (pi/alpha) int exp(-(k+1) s/alpha) w~(s) ds,

and are tracked internally in units of ``pi`` ("reduced" values) so that
closed-form comparisons are exact in floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .cutoffs import exp_integral
from .errors import InvalidParameterError
from .model import Orientation, SuperlevelSet, Weight, psi_eval

DEFAULT_RTOL = 1e-10
GRID_RTOL = 1e-8
DEFAULT_MC_SAMPLES = 100_000
DIVERGENCE_GROWTH = 1e9
_MAX_PANELS = 64


@dataclass(frozen=True)
class IntegralResult:
    value: float
    abs_error_estimate: float = 0.0
    diverged: bool = False
    nodes_used: int = 0
    converged: bool = True
    seed: int | None = None

    def __post_init__(self):
        if self.diverged and self.value != math.inf:
            object.__setattr__(self, "value", math.inf)

    def scaled(self, factor):
        return IntegralResult(
            self.value * factor, self.abs_error_estimate * abs(factor),
            self.diverged, self.nodes_used, self.converged, self.seed,
        )


def adaptive_quad(f, a, b, rtol=DEFAULT_RTOL, points=()):
    """scipy ``quad`` split at the interior ``points``; ``b`` may be ``inf``."""
    cuts = [a] + sorted(p for p in points if a < p < b) + [b]
    total, err, nev = 0.0, 0.0, 0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        val, e, info = integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rtol, limit=400, full_output=1)[:3]
        total += val
        err += e
        nev += info["neval"]
    return total, err, nev


def _weighted(c, lam):
    # exp(log c(s) - lam s) stays finite where exp(-lam s) * c(s) would be 0 * inf
    return lambda s: math.exp(float(c.log(s)) - lam * s)


def _panel(c, lam, a, b):
    closed = c.exp_moment(lam, a, b)
    if closed is not None:
        return closed, 0
    val, _, nev = adaptive_quad(_weighted(c, lam), a, b, points=c.breakpoints)
    return val, nev


def exp_weighted_integral(c, lam, a, b, rtol=DEFAULT_RTOL) -> IntegralResult:
    """``int_a^b exp(-lam s) c(s) ds`` with divergence detection for ``b = inf``.

    Two signals decide divergence of an infinite tail: the exponent test
    (``lam`` against the growth rate of ``c``) and growth of the partial
    integrals over doubling panels beyond ``DIVERGENCE_GROWTH`` times the
    first panel.  When they disagree the result is flagged non-converged.
    ``lam > 1`` needs no tail test: class-P densities grow at most like
    ``exp(s)``.
    """
    if b < a:
        raise InvalidParameterError("integration bounds out of order")
    if not math.isinf(b):
        val, nev = _panel(c, lam, a, b)
        return IntegralResult(val, rtol * abs(val), False, nev)

    rate = c.tail_rate
    analytic_div = lam < rate or (lam == rate and not c.critical_integrable)
    if lam > 1.0 and not analytic_div:
        closed = c.exp_moment(lam, a, b)
        if closed is not None:
            return IntegralResult(closed, 0.0, False, 0)
        val, err, nev = adaptive_quad(_weighted(c, lam), a, b, rtol=rtol, points=c.breakpoints)
        return IntegralResult(val, err, False, nev)

    # growth of partial integrals over [a, a+1], [a+1, a+2], [a+2, a+4], ...
    first, nev = _panel(c, lam, a, a + 1.0)
    partial = first
    numeric_div = False
    lo, width = a + 1.0, 1.0
    for _ in range(_MAX_PANELS):
        inc, n = _panel(c, lam, lo, lo + width)
        nev += n
        partial += inc
        if not math.isfinite(partial) or partial > DIVERGENCE_GROWTH * max(first, 1e-300):
            numeric_div = True
            break
        if inc <= 1e-17 * partial:
            break
        lo += width
        width *= 2.0
    if analytic_div and numeric_div:
        return IntegralResult(math.inf, 0.0, True, nev)
    if analytic_div != numeric_div:
        return IntegralResult(math.inf if numeric_div else partial, math.inf, analytic_div,
                              nev, converged=False)
    closed = c.exp_moment(lam, a, b)
    if closed is not None:
        return IntegralResult(closed, 0.0, False, nev)
    val, err, n = adaptive_quad(_weighted(c, lam), a, b, rtol=rtol, points=c.breakpoints)
    return IntegralResult(val, err, False, nev + n)


# --- radial reduction ----------------------------------------------------------

@dataclass(frozen=True)
class RadialIntegralSpec:
    """``2 pi int r^{2k+1} w(r) dr`` over the inner disc, the annulus or a slab.

    ``weight`` is ``"exp_psi"`` (``e^{-psi}``), ``"c"`` (``c(-psi)``) or ``"one"``.
    The bounds in ``s = -psi`` are ``[t, inf)`` for ``"inner"``, ``[0, t]``
    for ``"annulus"`` and ``[l, t]`` for ``"slab"``.
    """

    k: int
    alpha: float
    t: float
    weight: str = "one"
    bounds: str = "annulus"
    c: object = None
    l: float = 0.0

    def __post_init__(self):
        if self.k < 0 or self.alpha <= 0:
            raise InvalidParameterError("need k >= 0 and alpha > 0")
        if not self.t >= 0:
            raise InvalidParameterError("level must be nonnegative")
        if self.weight not in ("exp_psi", "c", "one"):
            raise InvalidParameterError(f"unknown radial weight {self.weight!r}")
        if self.bounds not in ("inner", "annulus", "slab"):
            raise InvalidParameterError(f"unknown radial bounds {self.bounds!r}")
        if self.weight == "c" and self.c is None:
            raise InvalidParameterError("weight 'c' needs a density")
        if self.bounds == "slab" and not (0 <= self.l <= self.t):
            raise InvalidParameterError("slab needs 0 <= l <= t")

    @property
    def s_bounds(self):
        if self.bounds == "inner":
            return self.t, math.inf
        if self.bounds == "annulus":
            return 0.0, self.t
        return self.l, self.t


def reduced_radial(spec: RadialIntegralSpec) -> IntegralResult:
    """The radial integral divided by ``pi``."""
    lam = (spec.k + 1) / spec.alpha
    lo, hi = spec.s_bounds
    if spec.weight == "one":
        val = exp_integral(-lam, lo, hi)
        return IntegralResult(val / spec.alpha)
    if spec.weight == "exp_psi":
        val = exp_integral(1.0 - lam, lo, hi)
        return IntegralResult(val / spec.alpha, diverged=math.isinf(val))
    res = exp_weighted_integral(spec.c, lam, lo, hi)
    return res.scaled(1.0 / spec.alpha)


def radial_integral(spec: RadialIntegralSpec) -> IntegralResult:
    """``2 pi int r^{2k+1} w(r) dr``; divergence is reported, not raised."""
    return reduced_radial(spec).scaled(math.pi)


# --- region quadrature ---------------------------------------------------------

def disc_samples(n, seed):
    """``n`` uniform points in the unit disc by rejection from the square.

    Returns the points and the number of square draws.
    """
    rng = np.random.default_rng(seed)
    chunks, have, drawn = [], 0, 0
    while have < n:
        m = int(1.3 * (n - have)) + 64
        xy = rng.uniform(-1.0, 1.0, size=(m, 2))
        drawn += m
        z = xy[:, 0] + 1j * xy[:, 1]
        z = z[np.abs(z) < 1.0]
        chunks.append(z)
        have += z.size
    return np.concatenate(chunks)[:n], drawn


@dataclass(frozen=True)
class RegionQuadSpec:
    """Integral of ``integrand(z, psi)`` over a superlevel/sublevel set."""

    region: SuperlevelSet
    integrand: Callable
    method: str = "monte-carlo"
    budget: int = DEFAULT_MC_SAMPLES
    seed: int = 0
    rtol: float = GRID_RTOL

    def __post_init__(self):
        if self.budget < 1000:
            raise InvalidParameterError("budget must be at least 1e3")
        if self.method not in ("monte-carlo", "tensor-grid"):
            raise InvalidParameterError(f"unknown region method {self.method!r}")


def monte_carlo_sum(values, n):
    """Area-weighted mean over ``n`` disc samples and its 3-sigma error."""
    mean = float(np.sum(values)) / n
    if n > 1:
        var = float(np.sum((values - mean) ** 2)) / (n - 1)
    else:
        var = 0.0
    return math.pi * mean, 3.0 * math.pi * math.sqrt(var / n)


def region_integral(spec: RegionQuadSpec) -> IntegralResult:
    w = spec.region.weight
    if spec.method == "monte-carlo":
        z, _ = disc_samples(spec.budget, spec.seed)
        psi = psi_eval(w, z)
        mask = spec.region.indicator(z, psi)
        vals = np.zeros(z.size)
        if mask.any():
            vals[mask] = spec.integrand(z[mask], psi[mask])
        value, err = monte_carlo_sum(vals, z.size)
        return IntegralResult(value, err, False, int(z.size), True, spec.seed)

    nr, nth = 32, 32
    prev = None
    while True:
        z, wts = polar_nodes(spec.region, nr, nth)
        psi = psi_eval(w, z)
        value = float(np.dot(wts, spec.integrand(z, psi))) if z.size else 0.0
        used = z.size
        if prev is not None:
            diff = abs(value - prev)
            if diff <= spec.rtol * abs(value) or value == prev == 0.0:
                return IntegralResult(value, diff, False, used, True, None)
        if 4 * used > spec.budget:
            err = abs(value - prev) if prev is not None else math.inf
            return IntegralResult(value, err, False, used, False, None)
        prev = value
        nr *= 2
        nth *= 2


_GL8_X, _GL8_W = np.polynomial.legendre.leggauss(8)


def polar_nodes(region: SuperlevelSet, nr, nth, panels=1):
    """Quadrature nodes and weights for a level region of the disc.

    Each of ``nth`` rays is bracketed on ``nr`` radial cells, crossings of the
    level are bisected, and every inside segment is cut into ``panels`` equal
    pieces carrying 8-point Gauss-Legendre in ``r`` with the Jacobian folded
    into the weights.  The angle uses the periodic trapezoid rule.
    """
    w, t = region.weight, region.t
    below = region.orientation is Orientation.BELOW
    th = np.arange(nth) * (2.0 * np.pi / nth)
    rr = np.linspace(0.0, 1.0, nr + 1)
    ray = np.exp(1j * th)
    grid = rr[None, :] * ray[:, None]
    g = psi_eval(w, grid.ravel()).reshape(grid.shape) + t
    inside = (g < 0) if below else (g >= 0)
    cross = inside[:, 1:] != inside[:, :-1]
    ri, ci = np.nonzero(cross)
    lo = rr[ci].copy()
    hi = rr[ci + 1].copy()
    lo_in = inside[ri, ci]
    for _ in range(52):
        mid = 0.5 * (lo + hi)
        gm = psi_eval(w, mid * ray[ri]) + t
        mid_in = (gm < 0) if below else (gm >= 0)
        same = mid_in == lo_in
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    roots = 0.5 * (lo + hi)
    zs, ws = [], []
    dth = 2.0 * np.pi / nth
    for j in range(nth):
        knots = np.concatenate([[0.0], np.sort(roots[ri == j]), [1.0]])
        state = bool(inside[j, 0])  # psi = -inf at a centre pole agrees with r -> 0+
        seg = []
        for a, b in zip(knots[:-1], knots[1:]):
            if state and b > a:
                seg.append((a, b))
            state = not state
        if not seg:
            continue
        a, b = np.asarray(seg).T
        if panels > 1:
            frac = np.arange(panels + 1) / panels
            cuts = a[:, None] + (b - a)[:, None] * frac[None, :]
            a, b = cuts[:, :-1].ravel(), cuts[:, 1:].ravel()
        half = 0.5 * (b - a)
        r = (0.5 * (a + b))[:, None] + half[:, None] * _GL8_X[None, :]
        zs.append((r * ray[j]).ravel())
        ws.append((r * half[:, None] * _GL8_W[None, :] * dth).ravel())
    if not zs:
        return np.zeros(0, dtype=complex), np.zeros(0)
    return np.concatenate(zs), np.concatenate(ws)


# --- layer cake ----------------------------------------------------------------

def layer_cake_discrete(values, weights):
    """``int f dmu = int_0^inf mu{f > l} dl`` for an atomic measure, from level sets."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(values)
    v = values[order]
    w = weights[order]
    tail = np.cumsum(w[::-1])[::-1]  # mu{f >= v_j}
    steps = np.diff(np.concatenate([[0.0], v]))
    return float(np.dot(steps, tail))


def _radial_slab_reduced(w: Weight, F, l, t):
    G = F.about(w.base_point)
    total = 0.0
    for k, a in enumerate(G.coeffs):
        if a != 0:
            total += abs(a) ** 2 * reduced_radial(
                RadialIntegralSpec(k, w.alpha, t, "one", "slab", l=l)).value
    return total


def layer_cake_rhs(w: Weight, F, t, method="auto", budget=DEFAULT_MC_SAMPLES, seed=0,
                   rtol=1e-12) -> IntegralResult:
    """``int_{-inf}^t (int_{-t <= psi < -l} |F|^2) e^l dl``.

    For ``l < 0`` the slab is all of ``{psi >= -t}`` and contributes its
    measure once.  On ``[0, t]`` radial weights use closed-form slabs inside
    adaptive quadrature in ``l``; other weights use level measures of a
    Monte-Carlo sample, integrated exactly between consecutive levels.
    """
    if not t > 0:
        raise InvalidParameterError("level must be positive")
    if method == "auto":
        method = "radial" if w.is_radial else "monte-carlo"
    if method == "radial":
        if not w.is_radial:
            raise InvalidParameterError("radial layer cake needs a radial weight")
        head = _radial_slab_reduced(w, F, 0.0, t)
        body, err, nev = adaptive_quad(lambda l: _radial_slab_reduced(w, F, l, t) * math.exp(l),
                                       0.0, t, rtol=rtol)
        return IntegralResult(math.pi * (head + body), math.pi * err, False, nev)

    z, _ = disc_samples(budget, seed)
    psi = psi_eval(w, z)
    mask = SuperlevelSet(w, t, Orientation.AT_LEAST).indicator(z, psi)
    mass = np.abs(F(z[mask])) ** 2 * (math.pi / z.size)
    levels = -psi[mask]  # in [0, t]
    order = np.argsort(levels)
    s = levels[order]
    m = mass[order]
    head = float(m.sum())
    # slab(l) = sum of m over levels > l; constant between consecutive sorted levels
    above = np.cumsum(m[::-1])[::-1]
    knots = np.concatenate([[0.0], s])
    body = float(np.dot(above, np.exp(knots[1:]) - np.exp(knots[:-1])))
    # 3-sigma error of the equivalent pointwise estimator
    per_point = np.zeros(z.size)
    per_point[mask] = np.abs(F(z[mask])) ** 2 * np.exp(levels)
    _, err = monte_carlo_sum(per_point, z.size)
    return IntegralResult(head + body, err, False, int(z.size), True, seed)
