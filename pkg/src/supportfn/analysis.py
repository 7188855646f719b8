"""The reparametrisation ``h``, concavity and slope tests, the differential
inequality, the support lower bound, the slab bound and the ODE pair."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .cutoffs import ClassPFunction, Constant, ExpRate
from .errors import DomainError, InvalidParameterError
from .extremal import ExtremalProblem, solve
from .model import HolPoly, Orientation, SuperlevelSet, Weight, psi_eval
from .quadrature import (
    DEFAULT_MC_SAMPLES,
    RadialIntegralSpec,
    RegionQuadSpec,
    adaptive_quad,
    disc_samples,
    exp_weighted_integral,
    monte_carlo_sum,
    reduced_radial,
)

H_TABLE_NODES = 2048
H_TABLE_TMIN = 1e-6
H_TABLE_TMAX = 40.0
H_INV_RTOL = 1e-9
CONCAVITY_POINTS = 200
CONCAVITY_RTOL = 1e-7
_GL16_X, _GL16_W = np.polynomial.legendre.leggauss(16)
_TRANSITION_PANELS = 16


# --- h and its inverse -------------------------------------------------------

class HFunction:
    """``h(t) = int_t^inf c(l) e^{-l} dl`` with a monotone table for ``h^{-1}``.

    Constant and exponential densities use closed forms.  Otherwise ``h`` is
    accumulated backwards over 16-point Gauss-Legendre panels between the
    table nodes, starting from the improper tail beyond ``t_max``.
    """

    def __init__(self, c: ClassPFunction, t_max=H_TABLE_TMAX, nodes=H_TABLE_NODES):
        self.c = c
        self.t_max = float(t_max)
        self.nodes = int(nodes)
        self._closed = isinstance(c, (Constant, ExpRate))
        ts = np.concatenate([[0.0], np.geomspace(H_TABLE_TMIN, self.t_max, self.nodes - 1)])
        ts = np.unique(np.concatenate([ts, [b for b in c.breakpoints if 0 < b < self.t_max]]))
        if self._closed:
            hs = np.array([c.exp_moment(1.0, t, math.inf) for t in ts])
        else:
            tail = exp_weighted_integral(c, 1.0, self.t_max, math.inf).value
            hs = np.empty(ts.size)
            hs[-1] = tail
            hs[:-1] = tail + np.cumsum(self._panels(ts[:-1], ts[1:])[::-1])[::-1]
        if not (math.isfinite(hs[0]) and hs[0] > 0):
            raise DomainError(f"h(0) = {hs[0]!r} is not a positive finite number")
        if np.any(np.diff(hs) >= 0):
            raise DomainError("h is not strictly decreasing on its table")
        self._ts, self._hs = ts, hs
        self.h0 = float(hs[0])
        # increasing abscissa log r; t is monotone in it
        self._interp = PchipInterpolator(np.log(hs[::-1]), ts[::-1])

    def _panels(self, a, b):
        half = 0.5 * (b - a)
        x = (0.5 * (a + b))[:, None] + half[:, None] * _GL16_X[None, :]
        f = np.asarray(self.c(x.ravel()), dtype=float).reshape(x.shape) * np.exp(-x)
        return (f * _GL16_W[None, :]).sum(1) * half

    def h(self, t) -> float:
        if t < 0:
            raise InvalidParameterError("h is defined for t >= 0")
        t = float(t)
        if self._closed:
            return self.c.exp_moment(1.0, t, math.inf)
        if t >= self.t_max:
            return exp_weighted_integral(self.c, 1.0, t, math.inf).value
        j = int(np.searchsorted(self._ts, t, side="right"))
        if self._ts[j - 1] == t:
            return float(self._hs[j - 1])
        return float(self._hs[j] + self._panels(np.array([t]), self._ts[j:j + 1])[0])

    def dh(self, t) -> float:
        return -float(self.c(t)) * math.exp(-t)

    @property
    def r_min(self) -> float:
        return float(self._hs[-1])

    def inv(self, r) -> float:
        """``h^{-1}(r)`` to ``1e-9 h(0)`` for ``r`` in the table range."""
        if not (self.r_min <= r <= self.h0):
            raise DomainError(f"r={r!r} outside the table range [{self.r_min:.3g}, {self.h0:.3g}]")
        if r == self.h0:
            return 0.0
        t = float(self._interp(math.log(r)))
        lo, hi = 0.0, self.t_max
        tol = H_INV_RTOL * self.h0 * 1e-3
        for _ in range(60):
            f = self.h(t) - r
            if abs(f) <= tol:
                return t
            if f > 0:
                lo = max(lo, t)
            else:
                hi = min(hi, t)
            step = t - f / self.dh(t)
            t = step if lo < step < hi else 0.5 * (lo + hi)
        return t


def support_lower_bound(c: ClassPFunction, t, G0, h: HFunction | None = None) -> float:
    """``(h(t)/h(0)) G0``."""
    if not math.isfinite(G0):
        raise DomainError("G(0) must be finite")
    if t < 0:
        raise InvalidParameterError("t must be nonnegative")
    h = h or HFunction(c)
    if t == 0:
        return G0
    return h.h(t) / h.h0 * G0


# --- helpers for G on radial weights ----------------------------------------

def radial_g(weight: Weight, F: HolPoly, c, t) -> float:
    """Closed-path ``G(t)`` for a radial weight."""
    return solve(ExtremalProblem.g_below(weight, F, t, c)).value


def radial_g_derivative(weight: Weight, F: HolPoly, c, t) -> float:
    """``G'(t) = -(pi/alpha) c(t) sum_{k<m} |a_k|^2 e^{-(k+1)t/alpha}`` for a radial weight."""
    if not weight.is_radial:
        raise InvalidParameterError("needs a radial weight")
    p = ExtremalProblem.g_below(weight, F, t, c)
    a = weight.alpha
    tot = sum(abs(b) ** 2 * math.exp(-(k + 1) * t / a)
              for k, b in enumerate(p.constraint.fixed_coeffs) if b != 0)
    return -math.pi / a * float(c(t)) * tot


def tail_moments(c: ClassPFunction, lam, ts, max_width=0.25):
    """``int_t^inf e^{-lam s} c(s) ds`` at every ``t`` in ``ts``.

    The improper tail is taken once beyond ``max(ts)``; the gaps between
    sorted points are summed backwards with composite 16-point
    Gauss-Legendre panels no wider than ``max_width``, cut at the
    breakpoints of ``c``.
    """
    ts = np.asarray(ts, dtype=float)
    order = np.argsort(ts)
    st = ts[order]
    tail = exp_weighted_integral(c, lam, float(st[-1]), math.inf)
    if tail.diverged:
        return np.full(ts.shape, math.inf)
    gaps = np.zeros(st.size)
    for i in range(st.size - 1):
        a, b = st[i], st[i + 1]
        if b > a:
            cuts = [a] + [q for q in c.breakpoints if a < q < b] + [b]
            pieces = []
            for lo, hi in zip(cuts[:-1], cuts[1:]):
                k = max(1, int(math.ceil((hi - lo) / max_width)))
                if _between_breakpoints(c, lo, hi):
                    k = max(k, _TRANSITION_PANELS)
                pieces.append(np.linspace(lo, hi, k + 1)[:-1])
            e = np.concatenate(pieces + [[b]])
            half = 0.5 * np.diff(e)
            x = (0.5 * (e[1:] + e[:-1]))[:, None] + half[:, None] * _GL16_X[None, :]
            f = np.exp(-lam * x) * np.asarray(c(x.ravel()), dtype=float).reshape(x.shape)
            gaps[i] = float((f * _GL16_W).sum(1) @ half)
    vals = tail.value + np.concatenate([np.cumsum(gaps[:-1][::-1])[::-1], [0.0]])
    out = np.empty_like(vals)
    out[order] = vals
    return out


def _between_breakpoints(c, lo, hi):
    bp = c.breakpoints
    return any(p <= lo and hi <= q for p, q in zip(bp[:-1], bp[1:]))


def radial_g_grid(weight: Weight, F: HolPoly, c, ts):
    """``G`` at many levels for a radial weight (same sums as the radial solve)."""
    p = ExtremalProblem.g_below(weight, F, 0.0, c)
    a = weight.alpha
    tot = np.zeros(np.shape(ts))
    for k, b in enumerate(p.constraint.fixed_coeffs):
        if b != 0:
            tot = tot + abs(b) ** 2 * tail_moments(c, (k + 1) / a, ts) / a
    return math.pi * tot


# --- concavity ---------------------------------------------------------------

@dataclass(frozen=True)
class ConcavityReport:
    r: np.ndarray
    phi: np.ndarray
    max_second_diff: float
    max_slope_increase: float
    slack: float
    passed: bool


def concavity_check(G, h: HFunction, n=CONCAVITY_POINTS, r_min=None, noise=0.0,
                    vectorized=False) -> ConcavityReport:
    """Concavity of ``phi(r) = G(h^{-1}(r))`` on a uniform grid ending at ``h(0)``.

    ``G`` maps a level to a value, or an array of levels to values when
    ``vectorized`` is set.
    Centred second differences must be at most ``slack`` and the cell slopes
    nonincreasing up to ``slack`` divided by the spacing, where
    ``slack = 1e-7 max|phi| + noise``.
    """
    if r_min is None:
        r_min = max(h.r_min, 1e-6 * h.h0)
    r = np.linspace(r_min, h.h0, n)
    ts = np.array([h.inv(ri) for ri in r])
    phi = np.asarray(G(ts), dtype=float) if vectorized else np.array([G(t) for t in ts])
    if not np.all(np.isfinite(phi)):
        raise DomainError("G is infinite on the grid")
    slack = CONCAVITY_RTOL * float(np.max(np.abs(phi))) + noise
    d2 = phi[:-2] - 2.0 * phi[1:-1] + phi[2:]
    dr = r[1] - r[0]
    slope = np.diff(phi) / dr
    inc = np.diff(slope)
    m2 = float(np.max(d2))
    ms = float(np.max(inc))
    return ConcavityReport(r, phi, m2, ms, slack, m2 <= slack and ms <= slack / dr)


# --- differential inequality ---------------------------------------------------

@dataclass(frozen=True)
class DiffIneqResult:
    lhs: float
    rhs: float
    margin: float
    bias: float


def differential_inequality_check(G, c: ClassPFunction, t0, t1, dG=None, h_step=1e-4) -> DiffIneqResult:
    """``G(t1) - G(t0+t1)`` against ``(int_{t1}^{T} c e^{-l} / (c(T) e^{-T})) (-G'(T))``.

    With ``dG`` the true derivative is used.  Otherwise ``-G'(T)`` is the
    forward difference ``(G(T) - G(T+h))/h``; the bias is estimated by
    halving ``h``.
    """
    if not (t0 > 0 and t1 >= 0):
        raise InvalidParameterError("need t0 > 0 and t1 >= 0")
    T = t0 + t1
    g1, gT = G(t1), G(T)
    if not (math.isfinite(g1) and math.isfinite(gT)):
        raise DomainError("G diverges at the requested points")
    if dG is not None:
        slope, bias = -dG(T), 0.0
    else:
        d1 = (gT - G(T + h_step)) / h_step
        d2 = (gT - G(T + h_step / 2)) / (h_step / 2)
        slope, bias = 2 * d2 - d1, abs(d1 - d2)
    mass = exp_weighted_integral(c, 1.0, t1, T).value
    factor = mass / (float(c(T)) * math.exp(-T))
    rhs = factor * slope
    lhs = g1 - gT
    return DiffIneqResult(lhs, rhs, rhs - lhs, factor * bias)


# --- slab bound ----------------------------------------------------------------

@dataclass(frozen=True)
class SlabResult:
    lhs: float
    rhs: float
    margin: float
    skipped: str | None = None
    error: float = 0.0


def slab_integral(w: Weight, F: HolPoly, t, l, samples=DEFAULT_MC_SAMPLES, seed=0):
    """``int_{-t <= psi < -l} |F|^2`` and its error estimate."""
    if w.is_radial:
        G = F.about(w.base_point)
        tot = sum(abs(a) ** 2 * reduced_radial(RadialIntegralSpec(k, w.alpha, t, "one", "slab", l=l)).value
                  for k, a in enumerate(G.coeffs) if a != 0)
        return math.pi * tot, 0.0
    z, _ = disc_samples(samples, seed)
    psi = psi_eval(w, z)
    vals = np.where((psi >= -t) & (psi < -l), np.abs(F(z)) ** 2, 0.0)
    return monte_carlo_sum(vals, z.size)


def slab_lower_bound_check(w: Weight, F: HolPoly, t, l, C=None, **kw) -> SlabResult:
    """``int_{-t<=psi<-l}|F|^2 - ((e^{-l}-e^{-t})/(1-e^{-t})) C``.

    ``C = 0`` or ``inf`` gives a skipped sentinel.
    """
    if not (t > 0 and 0 <= l < t):
        raise InvalidParameterError("need t > 0 and 0 <= l < t")
    if C is None:
        C = solve(ExtremalProblem.c_on_dt(w, F, t, **kw)).value
    if C == 0 or math.isinf(C):
        return SlabResult(math.nan, C, math.nan, "C is 0" if C == 0 else "C is infinite")
    lhs, err = slab_integral(w, F, t, l)
    frac = (math.exp(-l) - math.exp(-t)) / -math.expm1(-t)
    rhs = frac * C
    return SlabResult(lhs, rhs, lhs - rhs, None, err)


# --- the ODE pair ----------------------------------------------------------------

ODE_TMIN = 1e-4


class OdePair:
    """``u = -log H`` and ``s = K/H`` with ``H = int_0^t c e^{-l}``, ``K = int_0^t H``.

    Derivatives come from ``H' = c e^{-t}`` and ``H'' = (c' - c) e^{-t}``;
    ``H`` and ``K`` are closed form for constant and exponential densities,
    quadrature otherwise.  ``finite_differences=True`` replaces the
    derivatives by 5-point differences of ``u`` and ``s``.
    """

    def __init__(self, c: ClassPFunction, finite_differences=None):
        self.c = c
        if finite_differences is None:
            finite_differences = not _has_derivative(c)
        self.finite_differences = finite_differences

    def HK(self, t):
        c = self.c
        if isinstance(c, Constant):
            H = -math.expm1(-t)
            return c.kappa * H, c.kappa * (t - H)
        if isinstance(c, ExpRate):
            g = 1.0 - c.beta
            H = -math.expm1(-g * t) / g
            return H, (t - H) / g
        H = exp_weighted_integral(c, 1.0, 0.0, t).value
        # K = t H - int_0^t l c(l) e^{-l} dl
        m1, _, _ = adaptive_quad(lambda l: l * float(c(l)) * math.exp(-l), 0.0, t,
                                 rtol=1e-13, points=c.breakpoints)
        return H, t * H - m1

    def u(self, t):
        return -math.log(self.HK(t)[0])

    def s(self, t):
        H, K = self.HK(t)
        return K / H

    def derivatives(self, t):
        """``(u, u', u'', s, s', s'')`` at ``t``."""
        if t < ODE_TMIN:
            raise DomainError(f"t={t!r} is below {ODE_TMIN} where differences are unstable")
        if self.finite_differences:
            return _fd_derivatives(self.u, t) + _fd_derivatives(self.s, t)
        H, K = self.HK(t)
        c, dc = float(self.c(t)), float(self.c.deriv(t))
        e = math.exp(-t)
        H1, H2 = c * e, (dc - c) * e
        u, u1, u2 = -math.log(H), -H1 / H, -H2 / H + (H1 / H) ** 2
        s = K / H
        s1 = (H * H - K * H1) / (H * H)
        s2 = -(H1 / H + K * H2 / H ** 2 - 2.0 * K * H1 ** 2 / H ** 3)
        return u, u1, u2, s, s1, s2


def _has_derivative(c):
    try:
        c.deriv(1.0)
    except NotImplementedError:
        return False
    return not type(c).__name__ == "Custom"


def _fd_derivatives(f, t):
    """Value, first and second derivative by 5-point stencils with one Richardson step."""
    def stencil(h):
        fm2, fm1, f0, fp1, fp2 = (f(t + k * h) for k in (-2, -1, 0, 1, 2))
        d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h)
        d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h)
        return f0, d1, d2
    h = min(1e-2 * max(t, 1.0), 0.25 * t)
    f0, a1, a2 = stencil(h)
    _, b1, b2 = stencil(h / 2)
    return f0, (16 * b1 - a1) / 15, (16 * b2 - a2) / 15


def ode_residuals(op: OdePair, t):
    """``res1 = |(s + s'^2/(u''s - s'')) e^{u-t} - 1/c(t)|`` and ``res2 = |s' - s u' - 1|``.

    Also returns the positivity witnesses ``u''s - s''`` and ``s'``.
    """
    u, u1, u2, s, s1, s2 = op.derivatives(t)
    w = u2 * s - s2
    res1 = abs((s + s1 * s1 / w) * math.exp(u - t) - 1.0 / float(op.c(t)))
    res2 = abs(s1 - s * u1 - 1.0)
    return res1, res2, w, s1
