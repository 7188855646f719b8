"""Class-P densities, the bump family ``g_n``/``c_t^n``, ramps and mollified ramps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import EvaluationError, InvalidParameterError

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_CTN_PANELS = 16


def exp_integral(mu, a, b):
    """``int_a^b exp(mu*s) ds`` for ``a <= b`` (``b`` may be ``inf``)."""
    if b <= a:
        return 0.0
    if mu == 0.0:
        return b - a
    if math.isinf(b):
        return -math.exp(mu * a) / mu if mu < 0 else math.inf
    return math.exp(mu * a) * math.expm1(mu * (b - a)) / mu


class ClassPFunction:
    """Positive density on (0, inf) used as ``c`` in ``c(-psi)``.

    Subclasses provide vectorised evaluation, the derivative, the asymptotic
    exponential growth rate and, when one exists, a closed form for
    ``int_a^b exp(-lam*s) c(s) ds``.
    """

    #: lim sup of log(c(s))/s as s -> inf
    tail_rate = 0.0
    #: lim inf of c(s) as s -> inf
    tail_inf = 0.0
    #: True when exp(-tail_rate*s) c(s) has an integrable tail
    critical_integrable = False
    breakpoints: tuple = ()

    def __call__(self, s):
        raise NotImplementedError

    def deriv(self, s):
        raise NotImplementedError

    def log(self, s):
        return np.log(self(s))

    def exp_moment(self, lam, a, b):
        """Closed form of ``int_a^b exp(-lam s) c(s) ds`` or ``None``."""
        return None

    @property
    def spec(self) -> str:
        raise NotImplementedError

    @cached_property
    def total_mass(self) -> float:
        """``int_0^inf c(s) exp(-s) ds`` (the class-P certificate)."""
        from .quadrature import exp_weighted_integral

        return exp_weighted_integral(self, 1.0, 0.0, math.inf).value

    def __repr__(self):
        return f"{type(self).__name__}({self.spec!r})"


@dataclass(frozen=True, repr=False, eq=True)
class Constant(ClassPFunction):
    kappa: float = 1.0

    def __post_init__(self):
        if not self.kappa > 0:
            raise InvalidParameterError("constant density must be positive")

    @property
    def tail_inf(self):
        return self.kappa

    def __call__(self, s):
        return np.full(np.shape(s), self.kappa) if np.ndim(s) else self.kappa

    def deriv(self, s):
        return np.zeros(np.shape(s)) if np.ndim(s) else 0.0

    def exp_moment(self, lam, a, b):
        return self.kappa * exp_integral(-lam, a, b)

    @property
    def spec(self):
        return f"constant:{self.kappa:g}"


@dataclass(frozen=True, repr=False, eq=True)
class ExpRate(ClassPFunction):
    """``c(s) = exp(beta*s)``."""

    beta: float = 0.0

    @property
    def tail_rate(self):
        return self.beta

    @property
    def tail_inf(self):
        return math.inf if self.beta > 0 else (1.0 if self.beta == 0 else 0.0)

    def __call__(self, s):
        return np.exp(self.beta * np.asarray(s, dtype=float)) if np.ndim(s) else math.exp(self.beta * s)

    def log(self, s):
        return self.beta * np.asarray(s, dtype=float)

    def deriv(self, s):
        return self.beta * self(s)

    def exp_moment(self, lam, a, b):
        return exp_integral(self.beta - lam, a, b)

    @property
    def spec(self):
        return f"exp:{self.beta:g}"


@dataclass(frozen=True, repr=False, eq=True)
class PowerDecay(ClassPFunction):
    """``c(s) = (1+s)^(-p)``.  Its infimum on a tail ``(a, inf)`` is 0."""

    p: float = 2.0

    def __post_init__(self):
        if not self.p > 0:
            raise InvalidParameterError("decay power must be positive")

    @property
    def critical_integrable(self):
        return self.p > 1

    def __call__(self, s):
        return (1.0 + np.asarray(s, dtype=float)) ** (-self.p) if np.ndim(s) else (1.0 + s) ** (-self.p)

    def log(self, s):
        return -self.p * np.log1p(np.asarray(s, dtype=float))

    def deriv(self, s):
        s = np.asarray(s, dtype=float) if np.ndim(s) else s
        return -self.p * (1.0 + s) ** (-self.p - 1.0)

    @property
    def spec(self):
        return f"powdecay:{self.p:g}"


@dataclass(frozen=True, repr=False, eq=True)
class CtnFamily(ClassPFunction):
    """``c_t^n(x) = 1 - g_n(x - t)``, a smooth decreasing step from 1 to 1/(n+1)."""

    t: float = 1.0
    n: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParameterError("n must be a positive integer")
        if not self.t > 0:
            raise InvalidParameterError("t must be positive")

    @property
    def tail_inf(self):
        return 1.0 / (self.n + 1)

    @property
    def breakpoints(self):
        return (self.t, self.t + 2.0 / self.n)

    def __call__(self, s):
        return eval_ctn(self.t, self.n, s)

    def deriv(self, s):
        x = np.asarray(s, dtype=float) - self.t
        out = -(self.n * self.n / ((self.n + 1) * bump_mass())) * bump(self.n * x)
        return out if np.ndim(s) else float(out)

    def exp_moment(self, lam, a, b):
        lo, hi = self.breakpoints
        total = exp_integral(-lam, a, min(b, lo))
        total += exp_integral(-lam, max(a, hi), b) / (self.n + 1)
        ma, mb = max(a, lo), min(b, hi)
        if mb > ma:
            # smooth transition: composite 16-point Gauss-Legendre, ~1e-15 relative
            edges = np.linspace(ma, mb, _CTN_PANELS + 1)
            half = 0.5 * np.diff(edges)
            x = (0.5 * (edges[1:] + edges[:-1]))[:, None] + half[:, None] * _GL_X[None, :]
            f = np.exp(-lam * x) * self(x.ravel()).reshape(x.shape)
            total += float((f * _GL_W).sum(1) @ half)
        return total

    @property
    def spec(self):
        return f"ctn:{self.t:g},{self.n:d}"


@dataclass(frozen=True, repr=False, eq=True)
class Custom(ClassPFunction):
    """Tabulated density, interpolated monotonically in ``log c``.

    Outside the table the log is extended linearly with the end slopes.
    """

    s: tuple = field(default=())
    values: tuple = field(default=())
    label: str = "custom"

    def __post_init__(self):
        if len(self.s) < 2 or len(self.s) != len(self.values):
            raise InvalidParameterError("custom density needs matching sample arrays")
        if any(np.diff(self.s) <= 0):
            raise InvalidParameterError("custom sample abscissae must increase")
        for x, v in zip(self.s, self.values):
            if not (math.isfinite(v) and v > 0):
                raise EvaluationError(f"custom density is not positive at s={x!r}", point=x)

    @cached_property
    def _interp(self):
        return PchipInterpolator(np.asarray(self.s), np.log(np.asarray(self.values)), extrapolate=False)

    @property
    def _slopes(self):
        s, lv = np.asarray(self.s), np.log(np.asarray(self.values))
        return (lv[1] - lv[0]) / (s[1] - s[0]), (lv[-1] - lv[-2]) / (s[-1] - s[-2])

    @property
    def tail_rate(self):
        return self._slopes[1]

    @property
    def tail_inf(self):
        slope = self._slopes[1]
        return 0.0 if slope < 0 else (self.values[-1] if slope == 0 else math.inf)

    def log(self, s):
        x = np.atleast_1d(np.asarray(s, dtype=float))
        out = self._interp(x)
        lo, hi = self.s[0], self.s[-1]
        left, right = self._slopes
        out = np.where(x < lo, math.log(self.values[0]) + left * (x - lo), out)
        out = np.where(x > hi, math.log(self.values[-1]) + right * (x - hi), out)
        return out if np.ndim(s) else float(out[0])

    def __call__(self, s):
        return np.exp(self.log(s))

    def deriv(self, s):
        x = np.atleast_1d(np.asarray(s, dtype=float))
        d = self._interp.derivative()(x)
        left, right = self._slopes
        d = np.where(x < self.s[0], left, d)
        d = np.where(x > self.s[-1], right, d)
        out = d * np.exp(self.log(x))
        return out if np.ndim(s) else float(out[0])

    @property
    def spec(self):
        return self.label


def parse_cutoff(text: str) -> ClassPFunction:
    """Parse ``constant:k``, ``exp:b``, ``powdecay:p`` or ``ctn:t,n``."""
    try:
        name, _, arg = text.strip().partition(":")
        name = name.strip().lower()
        if name == "constant":
            return Constant(float(arg))
        if name == "exp":
            return ExpRate(float(arg))
        if name == "powdecay":
            return PowerDecay(float(arg))
        if name == "ctn":
            t, n = arg.split(",")
            return CtnFamily(float(t), int(n))
    except InvalidParameterError:
        raise
    except (TypeError, ValueError) as exc:
        raise InvalidParameterError(f"bad cutoff expression {text!r}: {exc}") from exc
    raise InvalidParameterError(f"unknown cutoff expression {text!r}")


# --- class-P validation --------------------------------------------------------

@dataclass(frozen=True)
class ClassPGrid:
    per_decade: int = 512
    lo: float = 1e-6
    hi: float = 1e3
    tail_points: tuple = (1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0)

    def samples(self):
        decades = math.log10(self.hi / self.lo)
        return np.geomspace(self.lo, self.hi, int(round(decades * self.per_decade)) + 1)


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    witness: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class ClassPReport:
    spec: str
    conditions: tuple
    certificate: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def condition(self, name) -> ConditionResult:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_class_p(c: ClassPFunction, grid: ClassPGrid = ClassPGrid()) -> ClassPReport:
    """Check the three class-P conditions on a geometric sample grid.

    Condition (3) is tested at the finitely many ``grid.tail_points`` over the
    sampled range; when the analytic tail infimum is 0 the detail says so.
    """
    from .quadrature import exp_weighted_integral

    s = grid.samples()
    with np.errstate(all="ignore"):
        logc = np.asarray(c.log(s), dtype=float)
    bad = ~np.isfinite(logc)
    if bad.any():
        x = float(s[np.argmax(bad)])
        raise EvaluationError(f"density {c.spec} is not finite and positive at s={x!r}", point=x)

    mass = exp_weighted_integral(c, 1.0, 0.0, math.inf)
    if mass.diverged:
        cond1 = ConditionResult("integrable", False, math.inf, "int c(s)e^-s ds diverges")
    elif not mass.converged:
        cond1 = ConditionResult("integrable", False, mass.value, "divergence test inconclusive")
    else:
        cond1 = ConditionResult("integrable", True, mass.value)

    g = logc - s
    steps = np.diff(g)
    slack = 1e-12 * np.maximum(1.0, np.abs(g[1:]))
    up = steps > slack
    if up.any():
        cond2 = ConditionResult("decreasing", False, float(s[1:][np.argmax(up)]), "c(s)e^-s increases")
    else:
        cond2 = ConditionResult("decreasing", True)

    cond3 = ConditionResult("tail_lower_bound", True)
    for a in grid.tail_points:
        sel = s > a
        if not sel.any():
            continue
        low = float(np.min(logc[sel]))
        if not math.exp(low) > 0:
            cond3 = ConditionResult("tail_lower_bound", False, a, f"inf over ({a:g}, {grid.hi:g}] is 0")
            break
    if cond3.passed and c.tail_inf == 0.0:
        cond3 = ConditionResult(
            "tail_lower_bound", True, None,
            f"sampled bound positive up to {grid.hi:g}; asymptotic infimum is 0",
        )
    return ClassPReport(c.spec, (cond1, cond2, cond3), mass.value if not mass.diverged else math.inf)


# --- bump function and its moments ----------------------------------------------

_CELLS = 2048


def bump(x):
    """``exp(-1/(1-(x-1)^2))`` on ``|x-1| < 1``, else 0."""
    x = np.asarray(x, dtype=float)
    y = 1.0 - (x - 1.0) ** 2
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def bump_mass() -> float:
    """``d = int f`` by adaptive quadrature to 1e-12."""
    return integrate.quad(bump, 0.0, 2.0, epsabs=0.0, epsrel=1e-13, limit=200)[0]


@lru_cache(maxsize=None)
def _moment_tables():
    edges = np.linspace(0.0, 2.0, _CELLS + 1)
    half = 0.5 * (edges[1] - edges[0])
    mids = 0.5 * (edges[1:] + edges[:-1])
    nodes = mids[:, None] + half * _GL_X[None, :]
    fw = bump(nodes) * (half * _GL_W)[None, :]
    cells = np.stack([fw.sum(1), (fw * nodes).sum(1), (fw * nodes**2).sum(1)])
    cum = np.concatenate([np.zeros((3, 1)), np.cumsum(cells, axis=1)], axis=1)
    if abs(cum[0, -1] - bump_mass()) > 1e-12 * bump_mass():
        raise ArithmeticError("bump moment table disagrees with adaptive quadrature")
    return edges, cum


def bump_moments(y):
    """``(int_0^y f, int_0^y u f, int_0^y u^2 f)`` for arrays ``y``."""
    edges, cum = _moment_tables()
    y = np.clip(np.asarray(y, dtype=float), 0.0, 2.0)
    idx = np.minimum((y / (edges[1] - edges[0])).astype(int), _CELLS - 1)
    x0 = edges[idx]
    half = 0.5 * (y - x0)
    nodes = (x0 + half)[..., None] + half[..., None] * _GL_X
    fw = bump(nodes) * (half[..., None] * _GL_W)
    m0 = cum[0, idx] + fw.sum(-1)
    m1 = cum[1, idx] + (fw * nodes).sum(-1)
    m2 = cum[2, idx] + (fw * nodes**2).sum(-1)
    return m0, m1, m2


def eval_g(n, x):
    """``g_n(x) = n/((n+1) d) * int_0^{n x} f``."""
    if n < 1:
        raise InvalidParameterError("n must be a positive integer")
    m0 = bump_moments(n * np.asarray(x, dtype=float))[0]
    out = n / ((n + 1) * bump_mass()) * m0
    return out if np.ndim(out) else float(out)


def eval_ctn(t, n, x):
    """``c_t^n(x) = 1 - g_n(x - t)``; equals 1 for ``x <= t``."""
    out = 1.0 - eval_g(n, np.asarray(x, dtype=float) - t)
    return out if np.ndim(out) else float(out)


# --- ramps -------------------------------------------------------------------

@dataclass(frozen=True)
class RampPair:
    """Linear ramp ``b`` rising on ``[-t0-B, -t0]`` and its primitive ``v`` with ``v(0)=0``."""

    t0: float
    B: float

    def __post_init__(self):
        if not (self.t0 > 0 and self.B > 0):
            raise InvalidParameterError("t0 and B must be positive")


def eval_ramp(rp: RampPair, t):
    t = np.asarray(t, dtype=float)
    t0, B = rp.t0, rp.B
    b = np.clip((t + t0 + B) / B, 0.0, 1.0)
    u = np.clip(t + t0 + B, 0.0, B)
    v = np.where(t >= -t0, t, -t0 - (B * B - u * u) / (2.0 * B))
    if b.ndim == 0:
        return float(b), float(v)
    return b, v


@dataclass(frozen=True)
class MollifiedV:
    """Smooth convex replacement ``v_eps`` of the ramp primitive.

    The second derivative is the indicator of
    ``(-t0-B+2eps, -t0-2eps)`` divided by ``B-4eps`` and convolved with a
    bump kernel supported in ``(-eps/4, eps/4)``.
    """

    t0: float
    B: float
    eps: float

    def __post_init__(self):
        if not (self.t0 > 0 and self.B > 0):
            raise InvalidParameterError("t0 and B must be positive")
        if not (0 < self.eps < self.B / 8):
            raise InvalidParameterError(f"eps must lie in (0, B/8), got {self.eps!r}")

    @property
    def support(self):
        """Open interval outside which ``v_eps''`` vanishes."""
        return (-self.t0 - self.B + self.eps, -self.t0 - self.eps)


def _kernel_cdf_moments(x, delta):
    # X = delta*(U-1) with U ~ f/d.  Returns P(X<x), E[(x-X)_+], E[(x-X)_+^2]/2.
    d = bump_mass()
    w = np.asarray(x, dtype=float) / delta + 1.0
    m0, m1, m2 = bump_moments(w)
    xs = np.asarray(x, dtype=float) + delta
    cdf = m0 / d
    first = (xs * m0 - delta * m1) / d
    second = (xs * xs * m0 - 2.0 * delta * xs * m1 + delta * delta * m2) / (2.0 * d)
    return cdf, first, second


def eval_mollified_v(mv: MollifiedV, t):
    """Return ``(v_eps, v_eps', v_eps'')`` at ``t``."""
    t = np.asarray(t, dtype=float)
    eps, delta = mv.eps, mv.eps / 4.0
    a = -mv.t0 - mv.B + 2.0 * eps
    b = -mv.t0 - 2.0 * eps
    L = mv.B - 4.0 * eps
    ra, qa, pa = _kernel_cdf_moments(t - a, delta)
    rb, qb, pb = _kernel_cdf_moments(t - b, delta)
    _, _, pa0 = _kernel_cdf_moments(np.float64(-a), delta)
    _, _, pb0 = _kernel_cdf_moments(np.float64(-b), delta)
    v2 = (ra - rb) / L
    v1 = (qa - qb) / L
    v = (pa - pb - (pa0 - pb0)) / L
    if t.ndim == 0:
        return float(v), float(v1), float(v2)
    return v, v1, v2
