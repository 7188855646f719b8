"""Constrained minimal-norm problems on superlevel and sublevel sets.

Two objectives are supported:

* ``C``: minimise ``int_{psi >= -t} |F1|^2`` over ``F1`` with the jet of ``F``
  at the base point;
* ``G``: minimise ``int_{psi < -t} |F1|^2 c(-psi)`` over the same coset.

Radial weights are solved exactly: monomials about the base point are
orthogonal for both objectives, so the minimiser is the jet truncation of
``F``.  Other weights go through a truncated monomial basis and a Gram
matrix assembled on quadrature nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import linalg, ndimage

from . import _kernels
from .cutoffs import ClassPFunction
from .errors import ConstraintViolationError, InvalidParameterError, SolverConditioningError
from .model import HolPoly, JetConstraint, Orientation, SuperlevelSet, Weight, psi_eval
from .quadrature import (
    DEFAULT_MC_SAMPLES,
    RadialIntegralSpec,
    disc_samples,
    monte_carlo_sum,
    polar_nodes,
    reduced_radial,
)

DEFAULT_DEGREE = 16
DEGREE_STEP = 4
DEGREE_RTOL = 1e-8
MAX_CONDITION = 1e13
COMPONENT_GRID = 512


@dataclass(frozen=True)
class ExtremalProblem:
    """One minimal-norm problem.

    ``method`` is ``"auto"`` (radial when possible), ``"radial"`` or
    ``"gram"``.  ``quadrature`` picks the Gram nodes: ``"monte-carlo"``
    (``samples`` disc points drawn with ``seed``) or ``"tensor-grid"``
    (boundary-adapted polar nodes).
    """

    weight: Weight
    F: HolPoly
    objective: str
    t: float
    c: ClassPFunction | None = None
    basis_degree: int = DEFAULT_DEGREE
    method: str = "auto"
    quadrature: str = "monte-carlo"
    samples: int = DEFAULT_MC_SAMPLES
    seed: int = 0
    constraint: JetConstraint = field(default=None)

    def __post_init__(self):
        if self.objective not in ("C", "G"):
            raise InvalidParameterError(f"objective must be 'C' or 'G', got {self.objective!r}")
        if self.objective == "C" and not self.t > 0:
            raise InvalidParameterError("the C objective needs t > 0")
        if self.objective == "G":
            if self.c is None:
                raise InvalidParameterError("the G objective needs a density c")
            if not self.t >= 0:
                raise InvalidParameterError("the G objective needs t >= 0")
        if self.method not in ("auto", "radial", "gram"):
            raise InvalidParameterError(f"unknown method {self.method!r}")
        if self.quadrature not in ("monte-carlo", "tensor-grid"):
            raise InvalidParameterError(f"unknown quadrature {self.quadrature!r}")
        if self.method == "radial" and not self.weight.is_radial:
            raise InvalidParameterError("the radial path needs a radial weight")
        if self.constraint is None:
            object.__setattr__(self, "constraint", JetConstraint.from_weight(self.weight, self.F))
        if self.basis_degree < self.constraint.order:
            raise InvalidParameterError("basis degree is below the jet order")

    @classmethod
    def c_on_dt(cls, weight, F, t, **kw):
        return cls(weight, F, "C", t, **kw)

    @classmethod
    def g_below(cls, weight, F, t, c, **kw):
        return cls(weight, F, "G", t, c=c, **kw)

    @property
    def path(self) -> str:
        if self.method == "auto":
            return "radial" if self.weight.is_radial else "gram"
        return self.method

    def with_degree(self, n) -> "ExtremalProblem":
        return ExtremalProblem(
            self.weight, self.F, self.objective, self.t, self.c, n, self.method,
            self.quadrature, self.samples, self.seed, self.constraint,
        )


@dataclass(frozen=True)
class ExtremalSolution:
    """Minimiser and minimum.

    ``reduced`` is the value in units of ``pi`` on the radial path (exact
    comparisons use it); ``gram`` is the Hermitian form on the basis
    ``(z - z0)^k, k <= basis_degree`` (Gram path only).
    """

    minimizer: HolPoly
    value: float
    gram_condition: float
    converged_in_degree: bool
    error_estimate: float = 0.0
    path: str = "radial"
    reduced: float | None = None
    gram: np.ndarray | None = field(default=None, repr=False, compare=False)


# --- radial path -----------------------------------------------------------

def radial_moment(p: ExtremalProblem, k):
    """Reduced norm of ``(z - z0)^k`` in the problem's norm; ``inf`` if divergent."""
    try:
        return _cached_moment(p.objective, p.weight.alpha, p.t, p.c, k)
    except TypeError:  # unhashable density (tabulated samples)
        return _cached_moment.__wrapped__(p.objective, p.weight.alpha, p.t, p.c, k)


@lru_cache(maxsize=8192)
def _cached_moment(objective, alpha, t, c, k):
    if objective == "C":
        return reduced_radial(RadialIntegralSpec(k, alpha, t, "one", "annulus"))
    return reduced_radial(RadialIntegralSpec(k, alpha, t, "c", "inner", c=c))


def _solve_radial(p: ExtremalProblem) -> ExtremalSolution:
    z0 = p.weight.base_point
    con = p.constraint
    total = 0.0
    converged = True
    for k, a in enumerate(con.fixed_coeffs):
        if a == 0:
            continue
        res = radial_moment(p, k)
        converged &= res.converged
        total += abs(a) ** 2 * res.value
    minimizer = HolPoly(con.fixed_coeffs, z0) if con.order else HolPoly((0j,), z0)
    return ExtremalSolution(
        minimizer, math.pi * total, 1.0, converged, 0.0, "radial", total,
    )


# --- Gram path -------------------------------------------------------------

def _region_mask(p: ExtremalProblem, psi):
    if p.objective == "C":
        return psi >= -p.t
    return psi < -p.t


def component_labels(weight: Weight, t, grid=COMPONENT_GRID):
    """Label grid of ``{psi < -t}`` and the label of the component holding ``z0``.

    Cells outside the set inherit the label of the nearest labelled cell so
    that points near the boundary can be classified.
    """
    x = (np.arange(grid) + 0.5) * (2.0 / grid) - 1.0
    Z = x[None, :] + 1j * x[:, None]
    inside = np.abs(Z) < 1.0
    psi = np.full(Z.shape, np.inf)
    psi[inside] = psi_eval(weight, Z[inside])
    mask = psi < -t
    labels, _ = ndimage.label(mask)
    idx = ndimage.distance_transform_edt(labels == 0, return_distances=False, return_indices=True)
    filled = labels[idx[0], idx[1]]
    z0 = weight.base_point
    col = min(grid - 1, int((z0.real + 1.0) * grid / 2.0))
    row = min(grid - 1, int((z0.imag + 1.0) * grid / 2.0))
    return filled, int(filled[row, col])


def _component_filter(weight, t, z):
    filled, target = component_labels(weight, t)
    grid = filled.shape[0]
    col = np.clip(((z.real + 1.0) * grid / 2.0).astype(int), 0, grid - 1)
    row = np.clip(((z.imag + 1.0) * grid / 2.0).astype(int), 0, grid - 1)
    return filled[row, col] == target


def _whole_disc_nodes(nth, panels):
    x, wx = np.polynomial.legendre.leggauss(8)
    cuts = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(cuts)
    r = ((0.5 * (cuts[:-1] + cuts[1:]))[:, None] + half[:, None] * x[None, :]).ravel()
    wr = (r * (half[:, None] * wx[None, :]).ravel())
    th = np.arange(nth) * (2.0 * np.pi / nth)
    z = (r[None, :] * np.exp(1j * th)[:, None]).ravel()
    w = np.tile(wr, nth) * (2.0 * np.pi / nth)
    return z, w


def quadrature_nodes(p: ExtremalProblem, degree):
    """Nodes ``z`` and weights ``w`` with ``sum w f(z)`` approximating the problem norm of ``f``.

    Monte-Carlo weights are ``pi/N`` times the region indicator and density.
    The ``G`` objective keeps only the component of ``{psi < -t}`` that
    contains the base point: away from it ``F1 = 0`` is admissible.
    """
    w = p.weight
    if p.quadrature == "monte-carlo":
        z, _ = disc_samples(p.samples, p.seed)
        base = np.full(z.size, math.pi / z.size)
    else:
        nth = max(128, 8 * (degree + DEGREE_STEP))
        panels = 4
        if p.objective == "G" and p.t == 0:
            z, base = _whole_disc_nodes(nth, panels)
        else:
            orient = Orientation.AT_LEAST if p.objective == "C" else Orientation.BELOW
            z, base = polar_nodes(SuperlevelSet(w, p.t, orient), 64, nth, panels)
    psi = psi_eval(w, z)
    keep = _region_mask(p, psi)
    if p.objective == "G":
        if p.t > 0:
            keep &= _component_filter(w, p.t, z)
        dens = np.zeros(z.size)
        dens[keep] = p.c(-psi[keep])
        weights = base * dens
    else:
        weights = np.where(keep, base, 0.0)
    sel = weights != 0
    return z[sel], weights[sel], z.size


def _gram(z, weights, center, degree):
    # hermitian form M[j, k] = sum w conj(p_j) p_k
    return np.conj(_kernels.weighted_gram(z, center, weights, degree))


def _minimise(M, a):
    """Minimise ``v^H M v`` over ``v = [a; x]``; returns (x, value, condition)."""
    m = len(a)
    n = M.shape[0]
    a = np.asarray(a, dtype=complex)
    if m == n:
        return np.zeros(0, complex), float(np.real(a.conj() @ M @ a)), 1.0
    free = slice(m, n)
    Mxx = M[free, free]
    d = np.sqrt(np.real(np.diag(Mxx)))
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise SolverConditioningError("Gram diagonal is not positive; too few quadrature nodes")
    S = Mxx / d[:, None] / d[None, :]
    ev = np.linalg.eigvalsh(S)
    cond = float(ev[-1] / ev[0]) if ev[0] > 0 else math.inf
    if not cond < MAX_CONDITION:
        raise SolverConditioningError(f"scaled Gram condition {cond:.3g} exceeds {MAX_CONDITION:.0e}")
    rhs = -(M[free, :m] @ a) / d
    y = linalg.cho_solve(linalg.cho_factor(S, lower=True), rhs)
    x = y / d
    v = np.concatenate([a, x])
    value = float(np.real(v.conj() @ M @ v))
    return x, value, cond


def _solve_gram_once(p: ExtremalProblem, degree, nodes=None):
    z0 = p.weight.base_point
    if nodes is None:
        nodes = quadrature_nodes(p, degree)
    z, weights, n = nodes
    M = _gram(z, weights, z0, degree)
    a = p.constraint.fixed_coeffs
    x, value, cond = _minimise(M, a)
    coeffs = np.concatenate([np.asarray(a, complex), x])
    minimizer = HolPoly(tuple(coeffs), z0)
    if p.quadrature == "monte-carlo":
        pts = np.zeros(n)
        pts[: z.size] = np.abs(minimizer(z)) ** 2 * weights * (n / math.pi)
        _, err = monte_carlo_sum(pts, n)
    else:
        err = 0.0
    return minimizer, value, cond, err, M


def _solve_gram(p: ExtremalProblem) -> ExtremalSolution:
    con = p.constraint
    z0 = p.weight.base_point
    if con.trivial:
        return ExtremalSolution(HolPoly((0j,), z0), 0.0, 1.0, True, 0.0, "gram")
    N = p.basis_degree
    if p.quadrature == "monte-carlo":
        nodes = quadrature_nodes(p, N + DEGREE_STEP)
        lo = _solve_gram_once(p, N, nodes)
        hi = _solve_gram_once(p, N + DEGREE_STEP, nodes)
    else:
        lo = _solve_gram_once(p, N)
        hi = _solve_gram_once(p, N + DEGREE_STEP)
    minimizer, value, cond, err, M = lo
    change = abs(value - hi[1])
    # Monte-Carlo nodes cannot resolve changes below their own noise
    tol = max(DEGREE_RTOL * abs(value), err)
    return ExtremalSolution(minimizer, value, cond, change <= tol, max(err, change), "gram", None, M)


def solve(p: ExtremalProblem) -> ExtremalSolution:
    """Minimiser and minimum of ``p``; the value may be ``0`` or ``inf``."""
    if p.path == "radial":
        return _solve_radial(p)
    return _solve_gram(p)


def g_function(weight, F, c, t, basis_degree=DEFAULT_DEGREE, **kw) -> float:
    """``G(t)``: the minimum of the ``G`` objective; ``inf`` on divergence."""
    return solve(ExtremalProblem.g_below(weight, F, t, c, basis_degree=basis_degree, **kw)).value


def c_value(weight, F, t, basis_degree=DEFAULT_DEGREE, **kw) -> float:
    """``C_{F,psi,t}(z0)``: the minimum of the ``C`` objective."""
    return solve(ExtremalProblem.c_on_dt(weight, F, t, basis_degree=basis_degree, **kw)).value


def problem_norm(p: ExtremalProblem, P: HolPoly, sol: ExtremalSolution | None = None) -> float:
    """Squared norm of ``P`` in the norm of ``p``.

    The radial path sums exact monomial moments.  The Gram path evaluates the
    stored Hermitian form, so ``P`` must fit in the basis.
    """
    Q = P.about(p.weight.base_point)
    if p.path == "radial":
        total = 0.0
        for k, b in enumerate(Q.coeffs):
            if b != 0:
                total += abs(b) ** 2 * radial_moment(p, k).value
        return math.pi * total
    if sol is None or sol.gram is None:
        M = _gram(*quadrature_nodes(p, p.basis_degree)[:2], p.weight.base_point, p.basis_degree)
    else:
        M = sol.gram
    if Q.degree >= M.shape[0]:
        raise InvalidParameterError(f"degree {Q.degree} exceeds the basis degree {M.shape[0] - 1}")
    v = np.zeros(M.shape[0], complex)
    v[: len(Q.coeffs)] = Q.coeffs
    return float(np.real(v.conj() @ M @ v))


def pythagoras_check(p: ExtremalProblem, Fhat: HolPoly, sol: ExtremalSolution | None = None) -> float:
    """``| ||F_t||^2 + ||Fhat - F_t||^2 - ||Fhat||^2 |`` in the problem norm."""
    if not p.constraint.is_satisfied_by(Fhat, p.weight.base_point):
        raise ConstraintViolationError("Fhat does not share the jet of F at the base point")
    if sol is None:
        sol = solve(p)
    Ft = sol.minimizer
    full = problem_norm(p, Fhat, sol)
    if not math.isfinite(full):
        raise ConstraintViolationError("Fhat has infinite norm")
    return abs(problem_norm(p, Ft, sol) + problem_norm(p, Fhat - Ft, sol) - full)
