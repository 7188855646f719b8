"""Weights, polynomials, jet constraints and superlevel sets on the unit disc."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import _kernels
from .errors import InvalidParameterError

BOUNDARY_SAMPLES = 4096
NEGATIVITY_MARGIN = 1e-9


class WeightKind(str, enum.Enum):
    RADIAL_LOG = "radial"
    SUM_OF_LOG_POLES = "poles"
    # Green-function form: log|z - p| replaced by log|(z - p)/(1 - conj(p) z)|
    BLASCHKE_POLES = "blaschke"


@dataclass(frozen=True)
class Domain:
    """The unit disc.  Only ``radius=1`` centred at the origin is supported."""

    radius: float = 1.0
    center: complex = 0j

    def __post_init__(self):
        if self.radius != 1.0 or self.center != 0:
            raise InvalidParameterError("only the unit disc is supported")

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius


UNIT_DISC = Domain()


@dataclass(frozen=True)
class Weight:
    """A negative model weight on the unit disc with a log pole at ``base_point``.

    Use the :meth:`radial` and :meth:`log_poles` constructors.  Weights that
    are not negative on the disc are rejected; they are never shifted.
    """

    kind: WeightKind
    alphas: tuple
    poles: tuple
    checked: bool = True

    def __post_init__(self):
        if len(self.alphas) == 0 or len(self.alphas) != len(self.poles):
            raise InvalidParameterError("alphas and poles must be non-empty and the same length")
        for a in self.alphas:
            if not (a > 0 and math.isfinite(a)):
                raise InvalidParameterError(f"exponent must be positive, got {a!r}")
        for p in self.poles:
            if not abs(p) < 1.0:
                raise InvalidParameterError(f"pole {p!r} is not inside the unit disc")
        if self.kind is WeightKind.RADIAL_LOG and len(self.alphas) != 1:
            raise InvalidParameterError("a radial weight has exactly one pole")
        if self.checked:
            peak = self.boundary_max()
            if peak > NEGATIVITY_MARGIN:
                raise InvalidParameterError(
                    f"weight is not negative on the disc: boundary maximum {peak:.6g}"
                )

    @classmethod
    def radial(cls, alpha, base_point=0j):
        """``psi(z) = 2*alpha*log|z - z0|``; only ``z0 = 0`` is negative on the disc."""
        return cls(WeightKind.RADIAL_LOG, (float(alpha),), (complex(base_point),))

    @classmethod
    def log_poles(cls, alphas, poles, *, blaschke=False, checked=True):
        """Sum of weighted log poles; the first pole is the base point.

        With ``blaschke=True`` each factor ``|z - p|`` is replaced by the
        disc automorphism ``|(z - p)/(1 - conj(p) z)|``, which vanishes on the
        boundary.  ``checked=False`` skips the negativity test and is meant
        for evaluating raw sums only.
        """
        kind = WeightKind.BLASCHKE_POLES if blaschke else WeightKind.SUM_OF_LOG_POLES
        return cls(
            kind,
            tuple(float(a) for a in alphas),
            tuple(complex(p) for p in poles),
            checked=checked,
        )

    @property
    def base_point(self) -> complex:
        return self.poles[0]

    @property
    def alpha(self) -> float:
        """Exponent at the base point."""
        return self.alphas[0]

    @property
    def is_radial(self) -> bool:
        return self.kind is WeightKind.RADIAL_LOG or (
            len(self.poles) == 1 and self.poles[0] == 0
        )

    def __call__(self, z):
        return psi_eval(self, z)

    def boundary_max(self, samples=BOUNDARY_SAMPLES):
        theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        return float(np.max(psi_eval(self, np.exp(1j * theta))))

    def describe(self) -> str:
        if self.kind is WeightKind.RADIAL_LOG:
            return f"radial(alpha={self.alpha:g})"
        terms = ",".join(f"{a:g}@{p.real:g}{p.imag:+g}j" for a, p in zip(self.alphas, self.poles))
        return f"{self.kind.value}({terms})"


def psi_eval(w: Weight, z):
    """Evaluate the weight; returns ``-inf`` at a pole.  Scalars in, scalars out."""
    scalar = np.ndim(z) == 0
    zz = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    out = _kernels.log_pole_sum(
        zz, np.asarray(w.poles), np.asarray(w.alphas),
        blaschke=w.kind is WeightKind.BLASCHKE_POLES,
    )
    return float(out[0]) if scalar else out


def jet_order(alpha) -> int:
    """Vanishing order generating the multiplier ideal of ``2*alpha*log|z|``.

    ``|z|^{2k} |z|^{-2 alpha}`` is integrable near 0 iff ``k > alpha - 1``;
    the smallest such integer is ``floor(alpha)``.
    """
    if not alpha > 0 or not math.isfinite(alpha):
        raise InvalidParameterError(f"alpha must be positive, got {alpha!r}")
    return int(math.floor(alpha))


def superlevel_radius(w: Weight, t) -> float:
    """Radius ``exp(-t/(2 alpha))`` of the disc ``{psi < -t}`` for a radial weight."""
    if not t > 0:
        raise InvalidParameterError(f"level must be positive, got {t!r}")
    if not w.is_radial:
        raise InvalidParameterError("superlevel_radius needs a radial weight")
    return math.exp(-t / (2.0 * w.alpha))


@dataclass(frozen=True)
class HolPoly:
    """A polynomial stored by Taylor coefficients about ``center``."""

    coeffs: tuple
    center: complex = 0j

    def __post_init__(self):
        cs = tuple(complex(c) for c in self.coeffs) or (0j,)
        object.__setattr__(self, "coeffs", cs)
        object.__setattr__(self, "center", complex(self.center))

    @classmethod
    def from_coeffs(cls, coeffs, center=0j):
        return cls(tuple(coeffs), center)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coeff(self, k) -> complex:
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0j

    def __call__(self, z):
        z = np.asarray(z, dtype=np.complex128) - self.center
        acc = np.zeros_like(z)
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def __add__(self, other):
        other = other.about(self.center)
        n = max(len(self.coeffs), len(other.coeffs))
        return HolPoly(tuple(self.coeff(k) + other.coeff(k) for k in range(n)), self.center)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, lam):
        return HolPoly(tuple(lam * c for c in self.coeffs), self.center)

    def about(self, center) -> "HolPoly":
        """Re-expand about another point (binomial shift)."""
        center = complex(center)
        if center == self.center:
            return self
        d = center - self.center
        n = len(self.coeffs)
        out = [0j] * n
        for j, a in enumerate(self.coeffs):
            for k in range(j + 1):
                out[k] += a * comb(j, k) * d ** (j - k)
        return HolPoly(tuple(out), center)

    def truncate(self, order) -> "HolPoly":
        return HolPoly(self.coeffs[:max(order, 0)] or (0j,), self.center)

    def describe(self) -> str:
        terms = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            cs = f"{c.real:g}" if c.imag == 0 else f"({c.real:g}{c.imag:+g}j)"
            terms.append(cs if k == 0 else f"{cs}*z^{k}")
        return "+".join(terms) or "0"


@dataclass(frozen=True)
class JetConstraint:
    """Fixes the Taylor coefficients ``a_0..a_{order-1}`` at the base point."""

    order: int
    fixed_coeffs: tuple = field(default=())

    def __post_init__(self):
        if self.order < 0:
            raise InvalidParameterError("jet order must be nonnegative")
        if len(self.fixed_coeffs) != self.order:
            raise InvalidParameterError("need exactly `order` fixed coefficients")

    @classmethod
    def from_weight(cls, w: Weight, F: HolPoly) -> "JetConstraint":
        m = jet_order(w.alpha)
        G = F.about(w.base_point)
        return cls(m, tuple(G.coeff(k) for k in range(m)))

    @property
    def trivial(self) -> bool:
        """True when every fixed coefficient vanishes, i.e. F lies in the ideal."""
        return all(c == 0 for c in self.fixed_coeffs)

    def is_satisfied_by(self, poly: HolPoly, center, atol=1e-12) -> bool:
        p = poly.about(center)
        scale = max([1.0] + [abs(c) for c in self.fixed_coeffs])
        return all(abs(p.coeff(k) - c) <= atol * scale for k, c in enumerate(self.fixed_coeffs))


class Orientation(str, enum.Enum):
    AT_LEAST = "at_least"  # psi >= -t
    BELOW = "below"  # psi < -t


@dataclass(frozen=True)
class SuperlevelSet:
    weight: Weight
    t: float
    orientation: Orientation = Orientation.AT_LEAST

    def __post_init__(self):
        if not self.t > 0:
            raise InvalidParameterError(f"level must be positive, got {self.t!r}")

    def indicator(self, z, psi=None):
        """Boolean mask over points of the disc; ``psi`` may be passed precomputed."""
        if psi is None:
            psi = psi_eval(self.weight, z)
        z = np.asarray(z)
        inside = np.abs(z) < 1.0
        if self.orientation is Orientation.AT_LEAST:
            return inside & (psi >= -self.t)
        return inside & (psi < -self.t)
