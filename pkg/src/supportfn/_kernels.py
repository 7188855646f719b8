"""Hot inner loops, with a numba path and a pure-numpy path.

The backend is chosen once at import time from ``SUPPORTFN_BACKEND``
(``numba`` or ``numpy``).  When the variable is unset numba is used if it
imports.  Both paths take and return the same array types; random numbers
are always drawn by the caller with numpy so the two backends see identical
samples.
"""
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _np_log_pole_sum(zr, zi, pr, pi, alphas, blaschke):
    z = zr + 1j * zi
    out = np.zeros(z.shape, dtype=np.float64)
    with np.errstate(divide="ignore"):
        for a, p in zip(alphas, pr + 1j * pi):
            if blaschke:
                out += 2.0 * a * np.log(np.abs((z - p) / (1.0 - np.conj(p) * z)))
            else:
                out += 2.0 * a * np.log(np.abs(z - p))
    return out


def _np_weighted_gram(zr, zi, cr, ci, weights, degree):
    z = (zr - cr) + 1j * (zi - ci)
    keep = weights != 0.0
    z = z[keep]
    w = weights[keep]
    vand = np.vander(z, degree + 1, increasing=True)
    gram = (vand.T * w) @ vand.conj()
    return gram


if numba is not None:

    @numba.njit(cache=True)
    def _nb_log_pole_sum(zr, zi, pr, pi, alphas, blaschke):
        n = zr.shape[0]
        out = np.zeros(n)
        for i in range(n):
            acc = 0.0
            for j in range(alphas.shape[0]):
                dr = zr[i] - pr[j]
                di = zi[i] - pi[j]
                num = dr * dr + di * di
                if blaschke:
                    # 1 - conj(p) z
                    er = 1.0 - (pr[j] * zr[i] + pi[j] * zi[i])
                    ei = -(pr[j] * zi[i] - pi[j] * zr[i])
                    den = er * er + ei * ei
                    acc += alphas[j] * np.log(num / den)
                else:
                    acc += alphas[j] * np.log(num)
            out[i] = acc
        return out

    @numba.njit(cache=True)
    def _nb_weighted_gram(zr, zi, cr, ci, weights, degree):
        m = degree + 1
        gram = np.zeros((m, m), dtype=np.complex128)
        powers = np.empty(m, dtype=np.complex128)
        for i in range(zr.shape[0]):
            w = weights[i]
            if w == 0.0:
                continue
            z = complex(zr[i] - cr, zi[i] - ci)
            powers[0] = 1.0
            for k in range(1, m):
                powers[k] = powers[k - 1] * z
            for j in range(m):
                pj = powers[j] * w
                for k in range(j, m):
                    gram[j, k] += pj * powers[k].conjugate()
        for j in range(m):
            for k in range(j + 1, m):
                gram[k, j] = gram[j, k].conjugate()
        return gram

else:  # pragma: no cover
    _nb_log_pole_sum = None
    _nb_weighted_gram = None


def _select_backend():
    requested = os.environ.get("SUPPORTFN_BACKEND", "").strip().lower()
    if requested == "numpy" or numba is None:
        return "numpy"
    if requested not in ("", "numba"):
        raise ValueError(f"unknown SUPPORTFN_BACKEND {requested!r}")
    return "numba"


BACKEND = _select_backend()

IMPLEMENTATIONS = {
    "numpy": {"log_pole_sum": _np_log_pole_sum, "weighted_gram": _np_weighted_gram},
}
if numba is not None:
    IMPLEMENTATIONS["numba"] = {
        "log_pole_sum": _nb_log_pole_sum,
        "weighted_gram": _nb_weighted_gram,
    }


def log_pole_sum(z, poles, alphas, blaschke=False, backend=None):
    """Sum of ``2*alpha*log|z - p|`` (or of Blaschke factors) over poles.

    The numba loop accumulates ``alpha*log|.|**2``, which is the same sum.
    """
    z = np.ascontiguousarray(z, dtype=np.complex128)
    poles = np.asarray(poles, dtype=np.complex128)
    fn = IMPLEMENTATIONS[backend or BACKEND]["log_pole_sum"]
    flat = z.ravel()
    out = fn(
        np.ascontiguousarray(flat.real),
        np.ascontiguousarray(flat.imag),
        np.ascontiguousarray(poles.real),
        np.ascontiguousarray(poles.imag),
        np.asarray(alphas, dtype=np.float64),
        bool(blaschke),
    )
    return out.reshape(z.shape)


def weighted_gram(z, center, weights, degree, backend=None):
    """Unnormalised Gram sum ``sum_i w_i (z_i-c)^j conj((z_i-c)^k)``."""
    z = np.ascontiguousarray(z, dtype=np.complex128)
    fn = IMPLEMENTATIONS[backend or BACKEND]["weighted_gram"]
    center = complex(center)
    return fn(
        np.ascontiguousarray(z.real),
        np.ascontiguousarray(z.imag),
        center.real,
        center.imag,
        np.ascontiguousarray(weights, dtype=np.float64),
        int(degree),
    )
