"""Special functions and adaptive quadrature.

The normal CDF and the real scaled complementary error function are thin
wrappers over :mod:`scipy.special`.  The complex-argument CDF goes through the
Faddeeva function ``w(z) = exp(-z**2) erfc(-iz)`` and is evaluated in log space
so that products such as ``exp(-s**2 t**2 / 2) * (1 - Phi(-theta + i s t))``
never overflow.

:func:`integrate` is an adaptive Gauss-Kronrod (7/15) integrator.  It is used
as the reference ("true value") route throughout the package and deliberately
shares no code with the closed forms it checks.
"""

from __future__ import annotations

import cmath
import heapq
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import special

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
LOG2 = math.log(2.0)

#: beyond this |z| the standard normal CDF is returned as exactly 0 or 1
CDF_SATURATION = 40.0

#: largest |Im z| accepted by :func:`cdf_complex` and :func:`log_cdf_complex`
CDF_COMPLEX_IM_LIMIT = 50.0

_LOG_MAX = math.log(np.finfo(float).max)


class QuadratureError(ArithmeticError):
    """Adaptive integration did not reach the requested tolerance."""


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error_estimate: float
    evaluations: int

    def __post_init__(self):
        if not self.abs_error_estimate >= 0:
            raise ValueError("abs_error_estimate must be non-negative")
        if self.evaluations < 1:
            raise ValueError("evaluations must be positive")

    def __float__(self) -> float:
        return self.value


# --------------------------------------------------------------------------
# Real special functions
# --------------------------------------------------------------------------

def std_normal_pdf(z):
    z = np.asarray(z, dtype=float)
    out = np.exp(-0.5 * z * z) / SQRT2PI
    return out if out.ndim else float(out)


def std_normal_cdf(z):
    """Standard normal CDF, saturating to exactly 0/1 beyond ``|z| = 40``."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("std_normal_cdf requires finite arguments")
    out = special.ndtr(z)
    out = np.where(z > CDF_SATURATION, 1.0, np.where(z < -CDF_SATURATION, 0.0, out))
    return out if out.ndim else float(out)


def erfcx(z):
    """Scaled complementary error function ``exp(z**2) * erfc(z)``.

    Finite for all ``z >= -26.6``; below that the true value exceeds the
    double range.  Use :func:`log_erfcx` when negative arguments can be large.
    """
    z = np.asarray(z, dtype=float)
    out = special.erfcx(z)
    return out if out.ndim else float(out)


def log_erfcx(z):
    """``log(erfcx(z))`` without overflow for large negative ``z``."""
    z = np.asarray(z, dtype=float)
    neg = z < 0
    zpos = np.where(neg, 0.0, z)
    zneg = np.where(neg, z, 0.0)
    out = np.where(neg, zneg * zneg + np.log(special.erfc(zneg)), np.log(special.erfcx(zpos)))
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# Complex-argument normal CDF
# --------------------------------------------------------------------------

def _check_complex(z: complex) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite complex argument {z!r}")
    if abs(z.imag) > CDF_COMPLEX_IM_LIMIT:
        raise ValueError(
            f"|Im z| = {abs(z.imag):g} exceeds the stability limit {CDF_COMPLEX_IM_LIMIT:g}"
        )
    return z


def _log_cdf_left(z: complex) -> complex:
    # Re z <= 0: Phi(z) = 1/2 exp(-z^2/2) w(-iz/sqrt2), with Im(-iz/sqrt2) >= 0
    w = complex(special.wofz(-1j * z / SQRT2))
    return -0.5 * z * z + cmath.log(w) - LOG2


def log_cdf_complex(z: complex) -> complex:
    """Principal-ish logarithm of the analytically continued normal CDF.

    Only ``exp`` of the result is meaningful; the imaginary part is defined
    modulo ``2*pi``.
    """
    z = _check_complex(z)
    if z.real <= 0:
        return _log_cdf_left(z)
    lp = _log_cdf_left(-z)
    if lp.real > 0:
        # |Phi(-z)| > 1: factor it out before subtracting from one
        return lp + cmath.log(cmath.exp(-lp) - 1.0)
    return cmath.log(1.0 - cmath.exp(lp))


def cdf_complex(z: complex) -> complex:
    """Standard normal CDF continued to the complex plane.

    Raises ``ValueError`` when ``|Im z|`` exceeds :data:`CDF_COMPLEX_IM_LIMIT`
    and ``OverflowError`` when the value itself is not representable.
    """
    z = _check_complex(z)
    if z.imag == 0.0:
        return complex(std_normal_cdf(z.real), 0.0)
    left = z if z.real <= 0 else -z
    if 0.5 * (left.imag**2 - left.real**2) < _LOG_MAX - 10.0:
        # direct product keeps each component accurate, e.g. Re Phi(iy) = 1/2
        v = 0.5 * cmath.exp(-0.5 * left * left) * complex(special.wofz(-1j * left / SQRT2))
        return v if z.real <= 0 else 1.0 - v
    lv = log_cdf_complex(z)
    if lv.real > _LOG_MAX:
        raise OverflowError(f"|Phi({z})| exceeds the floating-point range")
    return cmath.exp(lv)


# --------------------------------------------------------------------------
# Adaptive Gauss-Kronrod quadrature
# --------------------------------------------------------------------------

# 15-point Kronrod abscissae (positive half) and weights, with the embedded
# 7-point Gauss weights on the odd-indexed nodes.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KW = np.concatenate([_WK[:-1], _WK[::-1]])
_GW = np.zeros(15)
_GW[1:7:2] = _WG[:3]
_GW[7] = _WG[3]
_GW[9:14:2] = _WG[2::-1]


def _gk15(g: Callable[[np.ndarray], np.ndarray], a: float, b: float):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    fx = np.asarray(g(mid + half * _NODES), dtype=float)
    if fx.shape != _NODES.shape:
        fx = np.broadcast_to(fx, _NODES.shape)
    if not np.all(np.isfinite(fx)):
        raise QuadratureError(f"integrand not finite on [{a}, {b}]")
    k = half * float(fx @ _KW)
    gauss = half * float(fx @ _GW)
    return k, abs(k - gauss)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lower: float,
    upper: float = math.inf,
    rel_tol: float = 1e-8,
    abs_tol: float = 0.0,
    points: Optional[Iterable[float]] = None,
    max_intervals: int = 2000,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[lower, upper]``.

    ``f`` is called with a 1-D array of abscissae and must return an array of
    the same shape.  ``upper`` may be ``inf``; the last piece is then mapped
    to ``[0, 1)`` with ``x = c + t / (1 - t)``.  ``points`` are optional break
    points (e.g. the location of a narrow peak) used for the initial
    partition.

    Intervals are bisected in order of decreasing error estimate until the
    summed estimate is below ``max(abs_tol, rel_tol * |value|)``.
    """
    if not 1e-14 < rel_tol < 1e-2:
        raise ValueError("rel_tol must lie in (1e-14, 1e-2)")
    if not math.isfinite(lower):
        raise ValueError("lower limit must be finite")
    if not upper > lower:
        raise ValueError("upper limit must exceed lower limit")

    cuts = sorted({float(p) for p in (points or ()) if lower < p < upper})
    finite_top = upper if math.isfinite(upper) else None
    edges = [lower] + cuts + ([finite_top] if finite_top is not None else [])

    pieces = []  # (integrand in its own variable, a, b)
    for a, b in zip(edges[:-1], edges[1:]):
        pieces.append((f, a, b))
    if finite_top is None:
        c = edges[-1]

        def tail(t, c=c):
            s = 1.0 - t
            return np.asarray(f(c + t / s), dtype=float) / (s * s)

        pieces.append((tail, 0.0, 1.0))

    heap = []
    total = 0.0
    err = 0.0
    evals = 0
    for idx, (g, a, b) in enumerate(pieces):
        val, e = _gk15(g, a, b)
        evals += 15
        total += val
        err += e
        heapq.heappush(heap, (-e, idx, a, b, val))

    while err > max(abs_tol, rel_tol * abs(total)):
        if len(heap) >= max_intervals:
            raise QuadratureError(
                f"no convergence after {len(heap)} subintervals "
                f"(value {total:.16g}, error estimate {err:.3g})"
            )
        neg_e, idx, a, b, val = heapq.heappop(heap)
        g = pieces[idx][0]
        m = 0.5 * (a + b)
        if not a < m < b:
            raise QuadratureError(f"subinterval [{a}, {b}] cannot be bisected further")
        v1, e1 = _gk15(g, a, m)
        v2, e2 = _gk15(g, m, b)
        evals += 30
        total += v1 + v2 - val
        err += e1 + e2 + neg_e
        for part in ((e1, a, m, v1), (e2, m, b, v2)):
            heapq.heappush(heap, (-part[0], idx, part[1], part[2], part[3]))

    # re-sum to shed accumulated update round-off
    total = math.fsum(item[4] for item in heap)
    err = math.fsum(-item[0] for item in heap)
    return QuadratureResult(value=total, abs_error_estimate=err, evaluations=evals)
