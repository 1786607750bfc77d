"""Reference values by direct numerical integration.

The folded density is written out here from its definition, not imported,
so that these oracles share nothing with the closed forms under test except
the adaptive integrator.
"""

import math

import numpy as np

from foldednormal.numerics import integrate

GRID_MU = (0.0, 1.0, 2.0, 5.0, 20.0)
GRID_SIGMA2 = (0.25, 1.0, 4.0, 9.0, 25.0)
GRID = [(m, s2) for m in GRID_MU for s2 in GRID_SIGMA2]


def density(x, mu, s2):
    x = np.asarray(x, dtype=float)
    c = 1.0 / math.sqrt(2.0 * math.pi * s2)
    return c * (np.exp(-((x - mu) ** 2) / (2 * s2)) + np.exp(-((x + mu) ** 2) / (2 * s2)))


def _points(mu, s2, extra=()):
    s = math.sqrt(s2)
    pts = [mu + k * s for k in (-8, -3, -1, 0, 1, 3, 8)] + list(extra)
    return sorted({p for p in pts if p > 0})


def expect(g, mu, s2, lower=0.0, rel_tol=1e-11, extra=()):
    """``int_lower^inf g(x) f(x) dx``."""
    pts = [p for p in _points(mu, s2, extra) if p > lower]
    return integrate(lambda x: g(x) * density(x, mu, s2), lower, math.inf, rel_tol=rel_tol, points=pts).value


def mgf(t, mu, s2, rel_tol=1e-11):
    """``E exp(tX)`` with the exponentials combined so nothing overflows."""
    c = 1.0 / math.sqrt(2.0 * math.pi * s2)

    def f(x):
        return c * (np.exp(t * x - (x - mu) ** 2 / (2 * s2)) + np.exp(t * x - (x + mu) ** 2 / (2 * s2)))

    pts = _points(mu, s2, extra=(mu + t * s2, -mu + t * s2, mu + t * s2 + 5 * math.sqrt(s2)))
    return integrate(f, 0.0, math.inf, rel_tol=rel_tol, points=pts).value


def _oscillation_points(t, mu, s2):
    # break the range at every few oscillations as well as around the peak
    top = mu + 12 * math.sqrt(s2)
    step = max(2 * math.pi / abs(t), math.sqrt(s2)) if t else top
    return list(np.arange(step, top, step))[:400]


def cf_imag(t, mu, s2, rel_tol=1e-11):
    """``E sin(tX)`` by real-line quadrature."""
    return expect(lambda x: np.sin(t * x), mu, s2, rel_tol=rel_tol, extra=_oscillation_points(t, mu, s2))


def cf(t, mu, s2, rel_tol=1e-11):
    re = expect(lambda x: np.cos(t * x), mu, s2, rel_tol=rel_tol, extra=_oscillation_points(t, mu, s2))
    return complex(re, cf_imag(t, mu, s2, rel_tol))


def survival(t, mu, s2, rel_tol=1e-11):
    return expect(lambda x: np.ones_like(x), mu, s2, lower=t, rel_tol=rel_tol)


def mean_residual_life(t, mu, s2, rel_tol=1e-11):
    return expect(lambda x: x - t, mu, s2, lower=t, rel_tol=rel_tol) / survival(t, mu, s2, rel_tol)


def cdf(x, mu, s2, rel_tol=1e-11):
    if x == 0:
        return 0.0
    pts = [p for p in _points(mu, s2) if p < x]
    return integrate(lambda u: density(u, mu, s2), 0.0, x, rel_tol=rel_tol, points=pts).value


def entropy(mu, s2, rel_tol=1e-11):
    def g(x):
        f = density(x, mu, s2)
        return np.where(f > 0, -np.log(np.where(f > 0, f, 1.0)), 0.0)

    return expect(g, mu, s2, rel_tol=rel_tol)


def cf_real_shifted(t, mu, s2, rel_tol=1e-11):
    """``E cos(tX)`` by quadrature along the line ``Im y = s2 t``.

    ``cos`` is even, so ``E cos(t|Y|) = Re E exp(itY)`` with ``Y`` normal; moving
    that line integral up by ``s2 t`` turns the oscillating integrand into a
    smooth one.  The value can be far below what a real-line quadrature of
    ``cos(tx) f(x)`` resolves (``exp(-s2 t^2 / 2)`` reaches 1e-22 on the grid).
    """
    s = math.sqrt(s2)
    c = 1.0 / math.sqrt(2.0 * math.pi * s2)

    def f(u):
        y = u + 1j * s2 * t
        return (c * np.exp(1j * t * y - (y - mu) ** 2 / (2 * s2))).real

    pts = [mu + k * s for k in (-8, -3, -1, 0, 1, 3, 8)]
    left = integrate(lambda v: f(pts[0] - v), 0.0, math.inf, rel_tol=rel_tol).value
    mid = integrate(f, pts[0], pts[-1], rel_tol=rel_tol, points=pts[1:-1]).value
    right = integrate(lambda v: f(pts[-1] + v), 0.0, math.inf, rel_tol=rel_tol).value
    return left + mid + right
