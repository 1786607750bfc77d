"""Entropy of the folded normal and its KL divergence from the normal and half normal.

Both quantities reduce to the expectation ``E log(1 + exp(-2 mu X / sigma2))``
under the folded density.  Expanding the logarithm as an alternating series
and integrating term by term gives

    sum_n (-1)**(n+1) / n * [ exp(2n(n-1) theta**2) (1 - Phi((2n-1) theta))
                            + exp(2n(n+1) theta**2) (1 - Phi((2n+1) theta)) ]

Each bracket collapses to ``exp(-theta**2/2) / 2 * [erfcx((2n-1) theta/sqrt2) +
erfcx((2n+1) theta/sqrt2)]``, which is what is evaluated here.  The
``*_quadrature`` functions integrate the defining expressions directly and
serve as the reference values.
"""

from __future__ import annotations

import math

import numpy as np

from .distribution import Params, logpdf, moments, pdf
from .numerics import LOG2, SQRT2, erfcx, integrate

DEFAULT_ORDER = 3
MAX_ORDER = 64

#: below this theta the truncated series is replaced by quadrature
SERIES_MIN_THETA = 0.1

_TERM_CUTOFF = 1e-15


def _check_order(order: int) -> int:
    order = int(order)
    if not 1 <= order <= MAX_ORDER:
        raise ValueError(f"series order must be between 1 and {MAX_ORDER}, got {order}")
    return order


def series_reliable(p: Params) -> bool:
    """False where the truncated series is replaced by quadrature."""
    return p.theta >= SERIES_MIN_THETA


def kl_series_terms(p: Params, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Signed terms of the log(1 + e^-s) expansion, stopping early once negligible."""
    order = _check_order(order)
    th = p.theta
    n = np.arange(1, order + 1, dtype=float)
    brackets = 0.5 * math.exp(-0.5 * th * th) * (
        erfcx((2 * n - 1) * th / SQRT2) + erfcx((2 * n + 1) * th / SQRT2)
    )
    terms = np.where(n % 2 == 1, 1.0, -1.0) / n * np.atleast_1d(brackets)
    small = np.nonzero(np.abs(terms) < _TERM_CUTOFF)[0]
    if small.size:
        terms = terms[: small[0] + 1]
    return terms


def kl_from_normal_series(p: Params, order: int = DEFAULT_ORDER, fallback: bool = True) -> float:
    """Truncated-series KL(FN || N) in nats.

    With ``fallback`` (the default) values for ``theta < 0.1`` come from
    :func:`kl_from_normal_quadrature`, since the series there degenerates to a
    slowly converging alternating harmonic sum.  Check :func:`series_reliable`
    to know which route was taken.
    """
    if fallback and not series_reliable(p):
        return kl_from_normal_quadrature(p)
    return math.fsum(kl_series_terms(p, order))


def _breakpoints(p: Params):
    s = p.sigma
    return [x for x in (p.mu - 8 * s, p.mu - 2 * s, p.mu, p.mu + 2 * s, p.mu + 8 * s) if x > 0]


def kl_from_normal_quadrature(p: Params, rel_tol: float = 1e-8) -> float:
    """KL(FN || N) by adaptive quadrature of ``f(x) log(1 + exp(-2 mu x / sigma2))``."""
    if p.mu == 0.0:
        # the log factor is identically log 2
        return LOG2
    c = 2.0 * p.mu / p.sigma2

    def integrand(x):
        return pdf(x, p) * np.log1p(np.exp(-c * x))

    return integrate(integrand, 0.0, math.inf, rel_tol=rel_tol, points=_breakpoints(p)).value


def _entropy_offset(p: Params) -> float:
    # log sqrt(2 pi sigma2) + E (X - mu)^2 / (2 sigma2)
    mean_f = moments(p).mean_f
    return 0.5 * math.log(2.0 * math.pi * p.sigma2) + 0.5 + (p.mu**2 - p.mu * mean_f) / p.sigma2


def entropy_series(p: Params, order: int = DEFAULT_ORDER, fallback: bool = True) -> float:
    """Differential entropy (nats) using the truncated series for the log term."""
    return _entropy_offset(p) - kl_from_normal_series(p, order, fallback=fallback)


def entropy_quadrature(p: Params, rel_tol: float = 1e-8) -> float:
    """Differential entropy ``-int f log f`` by adaptive quadrature."""

    def integrand(x):
        f = pdf(x, p)
        lf = logpdf(x, p)
        return np.where(f > 0, -f * lf, 0.0)

    return integrate(integrand, 0.0, math.inf, rel_tol=rel_tol, points=_breakpoints(p)).value


def kl_from_halfnormal(
    p: Params,
    order: int = DEFAULT_ORDER,
    use_quadrature: bool = False,
    fallback: bool = True,
) -> float:
    """KL(FN(mu, sigma2) || FN(0, sigma2)).

    Equals ``-log 2 + (2 mu mean_f - mu**2) / (2 sigma2) + KL(FN || N)``; the
    last term comes from the series or, with ``use_quadrature``, from
    quadrature.  Low-order series values can dip below zero at small theta.
    """
    mean_f = moments(p).mean_f
    if use_quadrature:
        kl_n = kl_from_normal_quadrature(p)
    else:
        kl_n = kl_from_normal_series(p, order, fallback=fallback)
    return -LOG2 + (2.0 * p.mu * mean_f - p.mu**2) / (2.0 * p.sigma2) + kl_n
