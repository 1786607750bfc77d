"""Maximum likelihood for FN(mu, sigma2).

Three fitters share one likelihood:

* :func:`fit_recursive` alternates the score equation for ``mu`` at fixed
  ``sigma2`` with the closed-form update ``sigma2 = mean(x**2) - mu**2``;
* :func:`fit_rootsearch` substitutes that update into the score equation and
  solves the resulting one-parameter equation;
* :func:`fit_simplex` maximises the log-likelihood directly with Nelder-Mead
  over ``(mu, log sigma2)``.

The score equation is written ``g(mu) = n mu - sum x tanh(mu x / sigma2)``,
the same function as ``sum x (1 - e^{2 mu x/s2}) / (1 + e^{2 mu x/s2}) + n mu``
but free of overflow.  ``g`` is odd, so ``mu = 0`` is always a root and the
non-zero roots come in a +/- pair; the positive one is reported.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, stats

from .distribution import Params

log = logging.getLogger(__name__)

Interval = Tuple[float, float]


class Method(str, enum.Enum):
    RECURSIVE = "recursive"
    ROOT_SEARCH = "root_search"
    SIMPLEX = "simplex"


class FitError(RuntimeError):
    """A fit could not produce an estimate."""


class ConvergenceError(FitError):
    pass


class SingularInformationError(FitError):
    """The observed information matrix is not positive definite."""


@dataclass(frozen=True)
class Dataset:
    """Non-negative observations."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ValueError("dataset is empty")
        if not np.all(np.isfinite(v)):
            raise ValueError("dataset contains non-finite values")
        if np.any(v < 0):
            raise ValueError(f"dataset contains negative values (first at index {int(np.argmax(v < 0))})")
        if not np.any(v > 0):
            raise ValueError("dataset needs at least one strictly positive value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n


DataLike = Union[Dataset, Sequence[float], np.ndarray]


def as_dataset(data: DataLike) -> Dataset:
    return data if isinstance(data, Dataset) else Dataset(np.asarray(data, dtype=float))


@dataclass(frozen=True)
class FitResult:
    params_hat: Params
    loglik: float
    se_mu: Optional[float]
    se_sigma2: float
    corr: Optional[float]
    ci_mu: Optional[Interval]
    ci_sigma2: Interval
    method: Method
    iterations: int
    converged: bool
    half_normal: bool = False
    covariance: Optional[np.ndarray] = None
    level: float = 0.95

    @property
    def mu_hat(self) -> float:
        return self.params_hat.mu

    @property
    def sigma2_hat(self) -> float:
        return self.params_hat.sigma2

    def to_dict(self) -> dict:
        return {
            "mu_hat": self.mu_hat,
            "sigma2_hat": self.sigma2_hat,
            "se_mu": self.se_mu,
            "se_sigma2": self.se_sigma2,
            "corr": self.corr,
            "ci_mu": list(self.ci_mu) if self.ci_mu is not None else None,
            "ci_sigma2": list(self.ci_sigma2),
            "level": self.level,
            "loglik": self.loglik,
            "method": self.method.value,
            "iterations": self.iterations,
            "converged": self.converged,
            "half_normal": self.half_normal,
        }


# --------------------------------------------------------------------------
# Likelihood pieces
# --------------------------------------------------------------------------

def _loglik_raw(x: np.ndarray, mu, sigma2):
    """Log-likelihood for any real ``mu``; broadcasts over ``mu``/``sigma2``."""
    n = x.shape[-1]
    mu = np.asarray(mu, dtype=float)[..., None]
    sigma2 = np.asarray(sigma2, dtype=float)[..., None]
    q = -np.sum((x - mu) ** 2, axis=-1) / (2.0 * sigma2[..., 0])
    corr = np.sum(np.logaddexp(0.0, -2.0 * mu * x / sigma2), axis=-1)
    return -0.5 * n * np.log(2.0 * np.pi * sigma2[..., 0]) + q + corr


def _log_cosh(y: np.ndarray) -> np.ndarray:
    a = np.abs(y)
    small = a < 1.0
    # log1p(2 sinh^2(y/2)) keeps full relative precision as y -> 0
    near = np.log1p(2.0 * np.sinh(0.5 * np.where(small, a, 0.0)) ** 2)
    far = a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)
    return np.where(small, near, far)


def _loglik_gain(x: np.ndarray, mu: float, sigma2: float, m2: float) -> float:
    """``loglik(mu, sigma2) - loglik(0, m2)`` with ``m2 = mean(x**2)``.

    Uses ``loglik = -n/2 log(2 pi s2) - n m2/(2 s2) + n log 2 - n mu^2/(2 s2)
    + sum log cosh(mu x / s2)`` and forms the sigma2 part and the mu part
    separately, each without cancellation.  Near the ``mu = 0`` boundary the
    likelihood is flat to fourth order in ``mu``; this form resolves it
    where the plain sum of ``O(n)`` terms cannot.
    """
    n = x.size
    d = sigma2 / m2 - 1.0
    # log(r) + 1/r - 1 with r = 1 + d, of order d^2
    scale_part = -0.5 * n * (math.log1p(d) - d / (1.0 + d))
    mu_part = float(np.sum(_log_cosh(mu * x / sigma2))) - 0.5 * n * mu * mu / sigma2
    return scale_part + mu_part


def loglik(data: DataLike, p: Params) -> float:
    """Log-likelihood ``-n/2 log(2 pi s2) - sum (x-mu)^2/(2 s2) + sum log(1 + e^{-2 mu x/s2})``."""
    x = as_dataset(data).values
    return float(_loglik_raw(x, p.mu, p.sigma2))


def score_mu_equation(data: DataLike, mu: float, sigma2: float) -> float:
    """``g(mu) = n mu - sum x tanh(mu x / sigma2)``; ``g = -sigma2 * dl/dmu``."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    x = as_dataset(data).values
    return float(x.size * mu - np.sum(x * np.tanh(mu * x / sigma2)))


def sigma2_given_mu(data: DataLike, mu: float) -> float:
    """Variance that solves the sigma2-score for a given ``mu``: ``mean(x**2) - mu**2``."""
    x = as_dataset(data).values
    s2 = float(np.mean(x * x)) - mu * mu
    if not s2 > 0:
        raise ValueError(f"mu = {mu!r} leaves no positive variance (mean(x^2) = {np.mean(x * x)!r})")
    return s2


# --------------------------------------------------------------------------
# Profile root search (vectorised over datasets)
# --------------------------------------------------------------------------

# scan points as fractions of sqrt(mean x^2); dense near zero where the
# profile score behaves like mu^3
_SCAN = np.unique(np.concatenate([
    np.geomspace(1e-4, 0.05, 12),
    np.linspace(0.05, 1.0, 60)[:-1],
    1.0 - np.geomspace(1e-3, 1e-10, 8),
]))


# cap on the size of the (rows, scan points, n) work array
_BATCH_ELEMENTS = 4_000_000


def _profile_score(x: np.ndarray, m2: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """``h(mu) = g(mu; m2 - mu^2)`` for rows of ``x``; ``mu`` has shape (rows, k)."""
    s2 = m2[:, None] - mu * mu
    arg = mu[..., None] * x[:, None, :] / s2[..., None]
    return x.shape[-1] * mu - np.sum(x[:, None, :] * np.tanh(arg), axis=-1)


def _bisect_rows(x, m2, lo, hi, iters=200):
    """Vectorised bisection for h on [lo, hi] with h(lo) < 0 < h(hi)."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        done = (mid <= lo) | (mid >= hi)
        if np.all(done):
            break
        neg = _profile_score(x, m2, mid[:, None])[:, 0] < 0
        lo = np.where(neg & ~done, mid, lo)
        hi = np.where(~neg & ~done, mid, hi)
    return 0.5 * (lo + hi)


def profile_mle_batch(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Positive-root MLE of ``mu`` for every row of ``x`` (shape (B, n)).

    Returns ``(mu_hat, boundary)``; ``boundary`` rows have no positive root
    and get ``mu_hat = 0`` (the half-normal limit).  When the scan shows more
    than one sign change from - to +, the candidate with the larger
    log-likelihood wins.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    rows = x.shape[0]
    chunk = max(1, _BATCH_ELEMENTS // (x.shape[1] * _SCAN.size))
    if rows > chunk:
        parts = [profile_mle_batch(x[i : i + chunk]) for i in range(0, rows, chunk)]
        return np.concatenate([a for a, _ in parts]), np.concatenate([b for _, b in parts])
    m2 = np.mean(x * x, axis=1)
    root_m2 = np.sqrt(m2)
    grid = root_m2[:, None] * _SCAN[None, :]
    h = _profile_score(x, m2, grid)
    cross = (h[:, :-1] < 0) & (h[:, 1:] >= 0)
    mu_hat = np.zeros(rows)
    boundary = ~np.any(cross, axis=1)

    r_idx, k_idx = np.nonzero(cross)
    if r_idx.size:
        roots = _bisect_rows(x[r_idx], m2[r_idx], grid[r_idx, k_idx], grid[r_idx, k_idx + 1])
        ll = _loglik_raw(x[r_idx], roots, m2[r_idx] - roots * roots)
        best = np.full(rows, -np.inf)
        for r, root, value in zip(r_idx, roots, ll):
            if value > best[r]:
                best[r] = value
                mu_hat[r] = root
    return mu_hat, boundary


# --------------------------------------------------------------------------
# Observed information and intervals
# --------------------------------------------------------------------------

# eps^(1/4) balances truncation and round-off for second differences
_FD_REL = np.finfo(float).eps ** 0.25


def _steps(p: Params) -> Tuple[float, float]:
    return _FD_REL * max(p.mu, p.sigma), _FD_REL * p.sigma2


def hessian(data: DataLike, p: Params) -> np.ndarray:
    """Central finite-difference Hessian of the log-likelihood in (mu, sigma2)."""
    x = as_dataset(data).values
    mu, s2 = p.mu, p.sigma2
    hm, hs = _steps(p)
    f = lambda a, b: float(_loglik_raw(x, a, b))  # noqa: E731
    f0 = f(mu, s2)
    d_mm = (f(mu + hm, s2) - 2 * f0 + f(mu - hm, s2)) / hm**2
    d_ss = (f(mu, s2 + hs) - 2 * f0 + f(mu, s2 - hs)) / hs**2
    d_ms = (
        f(mu + hm, s2 + hs) - f(mu + hm, s2 - hs) - f(mu - hm, s2 + hs) + f(mu - hm, s2 - hs)
    ) / (4 * hm * hs)
    H = np.array([[d_mm, d_ms], [d_ms, d_ss]])
    return 0.5 * (H + H.T)


def observed_information(data: DataLike, p: Params) -> np.ndarray:
    """Negative Hessian of the log-likelihood at ``p``; must be positive definite."""
    info = -hessian(data, p)
    try:
        np.linalg.cholesky(info)
    except np.linalg.LinAlgError:
        raise SingularInformationError(
            f"observed information is not positive definite at {p}: {info.tolist()}"
        ) from None
    return info


def _z(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must lie in (0, 1), got {level!r}")
    return float(stats.norm.ppf(0.5 * (1.0 + level)))


def asymptotic_ci(fit: FitResult, level: float = 0.95) -> Tuple[Optional[Interval], Interval]:
    """Wald intervals ``estimate +/- z * se`` for (mu, sigma2)."""
    z = _z(level)
    ci_mu = None
    if fit.se_mu is not None:
        ci_mu = (fit.mu_hat - z * fit.se_mu, fit.mu_hat + z * fit.se_mu)
    ci_s2 = (fit.sigma2_hat - z * fit.se_sigma2, fit.sigma2_hat + z * fit.se_sigma2)
    return ci_mu, ci_s2


def _finish(
    x: np.ndarray,
    mu: float,
    sigma2: float,
    method: Method,
    iterations: int,
    converged: bool,
    level: float,
    half_normal: bool = False,
) -> FitResult:
    p = Params(mu, sigma2)
    ll = float(_loglik_raw(x, p.mu, p.sigma2))
    z = _z(level)
    if half_normal:
        # mu sits on the boundary; only sigma2 has a usable curvature
        hs = _FD_REL * sigma2
        f = lambda b: float(_loglik_raw(x, 0.0, b))  # noqa: E731
        d_ss = (f(sigma2 + hs) - 2 * f(sigma2) + f(sigma2 - hs)) / hs**2
        if not d_ss < 0:
            raise SingularInformationError("no curvature in sigma2 at the half-normal fit")
        se_s2 = math.sqrt(-1.0 / d_ss)
        return FitResult(
            params_hat=p, loglik=ll, se_mu=None, se_sigma2=se_s2, corr=None, ci_mu=None,
            ci_sigma2=(sigma2 - z * se_s2, sigma2 + z * se_s2), method=method,
            iterations=iterations, converged=converged, half_normal=True, level=level,
        )
    cov = np.linalg.inv(observed_information(x, p))
    se_mu = math.sqrt(cov[0, 0])
    se_s2 = math.sqrt(cov[1, 1])
    corr = float(np.clip(cov[0, 1] / (se_mu * se_s2), -1.0, 1.0))
    return FitResult(
        params_hat=p, loglik=ll, se_mu=se_mu, se_sigma2=se_s2, corr=corr,
        ci_mu=(p.mu - z * se_mu, p.mu + z * se_mu),
        ci_sigma2=(sigma2 - z * se_s2, sigma2 + z * se_s2),
        method=method, iterations=iterations, converged=converged, covariance=cov, level=level,
    )


def _check_fit_data(data: DataLike) -> np.ndarray:
    x = as_dataset(data).values
    if x.size < 2:
        raise ValueError("at least two observations are needed for a fit")
    if np.ptp(x) == 0.0:
        raise FitError("all observations are equal; the likelihood is unbounded as sigma2 -> 0")
    return x


# --------------------------------------------------------------------------
# Fitters
# --------------------------------------------------------------------------

def fit_rootsearch(data: DataLike, tol: float = 1e-12, level: float = 0.95) -> FitResult:
    """Solve the one-parameter profile score equation for the positive root.

    ``tol`` is accepted for interface symmetry; the bisection always runs to
    adjacent floating-point numbers.
    """
    x = _check_fit_data(data)
    mu, boundary = profile_mle_batch(x[None, :])
    m2 = float(np.mean(x * x))
    if boundary[0]:
        return _finish(x, 0.0, m2, Method.ROOT_SEARCH, 0, True, level, half_normal=True)
    mu_hat = float(mu[0])
    return _finish(x, mu_hat, m2 - mu_hat * mu_hat, Method.ROOT_SEARCH, 1, True, level)


def fit_recursive(
    data: DataLike,
    tol: float = 1e-8,
    max_iter: int = 2000,
    level: float = 0.95,
    init_sigma2: Optional[float] = None,
    score_tol: float = 1e-11,
) -> FitResult:
    """Alternate the mu-score root (sigma2 fixed) with the sigma2 update.

    Starts from the sample variance and stops once the log-likelihood changes
    by less than ``tol`` between sweeps and the mu-score at the updated
    sigma2 is below ``score_tol * n * sqrt(mean(x**2))``.  The alternation
    converges linearly and, for small ``mu / sigma``, slowly enough that the
    log-likelihood change alone stops it well short of the fixed point.
    Data whose profile score has no positive root return the half-normal
    boundary fit.
    """
    x = _check_fit_data(data)
    n = x.size
    m2 = float(np.mean(x * x))
    _, boundary = profile_mle_batch(x[None, :])
    if boundary[0]:
        return _finish(x, 0.0, m2, Method.RECURSIVE, 0, True, level, half_normal=True)

    s2 = float(np.var(x, ddof=1)) if init_sigma2 is None else float(init_sigma2)
    if not 0 < s2 < m2:
        s2 = 0.5 * m2
    hi = math.sqrt(m2)
    prev = -math.inf
    mu = 0.0
    for it in range(1, max_iter + 1):
        g = lambda m: n * m - float(np.sum(x * np.tanh(m * x / s2)))  # noqa: E731
        # g < 0 just right of zero because s2 < mean(x^2); g(sqrt(m2)) >= 0
        lo = hi * 1e-6
        while g(lo) >= 0 and lo > 1e-300:
            lo *= 1e-3
        mu = optimize.brentq(g, lo, hi, xtol=1e-14 * hi, rtol=4 * np.finfo(float).eps)
        s2 = m2 - mu * mu
        ll = float(_loglik_raw(x, mu, s2))
        resid = abs(score_mu_equation(x, mu, s2))
        if abs(ll - prev) < tol and resid <= score_tol * n * hi:
            return _finish(x, mu, s2, Method.RECURSIVE, it, True, level)
        prev = ll
    raise ConvergenceError(f"recursive scheme did not converge in {max_iter} iterations")


def fit_simplex(
    data: DataLike,
    init: Optional[Params] = None,
    tol: float = 1e-10,
    max_iter: int = 5000,
    level: float = 0.95,
) -> FitResult:
    """Nelder-Mead maximisation of the log-likelihood over ``(mu, log sigma2)``.

    Default start is the sample mean and sample variance.  ``init`` may carry
    a negative ``mu`` (through ``Params.mu_sign``); either sign ends at the
    same ``|mu_hat|``.  The objective is the log-likelihood measured from the
    half-normal point ``(0, mean(x**2))``; if the search ends no higher than
    that point, the half-normal fit is returned.
    """
    x = _check_fit_data(data)
    if init is None:
        mu0, s20 = float(np.mean(x)), float(np.var(x, ddof=1))
    else:
        mu0, s20 = init.mu_sign * init.mu, init.sigma2

    m2 = float(np.mean(x * x))

    def neg(v):
        # same maximiser as the log-likelihood, measured from the mu = 0 fit
        return -_loglik_gain(x, v[0], math.exp(v[1]), m2)

    res = optimize.minimize(
        neg,
        np.array([mu0, math.log(s20)]),
        method="Nelder-Mead",
        options={"xatol": tol, "fatol": tol, "maxiter": max_iter, "maxfev": 2 * max_iter},
    )
    mu_hat, s2_hat = abs(float(res.x[0])), math.exp(float(res.x[1]))
    if not res.success:
        log.warning("simplex stopped early: %s", res.message)
    # rounding level of the gain at the final point
    noise = 64.0 * np.finfo(float).eps * x.size * (mu_hat**2 / s2_hat + abs(s2_hat / m2 - 1.0))
    if _loglik_gain(x, mu_hat, s2_hat, m2) <= noise:
        # the search did not beat the half-normal point: no interior maximum
        return _finish(x, 0.0, m2, Method.SIMPLEX, int(res.nit), bool(res.success), level, half_normal=True)
    return _finish(x, mu_hat, s2_hat, Method.SIMPLEX, int(res.nit), bool(res.success), level)


_FITTERS = {
    Method.RECURSIVE: fit_recursive,
    Method.ROOT_SEARCH: fit_rootsearch,
    Method.SIMPLEX: fit_simplex,
}


def fit(data: DataLike, method: Union[Method, str] = Method.ROOT_SEARCH, level: float = 0.95) -> FitResult:
    return _FITTERS[Method(method)](data, level=level)


def profile_loglik(data: DataLike, mu) -> np.ndarray:
    """Log-likelihood along ``sigma2 = mean(x**2) - mu**2``; ``|mu| < sqrt(mean x^2)``."""
    x = as_dataset(data).values
    mu = np.asarray(mu, dtype=float)
    return _loglik_raw(x, mu, np.mean(x * x) - mu * mu)
