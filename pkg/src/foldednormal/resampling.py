"""Percentile bootstrap intervals for (mu, sigma2)."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .distribution import Params
from .estimation import (
    DataLike,
    FitError,
    Method,
    _check_fit_data,
    fit,
    profile_mle_batch,
)

log = logging.getLogger(__name__)

SeedLike = Union[int, Sequence[int]]

MIN_REPLICATES = 100


class BootstrapError(RuntimeError):
    """Too many bootstrap replicates could not be fitted."""


@dataclass(frozen=True)
class BootstrapResult:
    B: int
    ci_mu: Tuple[float, float]
    ci_sigma2: Tuple[float, float]
    replicate_estimates: Tuple[Params, ...]
    failures: int
    level: float = 0.95

    def __post_init__(self):
        if len(self.replicate_estimates) + self.failures != self.B:
            raise ValueError("replicate count plus failures must equal B")
        if not (self.ci_mu[0] <= self.ci_mu[1] and self.ci_sigma2[0] <= self.ci_sigma2[1]):
            raise ValueError("interval endpoints out of order")

    @property
    def mu_replicates(self) -> np.ndarray:
        return np.array([p.mu for p in self.replicate_estimates])

    @property
    def sigma2_replicates(self) -> np.ndarray:
        return np.array([p.sigma2 for p in self.replicate_estimates])

    def to_dict(self) -> dict:
        return {
            "B": self.B,
            "level": self.level,
            "ci_mu": list(self.ci_mu),
            "ci_sigma2": list(self.ci_sigma2),
            "failures": self.failures,
        }


def empirical_quantile(values, q: float) -> float:
    """Sample quantile with linear interpolation between order statistics.

    This is the type-7 rule: ``h = (m - 1) q`` on the sorted values.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("no values to take a quantile of")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q!r}")
    return float(np.quantile(v, q, method="linear"))


def _seed_key(seed: SeedLike) -> list:
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(s) for s in seed]


def resample_indices(n: int, B: int, seed: SeedLike = 0) -> np.ndarray:
    """Index matrix of shape (B, n); row ``b`` comes from its own stream ``(seed, b)``.

    The indices depend only on ``n``, ``B`` and ``seed``, never on the data,
    and row ``b`` is the same whatever ``B`` is.
    """
    key = _seed_key(seed)
    out = np.empty((B, n), dtype=np.intp)
    for b in range(B):
        out[b] = np.random.default_rng(key + [b]).integers(0, n, size=n)
    return out


def _fit_rows(samples: np.ndarray, method: Method):
    """Return (mu, sigma2, ok) arrays for each resampled row."""
    B = samples.shape[0]
    m2 = np.mean(samples * samples, axis=1)
    # a resample of one repeated value has an unbounded likelihood
    ok = np.ptp(samples, axis=1) > 0
    if method is Method.ROOT_SEARCH:
        mu, _ = profile_mle_batch(samples)
        mu = np.where(ok, mu, np.nan)
        return mu, m2 - mu * mu, ok
    mu = np.full(B, np.nan)
    s2 = np.full(B, np.nan)
    for b in np.nonzero(ok)[0]:
        try:
            res = fit(samples[b], method)
        except FitError as exc:
            log.debug("bootstrap replicate %d failed: %s", b, exc)
            ok[b] = False
            continue
        if not res.converged:
            ok[b] = False
            continue
        mu[b], s2[b] = res.mu_hat, res.sigma2_hat
    return mu, s2, ok


def bootstrap_percentile(
    data: DataLike,
    B: int = 1000,
    level: float = 0.95,
    seed: SeedLike = 0,
    fitter: Union[Method, str] = Method.ROOT_SEARCH,
) -> BootstrapResult:
    """Percentile bootstrap intervals from ``B`` resamples of the data.

    Each resample is refitted with ``fitter``.  A resample with no interior
    maximum contributes the half-normal estimate ``mu = 0``, which is its
    maximum likelihood estimate on ``mu >= 0``.  Replicates whose fit raises
    or does not converge are dropped and counted in ``failures``; more than
    ``B / 2`` of them is an error.
    """
    B = int(B)
    if B < MIN_REPLICATES:
        raise ValueError(f"B must be at least {MIN_REPLICATES}, got {B}")
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    method = Method(fitter)
    x = _check_fit_data(data)
    samples = x[resample_indices(x.size, B, seed)]
    mu, s2, ok = _fit_rows(samples, method)
    failures = int(B - np.count_nonzero(ok))
    if failures > B / 2:
        raise BootstrapError(f"{failures} of {B} bootstrap fits failed")
    mu, s2 = mu[ok], s2[ok]
    lo, hi = 0.5 * (1.0 - level), 0.5 * (1.0 + level)
    return BootstrapResult(
        B=B,
        ci_mu=(empirical_quantile(mu, lo), empirical_quantile(mu, hi)),
        ci_sigma2=(empirical_quantile(s2, lo), empirical_quantile(s2, hi)),
        replicate_estimates=tuple(Params(m, v) for m, v in zip(mu, s2)),
        failures=failures,
        level=level,
    )
