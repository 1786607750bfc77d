"""Monte-Carlo coverage of asymptotic and bootstrap intervals.

For every ``(n, theta)`` cell, ``R`` datasets are drawn from
``FN(theta * sigma, sigma**2)`` and fitted by the profile root search.  Each
replication records whether the Wald intervals (observed information) and,
optionally, the percentile bootstrap intervals contain the true ``mu`` and
``sigma2``, together with the estimated correlation of the two estimates.

Datasets whose fit sits on the ``mu = 0`` boundary have no Wald interval for
``mu`` and no correlation.  They are tallied in ``CoverageCell.boundary`` and
left out of all asymptotic metrics.  Fits that raise are tallied in
``failures``; more than 20% of them aborts the cell.

Every replication draws from its own random stream keyed by
``(master_seed, n, theta, replication)``, so results do not depend on the
grid, the number of workers or the order in which work completes.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .distribution import Params
from .estimation import FitError, fit_rootsearch
from .numerics import std_normal_cdf
from .resampling import BootstrapError, bootstrap_percentile

log = logging.getLogger(__name__)

GRID_SAMPLE_SIZES = tuple(range(20, 101, 10))
GRID_THETAS = tuple(0.5 * k for k in range(1, 9))

#: share of replications allowed to fail before a cell is abandoned
MAX_FAILURE_SHARE = 0.2

METRICS = (
    "coverage_mu_asym",
    "coverage_mu_boot",
    "coverage_var_asym",
    "coverage_var_boot",
    "mean_corr",
)


class StudyError(RuntimeError):
    pass


@dataclass(frozen=True)
class StudyConfig:
    sample_sizes: Tuple[int, ...] = GRID_SAMPLE_SIZES
    thetas: Tuple[float, ...] = GRID_THETAS
    sigma: float = 5.0
    R: int = 1000
    B: int = 1000
    level: float = 0.95
    master_seed: int = 20240917
    enable_bootstrap: bool = False

    def __post_init__(self):
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "thetas", tuple(float(t) for t in self.thetas))
        if not self.sample_sizes or not self.thetas:
            raise ValueError("the grid needs at least one sample size and one theta")
        if min(self.sample_sizes) < 2:
            raise ValueError("sample sizes must be at least 2")
        if any(not (math.isfinite(t) and t >= 0) for t in self.thetas):
            raise ValueError("thetas must be finite and non-negative")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be positive")
        if self.R < 1 or self.B < 1:
            raise ValueError("R and B must be positive")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must lie in (0, 1)")

    @classmethod
    def desk(cls, **overrides) -> "StudyConfig":
        """Reduced preset: R = 300, B = 400, bootstrap on."""
        opts = dict(R=300, B=400, enable_bootstrap=True)
        opts.update(overrides)
        return cls(**opts)

    def cells(self) -> List[Tuple[int, float]]:
        return [(n, t) for n in self.sample_sizes for t in self.thetas]


@dataclass(frozen=True)
class CoverageCell:
    n: int
    theta: float
    coverage_mu_asym: Optional[float]
    coverage_mu_boot: Optional[float]
    coverage_var_asym: Optional[float]
    coverage_var_boot: Optional[float]
    mean_corr: Optional[float]
    failures: int
    R: int = 0
    boundary: int = 0
    boot_failures: int = 0


# --------------------------------------------------------------------------
# One replication
# --------------------------------------------------------------------------

@dataclass
class _Record:
    rep: int
    failed: bool = False
    boundary: bool = False
    mu_hit: Optional[bool] = None
    var_hit: Optional[bool] = None
    corr: Optional[float] = None
    boot_failed: bool = False
    boot_mu_hit: Optional[bool] = None
    boot_var_hit: Optional[bool] = None


def _cell_key(n: int, theta: float) -> List[int]:
    return [int(n), int(round(theta * 1000))]


def _inside(ci, value) -> bool:
    return ci[0] <= value <= ci[1]


def _replicate(cfg: StudyConfig, n: int, theta: float, rep: int) -> _Record:
    key = [cfg.master_seed] + _cell_key(n, theta) + [rep]
    mu, s2 = theta * cfg.sigma, cfg.sigma**2
    rng = np.random.default_rng(key)
    x = np.abs(rng.normal(mu, cfg.sigma, size=n))
    rec = _Record(rep)
    try:
        res = fit_rootsearch(x, level=cfg.level)
    except FitError as exc:
        log.debug("fit failed (n=%d, theta=%g, rep=%d): %s", n, theta, rep, exc)
        rec.failed = True
        return rec
    if res.half_normal:
        rec.boundary = True
    else:
        rec.mu_hit = _inside(res.ci_mu, mu)
        rec.var_hit = _inside(res.ci_sigma2, s2)
        rec.corr = res.corr
    if cfg.enable_bootstrap:
        try:
            boot = bootstrap_percentile(x, B=cfg.B, level=cfg.level, seed=key + [1])
        except (BootstrapError, FitError) as exc:
            log.debug("bootstrap failed (n=%d, theta=%g, rep=%d): %s", n, theta, rep, exc)
            rec.boot_failed = True
        else:
            rec.boot_mu_hit = _inside(boot.ci_mu, mu)
            rec.boot_var_hit = _inside(boot.ci_sigma2, s2)
    return rec


def _run_block(args) -> Tuple[int, List[_Record]]:
    cfg, cell_idx, start, stop = args
    n, theta = cfg.cells()[cell_idx]
    return cell_idx, [_replicate(cfg, n, theta, r) for r in range(start, stop)]


def _rate(hits: Sequence[Optional[bool]]) -> Optional[float]:
    valid = [h for h in hits if h is not None]
    if not valid:
        return None
    return sum(valid) / len(valid)


def _aggregate(cfg: StudyConfig, n: int, theta: float, records: List[_Record]) -> CoverageCell:
    records = sorted(records, key=lambda r: r.rep)
    failures = sum(r.failed for r in records)
    if failures > MAX_FAILURE_SHARE * cfg.R:
        raise StudyError(f"cell (n={n}, theta={theta}): {failures} of {cfg.R} fits failed")
    corrs = [r.corr for r in records if r.corr is not None]
    boot = cfg.enable_bootstrap
    return CoverageCell(
        n=n,
        theta=theta,
        coverage_mu_asym=_rate([r.mu_hit for r in records]),
        coverage_mu_boot=_rate([r.boot_mu_hit for r in records]) if boot else None,
        coverage_var_asym=_rate([r.var_hit for r in records]),
        coverage_var_boot=_rate([r.boot_var_hit for r in records]) if boot else None,
        mean_corr=math.fsum(corrs) / len(corrs) if corrs else None,
        failures=failures,
        R=cfg.R,
        boundary=sum(r.boundary for r in records),
        boot_failures=sum(r.boot_failed for r in records),
    )


def run_coverage(cfg: StudyConfig, workers: int = 1, block: int = 50) -> List[CoverageCell]:
    """Coverage table for every cell of ``cfg``, ordered by ``n`` then ``theta``.

    ``workers > 1`` spreads blocks of ``block`` replications over a process
    pool; the output is identical for any number of workers.
    """
    cells = cfg.cells()
    tasks = [
        (cfg, i, start, min(start + block, cfg.R))
        for i in range(len(cells))
        for start in range(0, cfg.R, block)
    ]
    collected: Dict[int, List[_Record]] = {i: [] for i in range(len(cells))}
    if workers <= 1:
        results: Iterable = map(_run_block, tasks)
        for idx, recs in results:
            collected[idx].extend(recs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for idx, recs in pool.map(_run_block, tasks):
                collected[idx].extend(recs)
    return [_aggregate(cfg, n, t, collected[i]) for i, (n, t) in enumerate(cells)]


def negative_mass_table(thetas) -> List[float]:
    """Probability ``Phi(-theta)`` that the parent normal falls below zero."""
    th = np.asarray(thetas, dtype=float)
    if not np.all(np.isfinite(th)):
        raise ValueError("thetas must be finite")
    return [float(v) for v in np.atleast_1d(std_normal_cdf(-th))]


# --------------------------------------------------------------------------
# Serialisation
# --------------------------------------------------------------------------

def _theta_label(t: float) -> str:
    return f"{t:g}"


def emit_tables(cells: Sequence[CoverageCell], fmt: str = "csv") -> Dict[str, str]:
    """Serialise a coverage table.

    ``csv`` gives one document per metric, keyed ``<metric>.csv``, with a row
    per sample size and a column per theta.  Metrics that are absent from
    every cell (bootstrap disabled) produce no document.  ``json`` gives a
    single ``cells.json`` holding every field of every cell.
    """
    cells = list(cells)
    if not cells:
        raise ValueError("no cells to emit")
    if fmt == "json":
        doc = {"cells": [asdict(c) for c in cells]}
        return {"cells.json": json.dumps(doc, indent=2) + "\n"}
    if fmt != "csv":
        raise ValueError(f"unknown table format {fmt!r}")

    ns = sorted({c.n for c in cells})
    thetas = sorted({c.theta for c in cells})
    lookup = {(c.n, c.theta): c for c in cells}
    out = {}
    for metric in METRICS:
        if all(getattr(c, metric) is None for c in cells):
            continue
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n"] + [_theta_label(t) for t in thetas])
        for n in ns:
            row = [n]
            for t in thetas:
                c = lookup.get((n, t))
                v = None if c is None else getattr(c, metric)
                row.append("" if v is None else repr(float(v)))
            w.writerow(row)
        out[f"{metric}.csv"] = buf.getvalue()
    return out


def parse_tables(text: str) -> List[CoverageCell]:
    """Inverse of ``emit_tables(cells, "json")["cells.json"]``."""
    doc = json.loads(text)
    names = {f.name for f in fields(CoverageCell)}
    return [CoverageCell(**{k: v for k, v in item.items() if k in names}) for item in doc["cells"]]
