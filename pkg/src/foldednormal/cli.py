"""Command-line front end.

Output is JSON on standard output unless ``--format csv`` is given.  Exit
status is 0 on success, 2 for usage errors and 1 when the computation itself
fails (bad data, non-convergence, arguments outside a function's domain).

Examples::

    foldednormal eval --mu 0 --sigma2 1 --pdf-at 1
    foldednormal fit --data bmi.txt --method simplex
    foldednormal kl --mu 0 --sigma2 4 --from normal --quadrature
    foldednormal coverage --sizes 20,50 --thetas 0.5,2 --R 200 --workers 4
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from typing import List, Optional, Sequence

import numpy as np

from . import distribution as fn
from . import information, studies
from .distribution import Params
from .estimation import Dataset, FitError, Method, fit, loglik, profile_loglik
from .numerics import QuadratureError
from .resampling import BootstrapError, bootstrap_percentile

log = logging.getLogger(__name__)

DEFAULT_SEED = 0

_MINUS_SIGNS = {"−": "-", "–": "-", "﹣": "-", "－": "-"}


class DataError(ValueError):
    """A data file could not be turned into a dataset."""


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# Data input
# --------------------------------------------------------------------------

def _parse_number(token: str) -> float:
    for bad, good in _MINUS_SIGNS.items():
        token = token.replace(bad, good)
    return float(token)


def load_dataset(path) -> Dataset:
    """Read one number per line.

    Blank lines and lines starting with ``#`` are skipped.  The first data
    line may be a column header, and a line may carry a single CSV field,
    optionally quoted.  Errors name the offending line.
    """
    values: List[float] = []
    seen_data = False
    with open(path, encoding="utf-8-sig") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields_ = next(csv.reader([line]))
            fields_ = [f.strip() for f in fields_]
            while len(fields_) > 1 and fields_[-1] == "":
                fields_.pop()
            if len(fields_) != 1:
                raise DataError(f"{path}:{lineno}: expected one value, found {len(fields_)} fields")
            token = fields_[0]
            try:
                v = _parse_number(token)
            except ValueError:
                if not seen_data and not values:
                    seen_data = True  # header
                    continue
                raise DataError(f"{path}:{lineno}: cannot parse {token!r} as a number") from None
            seen_data = True
            if not math.isfinite(v):
                raise DataError(f"{path}:{lineno}: non-finite value {token!r}")
            if v < 0:
                raise DataError(f"{path}:{lineno}: negative value {v!r}; folded data must be >= 0")
            values.append(v)
    if not values:
        raise DataError(f"{path}: no data values found")
    try:
        return Dataset(np.array(values))
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------
# Output helpers
# --------------------------------------------------------------------------

def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "_"))
        elif isinstance(v, (list, tuple)):
            for i, item in enumerate(v):
                if isinstance(item, dict):
                    out.update(_flatten(item, f"{key}_{i}_"))
                else:
                    out[f"{key}_{i}"] = item
        else:
            out[key] = v
    return out


def _csv_rows(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def _record_csv(d: dict) -> str:
    flat = _flatten(d)
    return _csv_rows(list(flat), [list(flat.values())])


def _emit(args, payload: dict) -> str:
    if args.format == "csv":
        return _record_csv(payload)
    return _json(payload)


# --------------------------------------------------------------------------
# Argument types
# --------------------------------------------------------------------------

def _finite(text: str) -> float:
    try:
        v = _parse_number(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be finite: {text!r}")
    return v


def _positive(text: str) -> float:
    v = _finite(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _count(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer: {text!r}")
    return v


def _level(text: str) -> float:
    v = _finite(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"level must lie in (0, 1): {text!r}")
    return v


def _float_list(text: str) -> List[float]:
    return [_finite(t) for t in text.split(",") if t.strip()]


def _int_list(text: str) -> List[int]:
    return [_count(t) for t in text.split(",") if t.strip()]


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def _params(args) -> Params:
    return Params(args.mu, args.sigma2)


def cmd_eval(args) -> str:
    p = _params(args)
    out: dict = {"mu": p.mu, "sigma2": p.sigma2}
    real_fns = [
        ("pdf", args.pdf_at, fn.pdf),
        ("cdf", args.cdf_at, fn.cdf),
        ("sf", args.sf_at, fn.sf),
        ("quantile", args.quantile, fn.quantile),
        ("mgf", args.mgf_at, fn.mgf),
        ("cumulant_gf", args.cgf_at, fn.cumulant_gf),
        ("laplace", args.laplace_at, fn.laplace),
        ("mean_residual_life", args.mrl_at, fn.mean_residual_life),
    ]
    for name, points, f in real_fns:
        if points:
            out[name] = [{"at": a, "value": float(f(a, p))} for a in points]
    for name, points, f in (("cf", args.cf_at, fn.cf), ("fourier", args.fourier_at, fn.fourier)):
        if points:
            vals = [f(t, p) for t in points]
            out[name] = [{"at": t, "re": v.real, "im": v.imag} for t, v in zip(points, vals)]
    if args.moments:
        m = fn.moments(p)
        out["mean_f"], out["var_f"] = m.mean_f, m.var_f
    if args.mode:
        out["mode"] = fn.mode(p)
    if args.loglik_data:
        out["loglik"] = loglik(load_dataset(args.loglik_data), p)
    if len(out) == 2:
        raise UsageError("eval: give at least one of --pdf-at, --cdf-at, --moments, ... (see --help)")
    return _emit(args, out)


def cmd_fit(args) -> str:
    data = load_dataset(args.data)
    res = fit(data, Method(args.method), level=args.level)
    out = res.to_dict()
    out["n"] = data.n
    if args.bootstrap:
        boot = bootstrap_percentile(data, B=args.bootstrap, level=args.level, seed=args.seed)
        out["bootstrap"] = dict(boot.to_dict(), seed=args.seed)
    return _emit(args, out)


def cmd_entropy(args) -> str:
    p = _params(args)
    if args.quadrature:
        value, route = information.entropy_quadrature(p), "quadrature"
    else:
        value = information.entropy_series(p, args.order)
        route = "series" if information.series_reliable(p) else "quadrature"
    out = {"mu": p.mu, "sigma2": p.sigma2, "entropy": value, "route": route}
    if route == "series":
        out["order"] = args.order
    return _emit(args, out)


def cmd_kl(args) -> str:
    p = _params(args)
    if args.reference == "normal":
        if args.quadrature:
            value, route = information.kl_from_normal_quadrature(p), "quadrature"
        else:
            value = information.kl_from_normal_series(p, args.order)
            route = "series" if information.series_reliable(p) else "quadrature"
    else:
        value = information.kl_from_halfnormal(p, args.order, use_quadrature=args.quadrature)
        route = "quadrature" if args.quadrature or not information.series_reliable(p) else "series"
    out = {"mu": p.mu, "sigma2": p.sigma2, "from": args.reference, "kl": value, "route": route}
    if route == "series":
        out["order"] = args.order
    return _emit(args, out)


def cmd_sample(args) -> str:
    x = fn.sample(_params(args), args.n, seed=args.seed)
    if args.format == "csv":
        return "".join(f"{v!r}\n" for v in x.tolist())
    return _json({"mu": args.mu, "sigma2": args.sigma2, "seed": args.seed, "values": x.tolist()})


def _study_config(args) -> studies.StudyConfig:
    return studies.StudyConfig(
        sample_sizes=tuple(args.sizes),
        thetas=tuple(args.thetas),
        sigma=args.sigma,
        R=args.R,
        B=args.B,
        level=args.level,
        master_seed=args.seed,
        enable_bootstrap=args.bootstrap,
    )


def _write_docs(docs: dict, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name, text in docs.items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _emit_cells(args, cells) -> str:
    if args.out_dir:
        _write_docs(studies.emit_tables(cells, "csv"), args.out_dir)
        _write_docs(studies.emit_tables(cells, "json"), args.out_dir)
    if args.format == "csv":
        docs = studies.emit_tables(cells, "csv")
        name = f"{args.metric}.csv"
        if name not in docs:
            raise UsageError(f"metric {args.metric!r} is not present in this table")
        return docs[name]
    return studies.emit_tables(cells, "json")["cells.json"]


def cmd_coverage(args) -> str:
    cells = studies.run_coverage(_study_config(args), workers=args.workers)
    return _emit_cells(args, cells)


def cmd_tables(args) -> str:
    if args.input:
        with open(args.input, encoding="utf-8") as fh:
            cells = studies.parse_tables(fh.read())
        return _emit_cells(args, cells)
    thetas = args.thetas or list(studies.GRID_THETAS)
    probs = studies.negative_mass_table(thetas)
    if args.format == "csv":
        return _csv_rows(["theta", "prob_negative"], list(zip(thetas, probs)))
    return _json({"theta": thetas, "prob_negative": probs})


def _grid(args) -> np.ndarray:
    if not args.step > 0 or not args.stop >= args.start:
        raise UsageError("grid needs --stop >= --start and --step > 0")
    count = int(math.floor((args.stop - args.start) / args.step + 1e-9)) + 1
    return args.start + args.step * np.arange(count)


def emit_plotdata(kind: str, grid: np.ndarray, p: Optional[Params] = None,
                  orders: Sequence[int] = (2, 3), data: Optional[Dataset] = None) -> str:
    """CSV columns for external plotting.

    ``density``: x, folded density, parent normal density.
    ``entropy_curve`` / ``kl_curve``: theta (``mu = theta * sigma``), one
    column per series order, then quadrature.  ``kl_curve`` is KL(FN || N).
    ``profile_loglik``: mu, log-likelihood along ``sigma2 = mean(x^2) - mu^2``.
    """
    grid = np.asarray(grid, dtype=float)
    if kind == "density":
        folded = fn.pdf(np.abs(grid), p) * (grid >= 0)
        normal = np.exp(-((grid - p.mu) ** 2) / (2 * p.sigma2)) / math.sqrt(2 * math.pi * p.sigma2)
        return _csv_rows(["x", "folded_normal", "normal"], list(zip(grid.tolist(), folded.tolist(), normal.tolist())))
    if kind in ("entropy_curve", "kl_curve"):
        if np.any(grid < 0):
            raise UsageError("theta grid must be non-negative")
        s = p.sigma
        series_fn = information.entropy_series if kind == "entropy_curve" else information.kl_from_normal_series
        quad_fn = information.entropy_quadrature if kind == "entropy_curve" else information.kl_from_normal_quadrature
        header = ["theta"] + [f"order_{k}" for k in orders] + ["quadrature"]
        rows = []
        for th in grid.tolist():
            q = Params(th * s, p.sigma2)
            rows.append([th] + [series_fn(q, k, fallback=False) for k in orders] + [quad_fn(q)])
        return _csv_rows(header, rows)
    if kind == "profile_loglik":
        if data is None:
            raise UsageError("profile_loglik needs --data")
        limit = math.sqrt(float(np.mean(data.values**2)))
        if np.any(np.abs(grid) >= limit):
            raise UsageError(f"profile grid must stay inside |mu| < {limit:g}")
        ll = profile_loglik(data, grid)
        return _csv_rows(["mu", "profile_loglik"], list(zip(grid.tolist(), np.atleast_1d(ll).tolist())))
    raise UsageError(f"unknown plot kind {kind!r}")


def cmd_plotdata(args) -> str:
    grid = _grid(args)
    data = load_dataset(args.data) if args.data else None
    p = None
    if args.kind != "profile_loglik":
        if args.mu is None or args.sigma2 is None:
            raise UsageError(f"{args.kind} needs --mu and --sigma2")
        p = _params(args)
    return emit_plotdata(args.kind, grid, p, orders=args.orders, data=data)


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _add_params(sp, required: bool = True) -> None:
    sp.add_argument("--mu", type=_finite, required=required, help="location of the parent normal")
    sp.add_argument("--sigma2", type=_positive, required=required, help="variance of the parent normal")


def _add_format(sp) -> None:
    sp.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foldednormal", description="Folded normal distribution tools.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("eval", help="evaluate distribution functions")
    _add_params(sp)
    for flag in ("pdf-at", "cdf-at", "sf-at", "mgf-at", "cgf-at", "laplace-at", "cf-at", "fourier-at"):
        sp.add_argument(f"--{flag}", type=_finite, action="append", metavar="T")
    sp.add_argument("--mrl-at", type=_finite, action="append", metavar="T", help="mean residual life")
    sp.add_argument("--quantile", type=_level, action="append", metavar="Q")
    sp.add_argument("--moments", action="store_true", help="mean and variance of |Y|")
    sp.add_argument("--mode", action="store_true")
    sp.add_argument("--loglik-data", metavar="PATH", help="log-likelihood of a data file at these parameters")
    _add_format(sp)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("fit", help="maximum likelihood fit of a data file")
    sp.add_argument("--data", required=True, metavar="PATH")
    sp.add_argument("--method", choices=[m.value for m in Method], default=Method.ROOT_SEARCH.value)
    sp.add_argument("--level", type=_level, default=0.95)
    sp.add_argument("--bootstrap", type=_count, metavar="B", help="add percentile bootstrap intervals")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_format(sp)
    sp.set_defaults(func=cmd_fit)

    for name, helptext in (("entropy", "differential entropy"), ("kl", "KL divergence")):
        sp = sub.add_parser(name, help=helptext)
        _add_params(sp)
        sp.add_argument("--order", type=_count, default=information.DEFAULT_ORDER)
        sp.add_argument("--quadrature", action="store_true", help="integrate numerically instead of the series")
        if name == "kl":
            sp.add_argument("--from", dest="reference", choices=("normal", "halfnormal"), default="normal")
        _add_format(sp)
        sp.set_defaults(func=cmd_entropy if name == "entropy" else cmd_kl)

    sp = sub.add_parser("sample", help="draw random variates")
    _add_params(sp)
    sp.add_argument("--n", type=_count, required=True)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_format(sp)
    sp.set_defaults(func=cmd_sample)

    def add_table_output(sp):
        sp.add_argument("--metric", choices=studies.METRICS, default="coverage_mu_asym",
                        help="table written to stdout with --format csv")
        sp.add_argument("--out-dir", metavar="DIR", help="also write every table (CSV and JSON) here")
        _add_format(sp)

    sp = sub.add_parser("coverage", help="Monte-Carlo coverage study")
    sp.add_argument("--sizes", type=_int_list, default=list(studies.GRID_SAMPLE_SIZES))
    sp.add_argument("--thetas", type=_float_list, default=list(studies.GRID_THETAS))
    sp.add_argument("--sigma", type=_positive, default=5.0)
    sp.add_argument("--R", type=_count, default=300)
    sp.add_argument("--B", type=_count, default=400)
    sp.add_argument("--bootstrap", action="store_true", help="also run percentile bootstrap intervals")
    sp.add_argument("--level", type=_level, default=0.95)
    sp.add_argument("--seed", type=int, default=studies.StudyConfig.master_seed)
    sp.add_argument("--workers", type=_count, default=1)
    add_table_output(sp)
    sp.set_defaults(func=cmd_coverage)

    sp = sub.add_parser("tables", help="negative-mass table, or re-emit a saved coverage table")
    sp.add_argument("--input", metavar="JSON", help="cells.json written by 'coverage'")
    sp.add_argument("--thetas", type=_float_list)
    add_table_output(sp)
    sp.set_defaults(func=cmd_tables)

    sp = sub.add_parser("plotdata", help="curves for external plotting (CSV)")
    sp.add_argument("--kind", required=True, choices=("density", "entropy_curve", "kl_curve", "profile_loglik"))
    _add_params(sp, required=False)
    sp.add_argument("--start", type=_finite, default=0.0)
    sp.add_argument("--stop", type=_finite, default=10.0)
    sp.add_argument("--step", type=_finite, default=0.1)
    sp.add_argument("--orders", type=_int_list, default=[2, 3])
    sp.add_argument("--data", metavar="PATH")
    sp.set_defaults(func=cmd_plotdata, format="csv")
    return parser


_RUNTIME_ERRORS = (
    DataError, FitError, BootstrapError, QuadratureError, studies.StudyError,
    ValueError, OverflowError, ArithmeticError, OSError,
)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
