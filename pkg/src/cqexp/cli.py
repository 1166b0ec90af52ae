"""Command-line front end.

Commands read a channel spec (see :mod:`cqexp.specio`), evaluate a grid of
cells and write CSV to ``--out`` or standard output.  Cells are independent
and run on ``--workers`` threads; rows are written in grid order, so a fixed
spec, configuration and seed always give byte-identical output.  A failing
cell never aborts a sweep: its row carries the reason.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import nullcontext
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import __version__
from .config import DEFAULT, parse_overrides, use_tolerances
from .errors import CapacityExceeded, CQExpError, SpecError

__all__ = ["RunConfig", "main", "build_parser"]

EXAMPLE_SPEC = "qubit_example.json"
SYMMETRIC_SPEC = "pauli_x_symmetric.json"


@dataclass
class RunConfig:
    """Sweep parameters shared by the commands."""

    rmin: float | None = None
    rmax: float | None = None
    rsteps: int = 11
    n: list = field(default_factory=lambda: [10])
    gamma: float = 0.1
    nu: float | None = None
    c: float = 2.0
    tol: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    workers: int = 1

    def rates(self, W=None):
        lo, hi = self.rmin, self.rmax
        if lo is None or hi is None:
            from .converse import channel_summary

            s = channel_summary(W)
            span = s["capacity"] - s["r_inf"]
            lo = s["r_inf"] + 0.05 * span if lo is None else lo
            hi = s["r_inf"] + 0.95 * span if hi is None else hi
        if not (lo > 0 and hi >= lo and self.rsteps >= 1):
            raise ValueError("rate grid must satisfy 0 < rmin <= rmax and rsteps >= 1")
        return np.linspace(lo, hi, self.rsteps) if self.rsteps > 1 else np.array([lo])


# ---------------------------------------------------------------------------
# output


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return "" if v is None else str(v)


def write_csv(rows, columns, out=None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in columns])
    text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _map(fn, items, workers):
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _reason(exc):
    return f"{type(exc).__name__}: {exc}"


def _load(path, default=EXAMPLE_SPEC):
    from .specio import load_spec, parse_spec

    if path:
        return load_spec(path)
    return parse_spec(resources.files("cqexp.data").joinpath(default).read_text(encoding="utf-8"))


def _prior(text, size):
    if not text:
        return np.full(size, 1.0 / size)
    vals = np.array([float(v) for v in text.split(",")])
    if vals.size != size:
        raise ValueError(f"prior has {vals.size} entries, channel has {size} inputs")
    return vals / vals.sum()


# ---------------------------------------------------------------------------
# commands


def cmd_divergence(args, cfg):
    from .divergences import d_alpha_flat, d_alpha_petz, golden_thompson_gap

    W = _load(args.spec).channel()
    xs = range(W.size) if args.x is None else [args.x]
    src = args.sigma
    if src == "mixture":
        sigma = W.mixture(np.full(W.size, 1.0 / W.size))
    elif src == "maximally-mixed":
        sigma = np.eye(W.dim) / W.dim
    elif src.startswith("input:"):
        sigma = W[int(src.split(":", 1)[1])].matrix
    else:
        raise ValueError(f"unknown sigma source {src!r}")
    alphas = [float(a) for a in args.alphas.split(",")] if args.alphas else \
        list(np.round(np.linspace(0.05, 0.95, 19), 10))

    def run(cell):
        x, a = cell
        row = {"x": x, "alpha": a}
        try:
            row["D_alpha"] = float(d_alpha_petz(W[x], sigma, a))
            row["D_alpha_flat"] = float(d_alpha_flat(W[x], sigma, a))
            row["gap"] = golden_thompson_gap(W[x], sigma, a)
        except CQExpError as exc:
            row["reason"] = _reason(exc)
        return row

    rows = _map(run, [(x, a) for x in xs for a in alphas], cfg.workers)
    return write_csv(rows, ["x", "alpha", "D_alpha", "D_alpha_flat", "gap", "reason"], cfg.out)


def cmd_exponents(args, cfg):
    from .sphere_packing import exponent_curve

    W = _load(args.spec).channel()
    curve = exponent_curve(W, cfg.rates(W), weak=not args.no_weak, workers=cfg.workers)
    rows = []
    for r in curve.rows():
        rows.append({"R": r["R"], "E_sp": float(r["E_sp"]), "E_sp_weak": float(r["E_sp_weak"]),
                     "abs_slope": float(r["s_star"]), "regime": r["regime"], "reason": r["reason"]})
    return write_csv(rows, ["R", "E_sp", "E_sp_weak", "abs_slope", "regime", "reason"], cfg.out)


def cmd_saddle(args, cfg):
    from .sphere_packing import saddle_solve

    W = _load(args.spec).channel()
    P = _prior(args.prior, W.size)

    def run(R):
        row = {"R": R, "prior": ";".join(_cell(p) for p in P)}
        try:
            res = saddle_solve(R, P, W)
            row.update(alpha_star=res.alpha_star, s_star=res.s_star, E2=float(res.value),
                       minimax_gap=res.minimax_gap, regime=res.regime,
                       sigma_star=";".join(f"{_cell(z.real)}{'+' if z.imag >= 0 else ''}{_cell(z.imag)}j"
                                           for z in np.ravel(res.sigma_star)))
        except CQExpError as exc:
            row["reason"] = _reason(exc)
        return row

    rows = _map(run, cfg.rates(W), cfg.workers)
    cols = ["R", "prior", "alpha_star", "s_star", "E2", "minimax_gap", "regime", "sigma_star", "reason"]
    return write_csv(rows, cols, cfg.out)


_BOUND_COLS = ["bound", "n", "R", "value", "log_value", "log_prefactor", "exponent", "prefactor",
               "valid", "flags", "constants", "reason"]


def _bound_cell(W, P, which, R, n, cfg):
    from . import converse as cv
    from .sphere_packing import saddle_solve

    base = {"bound": which, "n": n, "R": R}
    try:
        if which == "chebyshev":
            rep = cv.chebyshev_converse(W, P, R, n, c=cfg.c)
        elif which == "blahut":
            rep = cv.blahut_converse(W, P, R, n, c=cfg.c)
        elif which == "sharp":
            nu = cfg.nu if cfg.nu is not None else float(saddle_solve(R, P, W).value) / 2
            rep = cv.sharp_converse(W, P, R, n, nu, c=cfg.c)
        elif which == "refined":
            rep = cv.refined_sp_bound(W, R, n, P, cfg.gamma, nu=cfg.nu)
        elif which == "general":
            rep = cv.general_code_bound(W, R, n)
        elif which == "symmetric":
            rep = cv.exact_symmetric_bound(W, R, n)
        else:
            raise ValueError(f"unknown bound {which!r}")
        row = rep.to_row()
        row["bound"] = which
        return row
    except (CQExpError, ValueError) as exc:
        base["reason"] = _reason(exc)
        return base


def cmd_bound(args, cfg):
    W = _load(args.spec).channel()
    P = _prior(args.prior, W.size)
    kinds = args.bounds.split(",")
    cells = [(k, R, n) for R in cfg.rates(W) for n in cfg.n for k in kinds]
    rows = _map(lambda c: _bound_cell(W, P, c[0], c[1], c[2], cfg), cells, cfg.workers)
    return write_csv(rows, _BOUND_COLS, cfg.out)


def _composition_word(P, n):
    counts = np.floor(P * n).astype(int)
    rem = n - counts.sum()
    order = np.argsort(-(P * n - counts), kind="stable")
    counts[order[:rem]] += 1
    return [x for x, k in enumerate(counts) for _ in range(k)], counts / n


def cmd_oracle(args, cfg):
    from .ht_oracle import product_oracle
    from .sphere_packing import saddle_solve

    W = _load(args.spec).channel()
    P0 = _prior(args.prior, W.size)

    def run(cell):
        R, n = cell
        xs, P = _composition_word(P0, n)
        row = {"R": R, "n": n, "composition": ";".join(_cell(p) for p in P)}
        mu = cfg.c * math.exp(-n * R)
        row["mu"] = mu
        try:
            sigma = saddle_solve(R, P, W).sigma_star
            row["alpha_hat"] = 0.0 if mu >= 1 else product_oracle([W[x] for x in xs], sigma, mu, args.method)
        except CapacityExceeded as exc:
            row["reason"] = f"skipped: {exc}"
        except CQExpError as exc:
            row["reason"] = _reason(exc)
        return row

    cells = [(R, n) for R in cfg.rates(W) for n in cfg.n]
    rows = _map(run, cells, cfg.workers)
    return write_csv(rows, ["R", "n", "composition", "mu", "alpha_hat", "reason"], cfg.out)


def cmd_symmetric_demo(args, cfg):
    from . import converse as cv

    spec = _load(args.spec, SYMMETRIC_SPEC)
    W = spec.channel()
    rng = np.random.default_rng(cfg.seed)
    s = cv.channel_summary(W)
    R = cfg.rmin if cfg.rmin is not None else 0.5 * (s["r_inf"] + s["capacity"])
    rows = []
    opt = cv.uniform_optimality_check(W, 1.0)
    rows.append({"check": "uniform prior optimality", "R": R, "value": opt["equality_error"],
                 "passed": opt["passed"]})
    sig = cv.symmetric_sigma_check(W, R)
    rows.append({"check": "saddle state closed form", "R": R, "value": sig["error"],
                 "passed": sig["passed"]})
    ex = cv.symmetric_exponent_check(W, R, [rng.dirichlet(np.ones(W.size)) for _ in range(20)])
    rows.append({"check": "fixed-state exponent equals E_sp for random priors", "R": R,
                 "value": ex["max_error"], "passed": ex["passed"]})
    for n in cfg.n:
        try:
            rep = cv.exact_symmetric_bound(W, R, n)
            rows.append({"check": f"exact symmetric bound n={n}", "R": R, "value": rep.value,
                         "log_value": rep.log_value, "passed": rep.valid,
                         "detail": ";".join(f"{k}={int(bool(v))}" for k, v in rep.flags.items())})
        except CQExpError as exc:
            rows.append({"check": f"exact symmetric bound n={n}", "R": R, "detail": _reason(exc)})
    return write_csv(rows, ["check", "R", "value", "log_value", "passed", "detail"], cfg.out)


def cmd_verify(args, cfg):
    from .verify import format_line, run_suites

    W = _load(args.spec).channel()
    suites = args.suite or ["all"]
    lines = []

    def progress(r):
        line = format_line(r)
        lines.append(line)
        if cfg.out in (None, "-"):
            print(line, flush=True)

    results = run_suites(W, suites, seed=cfg.seed, progress=progress)
    nfail = sum(r.status == "FAIL" for r in results)
    summary = (f"{sum(r.status == 'PASS' for r in results)} passed, {nfail} failed, "
               f"{sum(r.status == 'SKIP' for r in results)} skipped")
    if cfg.out in (None, "-"):
        print(summary)
    else:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines + [summary]) + "\n")
    return 1 if nfail else 0


# ---------------------------------------------------------------------------
# argument parsing


def _common(p):
    p.add_argument("--spec", help="channel spec JSON (default: shipped qubit example)")
    p.add_argument("--rmin", type=float)
    p.add_argument("--rmax", type=float)
    p.add_argument("--rsteps", type=int, default=11)
    p.add_argument("--n", default="10", help="comma-separated blocklengths")
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--nu", type=float)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--tol", default="", help="tolerance overrides, e.g. rank_rel=1e-12,herm=1e-9")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--workers", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="cqexp", description="Sphere-packing exponents and "
                                     "converse bounds for classical-quantum channels.")
    parser.add_argument("--version", action="version", version=f"cqexp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("divergence", help="Petz and log-Euclidean Renyi divergences per input")
    _common(p)
    p.add_argument("--x", type=int, help="input symbol (default: all)")
    p.add_argument("--sigma", default="mixture", help="mixture | maximally-mixed | input:K")
    p.add_argument("--alphas", help="comma-separated alpha values in (0,1)")
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("exponents", help="sphere-packing exponent curve")
    _common(p)
    p.add_argument("--no-weak", action="store_true", help="skip the log-Euclidean exponent")
    p.set_defaults(func=cmd_exponents)

    p = sub.add_parser("saddle", help="saddle point of the Augustin form for a prior")
    _common(p)
    p.add_argument("--prior", help="comma-separated prior (default: uniform)")
    p.set_defaults(func=cmd_saddle)

    p = sub.add_parser("bound", help="converse bounds as CSV rows")
    _common(p)
    p.add_argument("--prior", help="composition (default: uniform)")
    p.add_argument("--bounds", default="chebyshev,sharp,refined",
                   help="comma list from chebyshev, sharp, blahut, refined, general, symmetric")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("oracle", help="exact Neyman-Pearson value at mu = c exp(-nR)")
    _common(p)
    p.add_argument("--prior", help="composition (default: uniform)")
    p.add_argument("--method", default="auto", choices=["auto", "commuting", "schur_weyl", "dense"])
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("symmetric-demo", help="exactness checks on a symmetric channel")
    _common(p)
    p.set_defaults(func=cmd_symmetric_demo)

    p = sub.add_parser("verify", help="run the property-verification battery")
    _common(p)
    p.add_argument("--suite", action="append",
                   help="operators, divergences, channels, solver, ns, converse, oracle or all")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ns = [int(v) for v in args.n.split(",") if v.strip()]
        cfg = RunConfig(args.rmin, args.rmax, args.rsteps, ns, args.gamma, args.nu, args.c,
                        parse_overrides(args.tol), args.out, args.seed, max(1, args.workers))
        if any(n < 1 for n in ns):
            raise ValueError("blocklengths must be positive")
        if (cfg.rmin is not None and cfg.rmin <= 0) or (cfg.rmax is not None and cfg.rmax <= 0):
            raise ValueError("rates must be positive")
    except ValueError as exc:
        parser.error(str(exc))
    ctx = use_tolerances(DEFAULT.with_overrides(**cfg.tol)) if cfg.tol else nullcontext()
    try:
        with ctx:
            res = args.func(args, cfg)
    except SpecError as exc:
        print(f"cqexp: spec error: {exc}", file=sys.stderr)
        return 2
    except (CQExpError, ValueError) as exc:
        print(f"cqexp: {exc}", file=sys.stderr)
        return 2
    return res if isinstance(res, int) else 0


if __name__ == "__main__":
    sys.exit(main())
