"""Command-line front end.

Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure,
4 verification failed. Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analytics import PreconditionError, karamata_check, verify_hs_bound, verify_normal_bound
from .experiments import (default_priors, dump_json, laplace_approx_check, run_experiment, run_sensitivity,
                          write_outputs)
from .model import ConfigError, ExperimentConfig, FunctionalSpec, PriorSpec, load_config
from .regvar import (CHARACTERISTIC_FUNCTIONS, DUALITY_TABLE, MIXING_CATALOG, barndorff_tail_check,
                     dual_density, dual_mixing_density, estimate_tail_index, mixing_density,
                     scale_mixture_pdf)
from .samplers import SamplerError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY_FAIL = 4


class UsageError(Exception):
    """Bad command-line input that argparse cannot catch."""


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


# ------------------------------------------------------------------- run

def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.seed is not None:
        changes["base_seed"] = args.seed
    if args.chains is not None:
        changes["n_chains"] = args.chains
    if args.keep is not None:
        changes["n_keep"] = args.keep
        if args.warmup is None and cfg.n_warmup == cfg.n_keep:
            changes["n_warmup"] = args.keep
    if args.warmup is not None:
        changes["n_warmup"] = args.warmup
    if getattr(args, "priors", None):
        names = default_priors(cfg) if args.priors == "all" else tuple(s.strip() for s in args.priors.split(","))
        changes["priors"] = names
    return replace(cfg, **changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    result = run_experiment(cfg, n_threads=args.threads, backend=args.backend)
    write_outputs(result, args.out, full_draws_csv=True if args.full_draws else None)
    sys.stdout.write(result.report.summary_csv())
    return EXIT_OK


# ---------------------------------------------------------------- verify

def _verify_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = ExperimentConfig(100, 10.0, 1, PriorSpec("horseshoe"), FunctionalSpec("sum_sq"))
    if args.seed is not None:
        cfg = replace(cfg, base_seed=args.seed)
    return cfg


def cmd_verify(args) -> int:
    which = args.which
    if which == "hs_bound":
        res = verify_hs_bound(args.p, args.Z).to_dict()
        passed = res["holds"]
    elif which == "normal_bound":
        res = verify_normal_bound(args.p, args.Z, args.tau2).to_dict()
        passed = res["holds"]
    elif which == "karamata":
        res = karamata_check(args.p, args.Z)
        res["tolerance"] = args.tol
        passed = abs(res["ratio"] - 1.0) <= args.tol
    else:
        cfg = _verify_config(args)
        res = laplace_approx_check(cfg, n_draws=args.draws, tau2=args.tau2, n_threads=args.threads,
                                   backend=args.backend)
        passed = res["pass"]
    res = {"check": which, "pass": bool(passed), **{k: v for k, v in res.items() if k != "pass"}}
    text = dump_json(res)
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK if passed else EXIT_VERIFY_FAIL


# ----------------------------------------------------------- sensitivity

def cmd_sensitivity(args) -> int:
    cfg = load_config(args.config)
    args.priors = None
    cfg = _apply_overrides(cfg, args)
    table, data = run_sensitivity(cfg, args.eta, n_threads=args.threads, backend=args.backend)
    text = table.to_csv()
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sensitivity.csv").write_text(text)
        (out / "sensitivity.json").write_text(dump_json({"dataset": data.summary(), "table": table.to_dict()}))
    return EXIT_OK


# ---------------------------------------------------------------- regvar

def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _read_values(path, param: str | None) -> np.ndarray:
    """Numbers from a draws CSV (``value`` column) or a single-column file."""
    text = Path(path).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise UsageError(f"{path} is empty")
    head = [h.strip() for h in rows[0]]
    if "value" in head:
        vi = head.index("value")
        pi = head.index("param") if "param" in head else None
        vals = [r[vi] for r in rows[1:] if r and (param is None or pi is None or r[pi] == param)]
    else:
        body = rows
        try:
            float(rows[0][0])
        except ValueError:
            body = rows[1:]
        vals = [r[0] for r in body if r]
    try:
        return np.array([float(v) for v in vals])
    except ValueError as exc:
        raise UsageError(f"non-numeric value in {path}: {exc}") from None


def cmd_regvar(args) -> int:
    sub = args.regvar_cmd
    if sub == "catalog":
        rows = [(r.density, r.dual, r.normal_scale_mixture, r.implemented, r.note) for r in DUALITY_TABLE]
        _write(_rows_csv(["density", "dual", "normal_scale_mixture", "implemented", "note"], rows), args.out)
    elif sub == "mixing":
        rows = []
        for name in sorted(MIXING_CATALOG):
            m = MIXING_CATALOG[name]
            rows.append((name, m.name, "" if m.tail_index_alpha is None else repr(m.tail_index_alpha),
                         repr(m.psi_plus), repr(m.tail_constant)))
        _write(_rows_csv(["key", "name", "tail_index_alpha", "psi_plus", "tail_constant"], rows), args.out)
    elif sub == "dual":
        if args.name not in CHARACTERISTIC_FUNCTIONS:
            raise UsageError(f"unknown characteristic function {args.name!r}; known: {sorted(CHARACTERISTIC_FUNCTIONS)}")
        curve = dual_density(args.name, n_grid=args.n_grid, window=args.window)
        _write(curve.to_csv(x_name="x"), args.out)
    elif sub == "tail-index":
        x = _read_values(args.input, args.param)
        if args.abs:
            x = np.abs(x)
        x = x[np.isfinite(x) & (x > 0)]
        est = estimate_tail_index(x, args.k)
        sys.stdout.write(f"alpha_hat={est.alpha_hat!r} k={est.k_used} stderr={est.stderr!r} n={x.size}\n")
    elif sub == "mixture":
        mix = mixing_density(args.name)
        vals = np.atleast_1d(scale_mixture_pdf(mix, np.asarray(args.theta)))
        _write(_rows_csv(["theta", "density"], [(repr(t), repr(float(v))) for t, v in zip(args.theta, vals)]),
               args.out)
    elif sub == "barndorff":
        mix = mixing_density(args.name)
        ratios = barndorff_tail_check(mix, args.theta)
        _write(_rows_csv(["theta", "ratio"], [(repr(t), repr(float(r))) for t, r in zip(args.theta, ratios)]),
               args.out)
    elif sub == "dual-mixing":
        mix = mixing_density(args.name)
        p0 = args.p0 if args.p0 is not None else float(scale_mixture_pdf(mix, 0.0))
        if not math.isfinite(p0):
            raise ArithmeticError(f"the {mix.name} marginal is unbounded at 0; no dual mixing density")
        dual = dual_mixing_density(mix, p0)
        v = np.geomspace(args.vmin, args.vmax, args.n_grid)
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            lp = dual.log_pdf(v)
        text = _rows_csv(["v", "log_density"], [(repr(float(a)), repr(float(b))) for a, b in zip(v, lp)])
        _write(text, args.out)
        sys.stderr.write(f"p_at_zero={p0!r} mass={dual.mass()!r}\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_sampling_flags(p: argparse.ArgumentParser, with_priors: bool = True) -> None:
    p.add_argument("--seed", type=int, help="base seed of every random stream")
    p.add_argument("--chains", type=int)
    p.add_argument("--keep", type=int, help="kept draws per chain")
    p.add_argument("--warmup", type=int, help="warm-up iterations per chain (default: --keep)")
    if with_priors:
        p.add_argument("--priors", help="comma-separated prior kinds, or 'all'")
    p.add_argument("--threads", type=int, help="worker threads for parallel chains")
    p.add_argument("--backend", choices=("compiled", "python"), help="kernel backend")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="glshrink", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment and export summaries, draws and plot data")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--full-draws", action="store_true", help="write theta draws to CSV even when p > 10")
    _add_sampling_flags(r)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="check a tail bound, the Karamata asymptote or the closed-form fit")
    v.add_argument("which", choices=("hs_bound", "normal_bound", "laplace_approx", "karamata"))
    v.add_argument("--p", type=int, default=100)
    v.add_argument("--Z", type=float, default=200.0)
    v.add_argument("--tau2", type=float, default=300.0)
    v.add_argument("--tol", type=float, default=0.05, help="karamata: allowed |ratio - 1|")
    v.add_argument("--config", help="laplace_approx: experiment config (default p=100, A=10, q_p=1)")
    v.add_argument("--seed", type=int)
    v.add_argument("--draws", type=int, default=1_000_000, help="laplace_approx: total sampler draws")
    v.add_argument("--threads", type=int)
    v.add_argument("--backend", choices=("compiled", "python"))
    v.add_argument("--out", help="also write the JSON result here")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sensitivity", help="compare half-Cauchy scales eta on one dataset")
    s.add_argument("--config", required=True)
    s.add_argument("--eta", type=_floats, default=[0.5, 1.0, 5.0], help="comma-separated eta values")
    s.add_argument("--out")
    _add_sampling_flags(s, with_priors=False)
    s.set_defaults(func=cmd_sensitivity)

    g = sub.add_parser("regvar", help="regular-variation tools")
    gs = g.add_subparsers(dest="regvar_cmd", required=True)
    c = gs.add_parser("catalog", help="dual-density pairs and their implementation status")
    c.add_argument("--out")
    c = gs.add_parser("mixing", help="catalog of mixing densities")
    c.add_argument("--out")
    c = gs.add_parser("dual", help="dual density of a characteristic function, as CSV")
    c.add_argument("name")
    c.add_argument("--n-grid", type=int, default=4001)
    c.add_argument("--window", type=float, default=50.0)
    c.add_argument("--out")
    c = gs.add_parser("tail-index", help="Hill estimate of the tail index")
    c.add_argument("--input", required=True)
    c.add_argument("--k", type=int)
    c.add_argument("--param", help="only rows with this param value (draws CSV)")
    c.add_argument("--abs", action="store_true", help="use absolute values")
    c = gs.add_parser("mixture", help="normal scale-mixture density at given points")
    c.add_argument("name")
    c.add_argument("--theta", type=_floats, required=True)
    c.add_argument("--out")
    c = gs.add_parser("barndorff", help="ratio of the mixture density to its tail asymptote")
    c.add_argument("name")
    c.add_argument("--theta", type=_floats, default=[10.0, 100.0, 1000.0])
    c.add_argument("--out")
    c = gs.add_parser("dual-mixing", help="mixing density of the dual, as CSV")
    c.add_argument("name")
    c.add_argument("--p0", type=float, help="marginal density at 0 (default: computed)")
    c.add_argument("--vmin", type=float, default=1e-3)
    c.add_argument("--vmax", type=float, default=1e3)
    c.add_argument("--n-grid", type=int, default=200)
    c.add_argument("--out")
    g.set_defaults(func=cmd_regvar)
    return ap


def _error(kind: str, exc: BaseException, code: int, **extra) -> int:
    payload = {"error": kind, "type": type(exc).__name__, "message": str(exc), "exit_code": code, **extra}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage, which matches the config-error code
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _error("config", exc, EXIT_CONFIG, field=exc.field)
    except (UsageError, PreconditionError, FileNotFoundError, IsADirectoryError, KeyError) as exc:
        return _error("config", exc, EXIT_CONFIG)
    except (ArithmeticError, SamplerError, FloatingPointError) as exc:
        return _error("numerical", exc, EXIT_NUMERICAL)
    except ValueError as exc:
        return _error("config", exc, EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
