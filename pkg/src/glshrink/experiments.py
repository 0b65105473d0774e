"""Experiment orchestration: run priors on one dataset, summarize, export."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import ImproperPosteriorError, psi_posterior
from .diagnostics import (PLOT_KINDS, SummaryTable, effective_sample_size, emit_plot_data, split_rhat,
                          summarize_draws)
from .draws import DrawMatrix
from .functionals import psi_array
from .kernels import get_backend
from .model import (PRIOR_KINDS, Dataset, ExperimentConfig, FunctionalSpec, config_to_dict,
                    dataset_to_csv, generate_dataset)
from .numerics.rng import DATA_STREAM_ID
from .samplers import run_posterior

__all__ = [
    "ExperimentReport",
    "ExperimentResult",
    "Quantity",
    "default_priors",
    "quantities_for",
    "run_experiment",
    "write_outputs",
    "run_sensitivity",
    "laplace_approx_check",
    "ecdf_sup_distance",
    "dump_json",
]

BIVARIATE_SCALE = 1000.0


@dataclass(frozen=True)
class Quantity:
    """One summarized quantity (a table in the report)."""

    name: str
    spec: FunctionalSpec
    scale: float = 1.0

    @property
    def include_mean(self) -> bool:
        return self.spec.kind != "ratio"


def quantities_for(config: ExperimentConfig) -> list[Quantity]:
    """Bivariate experiments report the ratio (psi1) and product (psi2)."""
    if config.is_bivariate:
        idx = config.functional.component_indices
        return [Quantity("psi1", FunctionalSpec("ratio", idx), BIVARIATE_SCALE),
                Quantity("psi2", FunctionalSpec("product", idx), BIVARIATE_SCALE)]
    return [Quantity("psi", config.functional)]


def default_priors(config: ExperimentConfig) -> tuple[str, ...]:
    """All priors that apply to the experiment (no reference prior for max)."""
    return tuple(k for k in PRIOR_KINDS if not (k == "reference" and config.functional.kind == "max"))


@dataclass
class ExperimentReport:
    config: dict
    dataset: dict
    tables: list[SummaryTable]
    diagnostics: dict
    runtime_s: float
    seed_manifest: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "dataset": self.dataset,
            "tables": [t.to_dict() for t in self.tables],
            "diagnostics": self.diagnostics,
            "runtime_s": self.runtime_s,
            "seed_manifest": self.seed_manifest,
        }

    def summary_csv(self) -> str:
        lines = ["quantity,prior,min,q1,median,mean,q3,max,sd"]
        for t in self.tables:
            for name, row in t.rows.items():
                vals = [row.min, row.q1, row.median, row.mean, row.q3, row.max, row.sd]
                lines.append(",".join([t.label, name] + ["" if v is None else repr(float(v)) for v in vals]))
        return "\n".join(lines) + "\n"


@dataclass
class ExperimentResult:
    report: ExperimentReport
    data: Dataset
    # draws[prior][quantity name] -> DrawMatrix carrying that quantity's psi draws
    draws: dict[str, dict[str, DrawMatrix]] = field(default_factory=dict)


def _psi_diagnostics(psi: np.ndarray) -> dict:
    # ratio draws may be infinite; R-hat and ESS are then undefined
    if psi.shape[1] >= 4 and np.all(np.isfinite(psi)):
        return {"psi_split_rhat": _clean(split_rhat(psi)), "psi_ess": _clean(effective_sample_size(psi))}
    return {"psi_split_rhat": None, "psi_ess": None}


def _clean(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def run_experiment(config: ExperimentConfig, priors=None, *, data: Dataset | None = None,
                   n_threads: int | None = None, backend: str | None = None) -> ExperimentResult:
    """Generate the dataset (unless given) and run every requested prior on it."""
    t0 = time.perf_counter()
    priors = tuple(priors) if priors else config.priors
    for k in priors:
        if k not in PRIOR_KINDS:
            raise ValueError(f"unknown prior kind {k!r}")
        if k == "reference" and config.functional.kind == "max":
            raise ValueError("no reference prior exists for the max functional")
    data = data if data is not None else generate_dataset(config)
    quantities = quantities_for(config)
    tables = [SummaryTable(scale_factor=q.scale, include_mean=q.include_mean, label=q.name) for q in quantities]
    diagnostics: dict = {}
    manifest_streams: dict = {}
    draws: dict = {}
    ks = get_backend(backend)
    for kind in priors:
        prior = config.prior_for(kind)
        draws[kind] = {}
        diag = {}
        for q, table in zip(quantities, tables):
            if kind == "reference":
                # the reference prior depends on the quantity of interest
                cfg_q = replace(config, functional=q.spec, priors=("reference",),
                                prior=replace(prior, reference_target=q.spec.kind))
                dm = run_posterior(cfg_q, data, cfg_q.prior, n_threads=n_threads, backend=ks)
            elif q is quantities[0] or "base" not in draws[kind]:
                dm = run_posterior(config, data, prior, n_threads=n_threads, backend=ks)
                draws[kind]["base"] = dm
            else:
                dm = draws[kind]["base"]
            psi = dm.functional_draws if dm.functional_kind == q.spec.kind else psi_array(q.spec, dm.draws)
            dq = DrawMatrix(dm.draws, psi, dict(dm.meta), q.spec.kind)
            draws[kind][q.name] = dq
            table.add(kind, summarize_draws(psi, q.scale, q.include_mean))
            d = _psi_diagnostics(psi)
            d["max_split_rhat_theta"] = _clean(dm.meta.get("max_split_rhat"))
            d["warnings"] = list(dm.meta.get("warnings", []))
            d["runtime_s"] = dm.meta.get("runtime_s")
            diag[q.name] = d
            manifest_streams.setdefault(kind, dm.meta.get("stream_ids"))
        draws[kind].pop("base", None)
        diagnostics[kind] = diag
    report = ExperimentReport(
        config=config_to_dict(config),
        dataset=data.summary(),
        tables=tables,
        diagnostics=diagnostics,
        runtime_s=time.perf_counter() - t0,
        seed_manifest={
            "base_seed": config.base_seed,
            "data_stream_id": DATA_STREAM_ID,
            "chain_stream_ids": manifest_streams,
            "priors": list(priors),
            "n_chains": config.n_chains,
            "n_warmup": config.n_warmup,
            "n_keep": config.n_keep,
            "kernel_backend": ks.name,
            "package_version": __version__,
        },
    )
    return ExperimentResult(report, data, draws)


def write_outputs(result: ExperimentResult, out_dir, full_draws_csv: bool | None = None,
                  plot_kinds=PLOT_KINDS) -> Path:
    """Write ``report.json``, ``summary.csv``, ``dataset.csv``, ``draws/`` and ``plotdata/``.

    Draw CSVs hold theta as well as psi when ``p <= 10`` (or when
    ``full_draws_csv`` is true); theta draws always go to the binary
    ``draws/<prior>.bin`` file otherwise.
    """
    out = Path(out_dir)
    (out / "draws").mkdir(parents=True, exist_ok=True)
    (out / "plotdata").mkdir(parents=True, exist_ok=True)
    rep = result.report
    (out / "report.json").write_text(dump_json(rep.to_dict()))
    (out / "summary.csv").write_text(rep.summary_csv())
    (out / "dataset.csv").write_text(dataset_to_csv(result.data))
    for kind, per_q in result.draws.items():
        for qname, dm in per_q.items():
            p = dm.n_params
            full = full_draws_csv if full_draws_csv is not None else p <= 10
            if full:
                text = dm.to_csv()
            else:
                psi_only = DrawMatrix(np.zeros(dm.shape[:2] + (0,)), dm.functional_draws, {}, dm.functional_kind)
                text = psi_only.to_csv()
                if p > 0:
                    (out / "draws" / f"{kind}.bin").write_bytes(
                        DrawMatrix(dm.draws, None, _manifest_meta(dm.meta)).to_bytes())
            (out / "draws" / f"{kind}_{qname}.csv").write_text(text)
            psi = dm.functional_draws
            for pk in plot_kinds:
                if pk == "density" or np.all(np.isfinite(psi)):
                    (out / "plotdata" / f"{kind}_{qname}_{pk}.csv").write_text(emit_plot_data(psi, pk))
    return out


def _manifest_meta(meta: dict) -> dict:
    # runtime varies between runs; keep binary files byte-identical
    return {k: v for k, v in meta.items() if k != "runtime_s"}


def _plain(o):
    # strict JSON: numpy scalars become Python numbers, non-finite floats null
    if isinstance(o, dict):
        return {str(k): _plain(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_plain(v) for v in o]
    if isinstance(o, np.ndarray):
        return [_plain(v) for v in o.tolist()]
    if isinstance(o, (np.integer, np.bool_)):
        return o.item()
    if isinstance(o, (float, np.floating)):
        o = float(o)
        return o if math.isfinite(o) else None
    return o


def dump_json(obj) -> str:
    """Deterministic, strict JSON text (sorted keys, NaN and inf as null)."""
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


# ------------------------------------------------------------- sensitivity

def run_sensitivity(config: ExperimentConfig, eta_list, *, data: Dataset | None = None,
                    n_threads: int | None = None, backend: str | None = None):
    """Posterior summaries of psi for several half-Cauchy scales on one dataset.

    Returns ``(SummaryTable, Dataset)``; rows are labelled ``eta=<value>``.
    """
    etas = [float(e) for e in eta_list]
    if not etas:
        raise ValueError("need at least one eta")
    if any(not e > 0 for e in etas):
        raise ValueError("eta values must be positive")
    data = data if data is not None else generate_dataset(config)
    q = quantities_for(config)[0]
    table = SummaryTable(scale_factor=q.scale, include_mean=q.include_mean, label=q.name)
    ks = get_backend(backend)
    for e in etas:
        prior = replace(config.prior, eta=e)
        dm = run_posterior(config, data, prior, n_threads=n_threads, backend=ks)
        psi = psi_array(q.spec, dm.draws)
        table.add(f"eta={e:g}", summarize_draws(psi, q.scale, q.include_mean))
    return table, data


# ------------------------------------------------------- closed-form fidelity

def ecdf_sup_distance(draws, cdf) -> float:
    """Kolmogorov distance between the empirical CDF of ``draws`` and ``cdf``."""
    x = np.sort(np.asarray(draws, dtype=float).ravel())
    n = x.size
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(F - i / n)), np.max(np.abs(F - (i - 1) / n))))


def laplace_approx_check(config: ExperimentConfig, n_draws: int = 1_000_000, tau2: float = 300.0,
                         hs_threshold: float = 0.05, normal_threshold: float = 0.03, *,
                         n_threads: int | None = None, backend: str | None = None) -> dict:
    """Compare the large-``Z`` closed-form posteriors of psi with sampler output.

    The horseshoe closed form is compared with the half-Cauchy global-scale
    sampler (``pure_global``) and the normal closed form with the conjugate
    normal sampler, both on the dataset generated from ``config``.
    """
    if config.functional.kind != "sum_sq":
        raise ValueError("the closed forms concern the sum-of-squares functional")
    data = generate_dataset(config)
    Z = data.sum_sq
    p = data.p
    n_keep = max(100, -(-n_draws // config.n_chains))
    cfg = replace(config, n_keep=n_keep, n_warmup=min(config.n_warmup, n_keep))
    ks = get_backend(backend)
    out: dict = {"p": p, "Z": Z, "n_draws": n_keep * cfg.n_chains, "tau2": tau2}

    gdm = run_posterior(cfg, data, replace(config.prior_for("pure_global")), n_threads=n_threads, backend=ks)
    g_psi = gdm.pooled_psi()
    hs: dict = {"threshold": hs_threshold, "sampler": "pure_global", "sampler_mean": float(g_psi.mean())}
    try:
        post = psi_posterior("horseshoe", p, Z)
        hs["sup_distance"] = ecdf_sup_distance(g_psi, post.cdf)
        hs["improper"] = False
        hs["pass"] = hs["sup_distance"] < hs_threshold
    except ImproperPosteriorError as exc:
        hs["sup_distance"] = None
        hs["improper"] = True
        hs["pass"] = False
        hs["note"] = str(exc)
    exact = psi_posterior("horseshoe", p, Z, likelihood="exact")
    hs["sup_distance_exact_likelihood"] = ecdf_sup_distance(g_psi, exact.cdf)
    out["horseshoe"] = hs

    ndm = run_posterior(cfg, data, replace(config.prior_for("vague_normal"), sigma2=tau2), n_threads=n_threads,
                        backend=ks)
    n_psi = ndm.pooled_psi()
    post_n = psi_posterior("normal", p, Z, tau2)
    exact_n = psi_posterior("normal", p, Z, tau2, likelihood="exact")
    d = ecdf_sup_distance(n_psi, post_n.cdf)
    out["normal"] = {
        "threshold": normal_threshold,
        "sampler": "vague_normal",
        "sampler_mean": float(n_psi.mean()),
        "closed_form_mean": post_n.mean(),
        "sup_distance": d,
        "sup_distance_exact_likelihood": ecdf_sup_distance(n_psi, exact_n.cdf),
        "pass": d < normal_threshold,
    }
    out["pass"] = bool(hs["pass"] and out["normal"]["pass"])
    return out
