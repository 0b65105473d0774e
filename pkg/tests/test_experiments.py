import csv
import io
import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from glshrink.draws import DrawMatrix
from glshrink.experiments import (default_priors, dump_json, ecdf_sup_distance, quantities_for, run_experiment,
                                  run_sensitivity, write_outputs)
from glshrink.model import ExperimentConfig, FunctionalSpec, PriorSpec, load_config

SUMMARY_HEADER = "quantity,prior,min,q1,median,mean,q3,max,sd"
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def _small(name):
    return replace(load_config(CONFIGS / name), n_keep=200, n_warmup=200, n_chains=2)


def test_sum_sq_experiment_layout(tmp_path):
    cfg = _small("sumsq_sparse.json")
    res = run_experiment(cfg)
    assert list(res.draws) == list(cfg.priors)
    lines = res.report.summary_csv().splitlines()
    assert lines[0] == SUMMARY_HEADER and len(lines) == 1 + 7
    out = write_outputs(res, tmp_path)
    rep = json.loads((out / "report.json").read_text())
    assert set(rep) >= {"config", "dataset", "tables", "diagnostics", "seed_manifest"}
    man = rep["seed_manifest"]
    assert man["base_seed"] == cfg.base_seed and man["data_stream_id"] == 0
    assert set(man["chain_stream_ids"]) == set(cfg.priors)
    # p = 100: psi-only CSV plus binary theta draws (reference has no theta draws)
    hs = DrawMatrix.from_bytes((out / "draws" / "horseshoe.bin").read_bytes())
    assert hs.shape == (2, 200, 100)
    assert np.array_equal(hs.draws, res.draws["horseshoe"]["psi"].draws)
    assert not (out / "draws" / "reference.bin").exists()
    head = (out / "draws" / "horseshoe_psi.csv").read_text().splitlines()[:2]
    assert head == ["chain,iter,param,value", head[1]] and head[1].startswith("0,0,psi,")
    for kind in ("trace", "running_mean", "acf", "density"):
        assert (out / "plotdata" / f"pure_global_psi_{kind}.csv").exists()


def test_default_priors():
    cfg = load_config(CONFIGS / "max.json")
    assert "reference" not in default_priors(cfg)
    assert len(default_priors(load_config(CONFIGS / "sumsq_sparse.json"))) == 7


def test_bivariate_tables(tmp_path):
    cfg = _small("bivariate_origin.json")
    qs = quantities_for(cfg)
    assert [(q.name, q.spec.kind, q.include_mean) for q in qs] == [("psi1", "ratio", False),
                                                                  ("psi2", "product", True)]
    res = run_experiment(cfg, priors=("horseshoe_plus", "vague_normal", "reference"))
    rows = list(csv.DictReader(io.StringIO(res.report.summary_csv())))
    assert {(r["quantity"], r["prior"]) for r in rows} == {(q, p) for q in ("psi1", "psi2")
                                                         for p in ("horseshoe_plus", "vague_normal", "reference")}
    assert all(r["mean"] == "" for r in rows if r["quantity"] == "psi1")
    psi2 = res.draws["vague_normal"]["psi2"]
    row = next(r for r in rows if r["quantity"] == "psi2" and r["prior"] == "vague_normal")
    assert float(row["median"]) == pytest.approx(1000 * np.median(psi2.functional_draws), rel=1e-12)
    out = write_outputs(res, tmp_path)
    # p = 2: theta is in the CSV
    dm = DrawMatrix.from_csv((out / "draws" / "vague_normal_psi2.csv").read_text(), "product")
    assert dm.shape == (2, 200, 2)


def test_experiment_is_thread_independent():
    cfg = _small("max.json")
    a = run_experiment(cfg, priors=("horseshoe", "laplace"), n_threads=1)
    b = run_experiment(cfg, priors=("horseshoe", "laplace"), n_threads=3)
    assert a.report.summary_csv() == b.report.summary_csv()


def test_sensitivity_rows():
    cfg = _small("sensitivity.json")
    table, data = run_sensitivity(cfg, [0.5, 1.0, 5.0])
    assert list(table.rows) == ["eta=0.5", "eta=1", "eta=5"]
    assert data.p == 100


def test_dump_json_is_strict_and_stable():
    text = dump_json({"b": math.nan, "a": [np.float64(1.5), math.inf], "c": np.int64(3)})
    assert text == '{\n  "a": [\n    1.5,\n    null\n  ],\n  "b": null,\n  "c": 3\n}\n'


def test_ecdf_sup_distance_against_kstest():
    x = stats.norm.rvs(size=3000, random_state=1)
    ours = ecdf_sup_distance(x, stats.norm.cdf)
    assert ours == pytest.approx(stats.kstest(x, "norm").statistic, rel=1e-12)


def test_reference_prior_samples_psi_only():
    cfg = ExperimentConfig(100, 10.0, 1, PriorSpec("horseshoe"), FunctionalSpec("sum_sq"), n_keep=100, n_warmup=100,
                           n_chains=1, priors=("reference",))
    res = run_experiment(cfg)
    assert res.draws["reference"]["psi"].shape == (1, 100, 0)
