import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from glshrink.diagnostics import (PLOT_KINDS, SummaryTable, autocorrelation, effective_sample_size, emit_plot_data,
                                  kde, split_rhat, summarize_draws, type7_quantile)


@given(arrays(float, st.integers(1, 60), elements=st.floats(-1e9, 1e9)), st.floats(0, 1))
@settings(max_examples=200)
def test_type7_matches_numpy(x, q):
    s = np.sort(x)
    assert type7_quantile(s, q) == pytest.approx(np.quantile(s, q, method="linear"), rel=1e-12, abs=1e-6)


def test_type7_with_infinite_runs():
    s = np.array([1.0, 2.0, np.inf, np.inf, np.inf])
    assert type7_quantile(s, 0.75) == np.inf
    assert type7_quantile(np.array([-np.inf, -np.inf, 0.0]), 0.25) == -np.inf


def test_summary_against_numpy():
    x = np.random.default_rng(1).gamma(2.0, size=(4, 500))
    row = summarize_draws(x, scale=1000.0)
    flat = x.ravel() * 1000
    assert row.mean == pytest.approx(flat.mean(), rel=1e-12)
    assert row.median == pytest.approx(np.median(flat), rel=1e-12)
    assert (row.q1, row.q3) == pytest.approx(tuple(np.quantile(flat, [0.25, 0.75])), rel=1e-12)
    assert row.sd == pytest.approx(flat.std(ddof=1), rel=1e-12)
    assert row.is_monotone() and row.n == 2000


def test_summary_of_ratio_draws():
    x = np.r_[np.linspace(-1, 1, 200), np.inf, -np.inf, np.nan]
    row = summarize_draws(x, include_mean=False)
    assert row.mean is None and row.n_undefined == 1 and row.n == 202
    assert row.max == np.inf and row.min == -np.inf
    assert row.sd == pytest.approx(np.linspace(-1, 1, 200).std(ddof=1))
    with pytest.raises(ValueError):
        summarize_draws(np.ones(10))
    with pytest.raises(ValueError):
        summarize_draws([])


def test_table_csv_and_dict():
    t = SummaryTable(include_mean=False, label="psi1", scale_factor=1000.0)
    t.add("horseshoe_plus", summarize_draws(np.arange(200.0)))
    with pytest.raises(ValueError):
        t.add("horseshoe_plus", summarize_draws(np.arange(200.0)))
    rows = list(csv.reader(io.StringIO(t.to_csv(with_label=True))))
    assert rows[0] == ["quantity", "prior", "min", "q1", "median", "q3", "max", "sd"]
    assert rows[1][:3] == ["psi1", "horseshoe_plus", "0.0"]
    d = t.to_dict()
    assert d["columns"] == list(t.columns) and "mean" not in d["rows"]["horseshoe_plus"]


def test_autocorrelation_matches_direct_sum():
    x = np.random.default_rng(3).normal(size=300).cumsum()
    d = x - x.mean()
    direct = np.array([np.dot(d[: x.size - k], d[k:]) for k in range(21)]) / np.dot(d, d)
    assert autocorrelation(x, 20) == pytest.approx(direct, abs=1e-12)
    assert autocorrelation(np.full(10, 2.0), 3).tolist() == [1.0, 0.0, 0.0, 0.0]
    with pytest.raises(ValueError):
        autocorrelation(x, 300)


def _ar1(phi, m, n, seed):
    rng = np.random.default_rng(seed)
    e = rng.normal(size=(m, n))
    out = np.empty((m, n))
    out[:, 0] = e[:, 0] / math.sqrt(1 - phi * phi)
    for t in range(1, n):
        out[:, t] = phi * out[:, t - 1] + e[:, t]
    return out


@pytest.mark.parametrize("phi", [0.0, 0.5, 0.9])
def test_ess_of_ar1(phi):
    m, n = 4, 20000
    theory = m * n * (1 - phi) / (1 + phi)
    assert effective_sample_size(_ar1(phi, m, n, 11)) == pytest.approx(theory, rel=0.15)


def test_rhat():
    good = _ar1(0.3, 4, 2000, 5)
    assert split_rhat(good) == pytest.approx(1.0, abs=0.01)
    bad = good + np.arange(4)[:, None]
    assert split_rhat(bad) > 1.5
    assert math.isnan(split_rhat(np.ones((2, 50))))
    assert effective_sample_size(np.ones((2, 50))) == 1.0
    with pytest.raises(ValueError):
        split_rhat(np.ones((2, 3)))


@pytest.mark.parametrize("n", [500, 30000])
def test_kde_matches_scipy(n):
    x = np.random.default_rng(9).standard_t(4, size=n)
    at = np.linspace(-4, 4, 101)
    ours = kde(x, at)
    h = 0.9 * min(x.std(ddof=1), stats.iqr(x) / 1.349) * n ** -0.2
    ref = stats.gaussian_kde(x, bw_method=h / x.std(ddof=1))(at)
    assert ours == pytest.approx(ref, rel=1e-3, abs=1e-6)


@pytest.mark.parametrize("kind,header", [
    ("trace", "chain,iter,value"), ("running_mean", "chain,iter,running_mean"),
    ("acf", "chain,lag,acf"), ("density", "x,density"),
])
def test_plot_data_headers(kind, header):
    a = np.random.default_rng(0).normal(size=(2, 150))
    text = emit_plot_data(a, kind, max_lag=10, n_points=64)
    lines = text.splitlines()
    assert lines[0] == header
    expected = {"trace": 300, "running_mean": 300, "acf": 22, "density": 64}[kind]
    assert len(lines) - 1 == expected
    assert kind in PLOT_KINDS


def test_plot_data_constant_chain_and_bad_kind():
    rm = emit_plot_data(np.full(20, 0.1), "running_mean").splitlines()[1:]
    assert {line.split(",")[2] for line in rm} == {"0.1"}
    with pytest.raises(ValueError):
        emit_plot_data(np.ones(5), "histogram")
