"""Convergence diagnostics, posterior summary tables and plot-ready CSV."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SUMMARY_COLUMNS",
    "SummaryRow",
    "SummaryTable",
    "type7_quantile",
    "summarize_draws",
    "autocorrelation",
    "split_rhat",
    "effective_sample_size",
    "kde",
    "emit_plot_data",
    "PLOT_KINDS",
]

SUMMARY_COLUMNS = ("min", "q1", "median", "mean", "q3", "max", "sd")
PLOT_KINDS = ("trace", "running_mean", "acf", "density")


def type7_quantile(sorted_x: np.ndarray, q: float) -> float:
    """Type-7 (linear) quantile of already-sorted data.

    Written out instead of calling ``np.quantile`` so that runs of equal
    infinite values interpolate to that value rather than NaN.
    """
    n = sorted_x.size
    h = (n - 1) * q
    lo = int(math.floor(h))
    hi = min(lo + 1, n - 1)
    a, b = float(sorted_x[lo]), float(sorted_x[hi])
    if a == b or h == lo:
        return a
    return a + (h - lo) * (b - a)


@dataclass(frozen=True)
class SummaryRow:
    min: float
    q1: float
    median: float
    mean: float | None
    q3: float
    max: float
    sd: float
    n: int
    n_undefined: int = 0

    def values(self, include_mean: bool = True) -> list[float | None]:
        cols = SUMMARY_COLUMNS if include_mean else tuple(c for c in SUMMARY_COLUMNS if c != "mean")
        return [getattr(self, c) for c in cols]

    def is_monotone(self) -> bool:
        return self.min <= self.q1 <= self.median <= self.q3 <= self.max


def summarize_draws(psi_draws, scale: float = 1.0, include_mean: bool = True,
                    min_draws: int = 100) -> SummaryRow:
    """Pooled summary of psi draws.

    Parameters
    ----------
    psi_draws : array_like
        Draws of any shape; all chains are pooled.
    scale : float
        Multiplier applied before summarizing (the bivariate tables use 1000).
    include_mean : bool
        Set to False for ratio draws, whose posterior mean need not exist.
        ``sd`` is then computed over the finite draws.

    Notes
    -----
    NaN draws (a 0/0 ratio) are dropped and counted in ``n_undefined``.
    """
    x = np.asarray(psi_draws, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("no draws to summarize")
    nan = np.isnan(x)
    x = np.sort(x[~nan]) * scale
    if x.size < min_draws:
        raise ValueError(f"need at least {min_draws} draws, got {x.size}")
    fin = x[np.isfinite(x)]
    mean = None
    if include_mean:
        mean = math.fsum(x.tolist()) / x.size
    sd = float(np.std(fin, ddof=1)) if fin.size > 1 else 0.0
    return SummaryRow(
        min=float(x[0]), q1=type7_quantile(x, 0.25), median=type7_quantile(x, 0.5), mean=mean,
        q3=type7_quantile(x, 0.75), max=float(x[-1]), sd=sd, n=int(x.size), n_undefined=int(nan.sum()),
    )


@dataclass
class SummaryTable:
    """Rows keyed by prior name, in insertion order."""

    rows: dict[str, SummaryRow] = field(default_factory=dict)
    scale_factor: float = 1.0
    include_mean: bool = True
    label: str = "psi"

    def add(self, name: str, row: SummaryRow) -> None:
        if name in self.rows:
            raise ValueError(f"duplicate row {name!r}")
        self.rows[name] = row

    @property
    def columns(self) -> tuple[str, ...]:
        if self.include_mean:
            return SUMMARY_COLUMNS
        return tuple(c for c in SUMMARY_COLUMNS if c != "mean")

    def to_csv(self, with_label: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = (["quantity"] if with_label else []) + ["prior", *self.columns]
        w.writerow(head)
        for name, row in self.rows.items():
            vals = [_fmt(v) for v in row.values(self.include_mean)]
            w.writerow(([self.label] if with_label else []) + [name, *vals])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "scale_factor": self.scale_factor,
            "columns": list(self.columns),
            "rows": {k: dict(zip(self.columns, r.values(self.include_mean))) for k, r in self.rows.items()},
        }


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


# ------------------------------------------------------------------ chains

def autocorrelation(chain, max_lag: int) -> np.ndarray:
    """Biased-normalized sample ACF for lags ``0..max_lag``.

    A constant chain has ACF 1 at lag 0 and 0 elsewhere.
    """
    x = np.asarray(chain, dtype=float).ravel()
    n = x.size
    if not 0 <= max_lag < n:
        raise ValueError("need 0 <= max_lag < len(chain)")
    d = x - x.mean()
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(d, m)
    acov = np.fft.irfft(f * np.conj(f), m)[: max_lag + 1] / n
    out = np.zeros(max_lag + 1)
    if acov[0] > 0:
        out = acov / acov[0]
    out[0] = 1.0
    return out


def _as_chains(draws) -> np.ndarray:
    a = np.asarray(draws, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.ndim != 2:
        raise ValueError("expected a (chains, iterations) array")
    return a


def split_rhat(draws) -> float:
    """Split-chain potential scale reduction factor.

    Each chain is halved, then the classic between/within variance ratio is
    formed over the ``2m`` halves. Returns NaN (the degeneracy flag) when the
    within-half variance is zero.
    """
    a = _as_chains(draws)
    m, n = a.shape
    if n < 4:
        raise ValueError("chains must have at least 4 draws")
    half = n // 2
    halves = np.concatenate((a[:, :half], a[:, n - half:]), axis=0)
    means = halves.mean(axis=1)
    w = halves.var(axis=1, ddof=1).mean()
    if not w > 0:
        return float("nan")
    b = half * means.var(ddof=1)
    var_plus = (half - 1) / half * w + b / half
    return float(math.sqrt(var_plus / w))


def effective_sample_size(draws) -> float:
    """Multi-chain ESS with Geyer's initial positive sequence.

    Autocorrelations are combined across chains, summed in adjacent pairs and
    truncated at the first non-positive pair. Constant input gives 1.
    """
    a = _as_chains(draws)
    m, n = a.shape
    if n < 4:
        return float(m * n) if np.ptp(a) > 0 else 1.0
    chain_var = a.var(axis=1, ddof=1)
    w = chain_var.mean()
    if not w > 0:
        return 1.0
    max_lag = n - 1
    acov = np.empty((m, max_lag + 1))
    for c in range(m):
        acov[c] = autocorrelation(a[c], max_lag) * a[c].var()
    mean_acov = acov.mean(axis=0)
    var_plus = w * (n - 1) / n
    if m > 1:
        var_plus += a.mean(axis=1).var(ddof=1)
    rho = 1.0 - (w - mean_acov) / var_plus
    rho[0] = 1.0
    # pairs (rho[2k] + rho[2k+1]), stopped at the first non-positive pair
    total = 0.0
    prev = math.inf
    k = 0
    while 2 * k + 1 <= max_lag:
        pair = rho[2 * k] + rho[2 * k + 1]
        if pair <= 0:
            break
        pair = min(pair, prev)  # monotone sequence
        total += pair
        prev = pair
        k += 1
    tau = -1.0 + 2.0 * total
    tau = max(tau, 1.0 / math.log10(max(m * n, 10)))
    return float(m * n / tau)


# --------------------------------------------------------------- plot data

def kde(x, at, bandwidth: float | None = None, n_bins: int = 1 << 14) -> np.ndarray:
    """Gaussian KDE with Silverman's bandwidth, evaluated at ``at``.

    Large samples are linearly binned and convolved by FFT; the binning
    error is far below the bandwidth at the default bin count.
    """
    x = np.asarray(x, dtype=float).ravel()
    x = x[np.isfinite(x)]
    at = np.asarray(at, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two finite draws")
    if bandwidth is None:
        sd = x.std(ddof=1)
        iqr = np.subtract(*np.percentile(x, [75, 25]))
        spread = min(sd, iqr / 1.349) if iqr > 0 else sd
        bandwidth = 0.9 * spread * n ** (-0.2) if spread > 0 else 1.0
    h = float(bandwidth)
    if n * at.size <= 2_000_000:
        z = (at[:, None] - x[None, :]) / h
        return np.exp(-0.5 * z * z).sum(axis=1) / (n * h * math.sqrt(2 * math.pi))
    lo = min(x.min(), at.min()) - 5 * h
    hi = max(x.max(), at.max()) + 5 * h
    delta = (hi - lo) / (n_bins - 1)
    pos = (x - lo) / delta
    i = np.floor(pos).astype(np.int64)
    frac = pos - i
    counts = np.bincount(i, 1.0 - frac, minlength=n_bins + 1)[: n_bins + 1]
    counts += np.bincount(i + 1, frac, minlength=n_bins + 1)[: n_bins + 1]
    counts = counts[:n_bins]
    lags = np.arange(-n_bins + 1, n_bins) * delta
    kern = np.exp(-0.5 * (lags / h) ** 2) / (h * math.sqrt(2 * math.pi))
    m = 1 << (3 * n_bins).bit_length()
    dens = np.fft.irfft(np.fft.rfft(counts, m) * np.fft.rfft(kern, m), m)[n_bins - 1: 2 * n_bins - 1] / n
    grid = lo + delta * np.arange(n_bins)
    return np.interp(at, grid, dens)


def emit_plot_data(draws, kind: str, max_lag: int = 100, n_points: int = 512) -> str:
    """Plot-ready CSV for one scalar quantity.

    ``draws`` is a ``(chains, iterations)`` array (1-D means one chain).

    =============  ==============================
    kind           columns
    =============  ==============================
    trace          ``chain,iter,value``
    running_mean   ``chain,iter,running_mean``
    acf            ``chain,lag,acf``
    density        ``x,density`` (pooled chains)
    =============  ==============================
    """
    a = _as_chains(draws)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if kind == "trace":
        w.writerow(["chain", "iter", "value"])
        for c, row in enumerate(a):
            for t, v in enumerate(row):
                w.writerow([c, t, repr(float(v))])
    elif kind == "running_mean":
        w.writerow(["chain", "iter", "running_mean"])
        for c, row in enumerate(a):
            rm = np.cumsum(row) / np.arange(1, row.size + 1)
            if np.ptp(row) == 0:
                rm = np.full(row.size, row[0])  # keep a constant chain exactly constant
            for t, v in enumerate(rm):
                w.writerow([c, t, repr(float(v))])
    elif kind == "acf":
        w.writerow(["chain", "lag", "acf"])
        for c, row in enumerate(a):
            for lag, v in enumerate(autocorrelation(row, min(max_lag, row.size - 1))):
                w.writerow([c, lag, repr(float(v))])
    elif kind == "density":
        w.writerow(["x", "density"])
        x = a.ravel()
        x = x[np.isfinite(x)]
        lo, hi = np.percentile(x, [0.5, 99.5])
        if hi <= lo:
            lo, hi = lo - 0.5, hi + 0.5
        grid = np.linspace(lo, hi, n_points)
        for g, d in zip(grid, kde(x, grid)):
            w.writerow([repr(float(g)), repr(float(d))])
    else:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {PLOT_KINDS}")
    return buf.getvalue()
