"""Acceptance suite: one PASS/FAIL line per criterion, numbered 1 to 11.

``pytest tests/test_acceptance.py -s`` shows the lines inline;
``python tests/test_acceptance.py`` prints them as a plain report.
Each check asserts its criterion as stated, so a failing line is a real
failure rather than a skipped test.
"""
from __future__ import annotations

import statistics
import subprocess
import sys
import tempfile
from dataclasses import dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from glshrink.analytics import verify_hs_bound, verify_normal_bound
from glshrink.experiments import laplace_approx_check, run_experiment, run_sensitivity
from glshrink.model import load_config
from glshrink.regvar import (closure_check, dual_density, dual_mixing_density, estimate_tail_index, loglog_slope,
                             mixing_density, scale_mixture_pdf)

sys.path.insert(0, str(Path(__file__).resolve().parent))
from p1_suite import all_p1_checks  # noqa: E402

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
# the first seed set tried, kept as is; the decisions ledger records how often other sets pass
DATA_SEEDS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class Outcome:
    number: int
    title: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} criterion {self.number:2d} ({self.title}): {self.detail}"


def _means(result) -> dict[str, float]:
    return {k: r.mean for k, r in result.report.tables[0].rows.items()}


def _in(x, band) -> bool:
    return band[0] <= x <= band[1]


@lru_cache(maxsize=None)
def _sum_sq_runs(config_name: str) -> tuple:
    cfg = load_config(CONFIGS / config_name)
    return tuple(run_experiment(replace(cfg, base_seed=s)) for s in DATA_SEEDS)


# ------------------------------------------------------------------ criteria

SPARSE_BANDS = {
    "horseshoe": (80, 125), "horseshoe_plus": (80, 125), "vague_normal": (245, 330),
    "pure_local": (125, 180), "pure_global": (55, 110), "reference": (55, 110),
}


def criterion_1() -> Outcome:
    runs = _sum_sq_runs("sumsq_sparse.json")
    med = {k: statistics.median(_means(r)[k] for r in runs) for k in SPARSE_BANDS}
    sd = {k: statistics.median(r.report.tables[0].rows[k].sd for r in runs) for k in ("horseshoe", "horseshoe_plus")}
    worst_rt = max(d["psi"]["runtime_s"] for r in runs for d in r.report.diagnostics.values())
    misses = [f"{k}={med[k]:.1f} not in {b}" for k, b in SPARSE_BANDS.items() if not _in(med[k], b)]
    misses += [f"{k} sd={v:.1f} not in (14, 28)" for k, v in sd.items() if not _in(v, (14, 28))]
    if worst_rt > 120:
        misses.append(f"runtime {worst_rt:.1f}s > 120s")
    zs = ", ".join(f"{r.data.sum_sq:.0f}" for r in runs)
    detail = (f"medians {', '.join(f'{k}={v:.1f}' for k, v in med.items())}; "
              f"sd {', '.join(f'{k}={v:.1f}' for k, v in sd.items())}; max runtime/prior {worst_rt:.2f}s; Z per seed [{zs}]")
    if misses:
        detail += "; out of band: " + "; ".join(misses)
    return Outcome(1, "sparse sum of squares", not misses, detail)


def criterion_2() -> Outcome:
    runs = _sum_sq_runs("sumsq_dense.json")
    glob = [_means(r)["pure_global"] for r in runs]
    hsp = [_means(r)["horseshoe_plus"] for r in runs]
    wins = sum(g > h for g, h in zip(glob, hsp))
    med = statistics.median(glob)
    ok = _in(med, (85, 135)) and wins >= 4
    detail = (f"pure_global median {med:.1f} in [85, 135]: {_in(med, (85, 135))}; per seed "
              f"{[round(g, 1) for g in glob]} vs horseshoe_plus {[round(h, 1) for h in hsp]}; exceeds on {wins}/5")
    return Outcome(2, "dense sum of squares", ok, detail)


def criterion_3() -> Outcome:
    m = _means(run_experiment(load_config(CONFIGS / "max.json")))
    checks = {f"{k} in [9.0, 10.7]": _in(m[k], (9.0, 10.7)) for k in ("horseshoe", "horseshoe_plus", "vague_normal")}
    checks["pure_global in [3.4, 5.6]"] = _in(m["pure_global"], (3.4, 5.6))
    checks["laplace < horseshoe - 0.5"] = m["laplace"] < m["horseshoe"] - 0.5
    detail = ", ".join(f"{k}={v:.2f}" for k, v in m.items())
    bad = [k for k, v in checks.items() if not v]
    return Outcome(3, "max problem", not bad, detail + ("; failed: " + "; ".join(bad) if bad else ""))


def _psi2(config_name: str):
    res = run_experiment(load_config(CONFIGS / config_name), priors=("horseshoe_plus", "vague_normal"))
    table = next(t for t in res.report.tables if t.label == "psi2")
    return table.rows["horseshoe_plus"], table.rows["vague_normal"], table.scale_factor


def criterion_4() -> Outcome:
    hs, nm, scale = _psi2("bivariate_origin.json")
    hs_t, nm_t, _ = _psi2("bivariate_origin_t3.json")
    iqr = lambda r: r.q3 - r.q1  # noqa: E731
    median_raw = abs(hs.median) / scale
    ratio, ratio_t = iqr(nm) / iqr(hs), iqr(nm_t) / iqr(hs_t)
    ok = median_raw < 2e-3 and ratio >= 4 and ratio_t >= 4
    detail = (f"x1000 quartiles horseshoe_plus ({hs.q1:.2f}, {hs.median:.2f}, {hs.q3:.2f}), vague_normal "
              f"({nm.q1:.2f}, {nm.median:.2f}, {nm.q3:.2f}); |median| {median_raw:.2e}; IQR ratio {ratio:.1f}; "
              f"t3 IQR ratio {ratio_t:.1f}")
    return Outcome(4, "bivariate origin", ok, detail)


def criterion_5() -> Outcome:
    checks = [verify_hs_bound(p, Z) for p, Z in ((100, 200.0), (100, 2000.0), (20, 100.0))]
    parts = []
    for c in checks:
        prob = "undefined (closed form not integrable)" if c.improper else f"{c.prob:.3g}"
        parts.append(f"(p={c.p}, Z={c.Z:g}) P={prob}, bound {c.bound:.3g}, exact-likelihood P={c.prob_exact:.3g}")
    return Outcome(5, "horseshoe upper-tail bound", all(c.holds for c in checks), "; ".join(parts))


def criterion_6() -> Outcome:
    checks = [verify_normal_bound(100, 200.0, 300.0), verify_normal_bound(20, 50.0, 300.0)]
    detail = "; ".join(f"(p={c.p}, Z={c.Z:g}) P={c.prob:.3g} vs bound {c.bound:.3g}" for c in checks)
    return Outcome(6, "normal lower-tail bound", all(c.holds for c in checks), detail)


def criterion_7() -> Outcome:
    res = laplace_approx_check(load_config(CONFIGS / "sumsq_sparse.json"), n_draws=1_000_000)
    hs, nm = res["horseshoe"], res["normal"]
    hs_d = "undefined (closed form not integrable)" if hs["sup_distance"] is None else f"{hs['sup_distance']:.4f}"
    detail = (f"Z={res['Z']:.1f}; horseshoe sup-distance {hs_d} (< 0.05 required; vs exact likelihood "
              f"{hs['sup_distance_exact_likelihood']:.4f}); normal sup-distance {nm['sup_distance']:.4f} "
              f"(< 0.03 required; vs exact likelihood {nm['sup_distance_exact_likelihood']:.4f})")
    return Outcome(7, "closed-form posterior fit", bool(res["pass"]), detail)


def criterion_8() -> Outcome:
    checks = all_p1_checks()
    bad = [f"{c.kind} y={c.y:g} {c.stat} z={c.z:.2f}" for c in checks if not c.ok]
    worst = max(checks, key=lambda c: abs(c.z))
    detail = f"{len(checks) - len(bad)}/{len(checks)} within 3 SE; largest |z| {abs(worst.z):.2f} ({worst.kind} " \
             f"y={worst.y:g} {worst.stat})"
    return Outcome(8, "p = 1 sampler oracle", not bad, detail + ("; failed: " + ", ".join(bad) if bad else ""))


def criterion_9() -> Outcome:
    table, data = run_sensitivity(load_config(CONFIGS / "sensitivity.json"), [0.5, 1.0, 5.0])
    means = [r.mean for r in table.rows.values()]
    spread = max(means) - min(means)
    detail = f"sum y^2={data.sum_sq:.1f}; means {[round(m, 2) for m in means]}; max pairwise difference {spread:.2f}"
    return Outcome(9, "eta sensitivity", spread < 8, detail)


def criterion_10() -> Outcome:
    hc = np.abs(stats.cauchy.rvs(size=1_000_000, random_state=20160601))
    hill = estimate_tail_index(hc).alpha_hat
    rng = np.random.default_rng(20160601)
    c, t3 = rng.standard_cauchy(1_000_000), rng.standard_t(3, 1_000_000)
    closure = closure_check("sum", c, t3, alphas=[1.0, 3.0])
    curve = dual_density("laplace", n_grid=20001, window=100.0)
    dual_err = float(np.max(np.abs(curve.density() - stats.cauchy.pdf(curve.grid))))
    theta = np.array([0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0])
    cauchy_mix = dual_mixing_density(mixing_density("laplace"), 0.5)
    trip_err = float(np.max(np.abs(scale_mixture_pdf(cauchy_mix, theta) - stats.cauchy.pdf(theta))))
    hs = mixing_density("horseshoe")
    slope = loglog_slope(hs, 1e4)
    near = scale_mixture_pdf(hs, 10.0 ** -np.arange(1, 7))
    monotone = bool(np.all(np.diff(near) > 0))
    checks = {
        f"Hill {hill:.3f} in 1 +- 0.1": abs(hill - 1) <= 0.1,
        f"sum rule {closure.alpha_hat:.3f} vs {closure.predicted:g} +- 0.15": abs(closure.alpha_hat - closure.predicted) <= 0.15,
        f"dual density sup-error {dual_err:.1e} < 1e-8": dual_err < 1e-8,
        f"round trip sup-error {trip_err:.1e} < 1e-6": trip_err < 1e-6,
        f"tail slope {slope:.4f} in -2 +- 0.1": abs(slope + 2) <= 0.1,
        "monotone divergence at 0": monotone,
    }
    detail = "; ".join(f"{k}: {'ok' if v else 'NO'}" for k, v in checks.items())
    return Outcome(10, "regular variation", all(checks.values()), detail)


def _cli(*args) -> None:
    subprocess.run([sys.executable, "-m", "glshrink.cli", *args], check=True, capture_output=True)


def _csvs(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def criterion_11() -> Outcome:
    commands = {
        "run sumsq_sparse": ["run", "--config", str(CONFIGS / "sumsq_sparse.json")],
        "run bivariate_origin_t3": ["run", "--config", str(CONFIGS / "bivariate_origin_t3.json")],
        "sensitivity": ["sensitivity", "--config", str(CONFIGS / "sensitivity.json")],
        "regvar dual": ["regvar", "dual", "bessel3"],
    }
    mismatched, n_files = [], 0
    with tempfile.TemporaryDirectory() as tmp:
        for name, cmd in commands.items():
            trees = []
            for i, threads in enumerate((1, 4, 4)):
                out = Path(tmp) / f"{name.replace(' ', '_')}_{i}"
                out.mkdir()
                if cmd[0] == "regvar":
                    _cli(*cmd, "--out", str(out / "dual.csv"))
                else:
                    _cli(*cmd, "--out", str(out), "--threads", str(threads))
                trees.append(_csvs(out))
            n_files += len(trees[0])
            if not (trees[0] and trees[0] == trees[1] == trees[2]):
                mismatched.append(name)
    detail = f"{len(commands)} commands, {n_files} CSV files, each run 3 times (1, 4, 4 threads)"
    if mismatched:
        detail += "; differing: " + ", ".join(mismatched)
    return Outcome(11, "determinism", not mismatched, detail)


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


@pytest.mark.parametrize("number", list(CRITERIA))
def test_criterion(number):
    outcome = CRITERIA[number]()
    print(outcome.line())
    assert outcome.passed, outcome.line()


if __name__ == "__main__":
    results = [CRITERIA[i]() for i in CRITERIA]
    for r in results:
        print(r.line())
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria pass")
    sys.exit(0 if all(r.passed for r in results) else 1)
