import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from glshrink.regvar import (DUALITY_TABLE, ImproperMixingError, MIXING_CATALOG, barndorff_tail_check,
                             closure_check, dual_density, dual_mixing_density, estimate_tail_index, loglog_slope,
                             mixing_density, observation_marginal, scale_mixture_pdf)
from oracles import hill

THETA = np.array([-4.0, -0.3, 0.2, 1.0, 7.5])


@pytest.mark.parametrize("name", sorted(MIXING_CATALOG))
def test_catalog_entries_are_densities(name):
    assert mixing_density(name).mass() == pytest.approx(1.0, abs=1e-9)


def test_unknown_mixing_name():
    with pytest.raises(KeyError):
        mixing_density("gamma")


@pytest.mark.parametrize("name,law", [
    ("exponential", stats.laplace()),
    ("cauchy", stats.cauchy()),
    ("student_t3", stats.t(3)),
])
def test_scale_mixtures_reproduce_known_laws(name, law):
    assert scale_mixture_pdf(mixing_density(name), THETA) == pytest.approx(law.pdf(THETA), rel=1e-8)


def test_horseshoe_mixture_against_scipy_quad():
    def direct(t):
        g = lambda lam: stats.norm.pdf(t, scale=lam) * 2 / (math.pi * (1 + lam * lam))  # noqa: E731
        return integrate.quad(g, 0, np.inf, points=None, limit=400, epsabs=0, epsrel=1e-11)[0]

    hs = mixing_density("horseshoe")
    for t in (0.05, 0.5, 3.0, 40.0):
        assert scale_mixture_pdf(hs, t) == pytest.approx(direct(t), rel=1e-7)


def test_horseshoe_pole_and_slope():
    hs = mixing_density("horseshoe")
    assert scale_mixture_pdf(hs, 0.0) == math.inf
    near = scale_mixture_pdf(hs, np.array([1e-2, 1e-4, 1e-6]))
    assert near[0] < near[1] < near[2]
    # growth like log(1/theta) near the origin
    assert (near[2] - near[1]) == pytest.approx(near[1] - near[0], rel=0.05)
    assert loglog_slope(hs, 1e4) == pytest.approx(-2.0, abs=1e-3)


def test_observation_marginal_cauchy_is_voigt():
    ys = np.array([0.0, 1.5, -6.0])
    assert observation_marginal(mixing_density("cauchy"), ys) == pytest.approx(special.voigt_profile(ys, 1.0, 1.0),
                                                                                rel=1e-8)


@pytest.mark.parametrize("name", ["cauchy", "student_t3", "horseshoe"])
def test_barndorff_ratio_tends_to_one(name):
    r = barndorff_tail_check(mixing_density(name), [1e2, 1e4])
    assert abs(r[1] - 1) < abs(r[0] - 1) + 1e-12
    assert r[1] == pytest.approx(1.0, abs=2e-3)


def test_barndorff_preconditions():
    with pytest.raises(ValueError):
        barndorff_tail_check(mixing_density("laplace"), [10.0])


def test_hill_matches_oracle_and_half_cauchy():
    x = np.abs(stats.cauchy.rvs(size=200_000, random_state=4))
    est = estimate_tail_index(x)
    assert est.alpha_hat == pytest.approx(hill(x, est.k_used), rel=1e-12)
    assert est.k_used == int(200_000 ** 0.6)
    assert abs(est.alpha_hat - 1.0) < 3 * est.stderr
    with pytest.raises(ValueError):
        estimate_tail_index(np.r_[x[:100], -1.0])
    with pytest.raises(ValueError):
        estimate_tail_index(x[:50], k=60)


@pytest.mark.parametrize("op,alphas,kw", [
    ("sum", (1.0, 3.0), {}),
    ("max", (1.0, 3.0), {}),
    ("product", (1.0, 3.0), {}),
    ("ratio", (3.0, None), {}),
    ("power", (1.0,), {"rho": 2.0}),
])
def test_closure_rules(op, alphas, kw):
    n = 400_000
    c = stats.cauchy.rvs(size=n, random_state=10)
    t3 = stats.t.rvs(3, size=n, random_state=11)
    u = stats.uniform.rvs(1.0, 1.0, size=n, random_state=12)
    samples = {"sum": (c, t3), "max": (np.abs(c), np.abs(t3)), "product": (c, t3), "ratio": (t3, u),
               "power": (c,)}[op]
    est = closure_check(op, *samples, alphas=[a for a in alphas if a is not None], **kw)
    assert est.agrees(3.0), (est.alpha_hat, est.predicted, est.stderr)


def test_closure_errors():
    with pytest.raises(ValueError):
        closure_check("power", np.ones(100))
    with pytest.raises(ValueError):
        closure_check("sum", np.ones(100), np.ones(50))
    with pytest.raises(ValueError):
        closure_check("difference", np.ones(100), np.ones(100))


@pytest.mark.parametrize("key,law", [
    ("laplace", stats.cauchy()),
    ("normal", stats.norm()),
    ("bessel3", stats.t(3)),
])
def test_dual_density_against_scipy(key, law):
    curve = dual_density(key, n_grid=20001, window=200.0)
    x = np.linspace(-30, 30, 601)
    # trapezoid cdf on a 0.02 grid: O(h^2) error
    assert np.max(np.abs(curve.cdf_at(x) - law.cdf(x))) < 3e-5
    assert curve.density()[10000] == pytest.approx(law.pdf(0.0), rel=1e-9)
    assert curve.lower_mass == pytest.approx(law.cdf(-200.0), rel=1e-6)


def test_dual_density_gamma_mgf_is_normalized():
    curve = dual_density("gamma2")
    # (1 - t)^-2 on (-inf, 0] integrates to exactly one
    assert curve.log_norm_const == pytest.approx(0.0, abs=1e-10)
    assert curve.lower_mass == pytest.approx(1 / 51, rel=1e-9)
    # trapezoid error h^2/12 * (f'(0) - f'(-50)) with h = 0.0125
    assert curve.trapezoid_mass() - 1.0 == pytest.approx(0.0125 ** 2 / 12 * 2, rel=0.01)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # quadrature nodes reach the mapped endpoint
def test_dual_density_rejects_non_integrable():
    with pytest.raises(ImproperMixingError):
        dual_density(lambda t: 1.0 / (1.0 + np.abs(t)))
    with pytest.raises(ImproperMixingError):
        dual_density(np.sin)


def test_dual_mixing_round_trip():
    v = np.geomspace(1e-3, 1e3, 50)
    lap, cau = mixing_density("laplace"), mixing_density("cauchy")
    d1 = dual_mixing_density(lap, 0.5)
    assert d1.log_pdf(v) == pytest.approx(cau.log_pdf(v), rel=1e-12)
    assert d1.tail_index_alpha == -0.5
    d2 = dual_mixing_density(d1, 1 / math.pi)
    assert d2.log_pdf(v) == pytest.approx(lap.log_pdf(v), rel=1e-12, abs=1e-12)
    with pytest.raises(ImproperMixingError):
        dual_mixing_density(lap, 0.4)
    with pytest.raises(ValueError):
        dual_mixing_density(mixing_density("horseshoe"), math.inf)


def test_duality_table_shape():
    assert len(DUALITY_TABLE) == 9
    assert sum(r.implemented for r in DUALITY_TABLE) == 4
