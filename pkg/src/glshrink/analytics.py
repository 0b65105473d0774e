"""Densities and concentration checks for the sum-of-squares parameter.

With ``Z = sum(y_i**2)`` and ``psi = sum(theta_i**2)``, ``Z`` is non-central
chi-squared with ``p`` degrees of freedom and non-centrality ``psi``. This
module evaluates that likelihood exactly and through its large-``Z``
approximation, forms the induced posteriors for ``psi`` under the horseshoe,
normal and reference priors, and checks the associated tail-mass bounds by
quadrature.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .numerics.quadrature import QuadratureError, adaptive_quadrature
from .numerics.special import log_bessel_i

__all__ = [
    "ImproperPosteriorError",
    "PreconditionError",
    "DensityCurve",
    "PsiPosterior",
    "BoundCheck",
    "noncentral_chisq_logpdf",
    "lik_approx_logpdf",
    "psi_prior_logpdf",
    "psi_posterior",
    "verify_hs_bound",
    "verify_normal_bound",
    "karamata_check",
    "tweedie_posterior_mean",
]

_LOG2 = math.log(2.0)
_LOG_2SQRT2PI = math.log(2.0 * math.sqrt(2.0 * math.pi))


class ImproperPosteriorError(ArithmeticError):
    """The unnormalized posterior does not integrate to a finite value."""


class PreconditionError(ValueError):
    """Inputs violate the hypothesis of the bound being checked."""


# ---------------------------------------------------------------- likelihoods

def _log_i_minus_half(x: float) -> float:
    # I_{-1/2}(x) = sqrt(2 / (pi x)) cosh(x)
    return 0.5 * math.log(2.0 / (math.pi * x)) + x + math.log1p(math.exp(-2.0 * x)) - _LOG2


def _ncx2_scalar(z: float, p: int, psi: float) -> float:
    half_p = 0.5 * p
    if psi == 0.0:
        return (half_p - 1.0) * math.log(z) - 0.5 * z - half_p * _LOG2 - math.lgamma(half_p)
    nu = half_p - 1.0
    x = math.sqrt(z * psi)
    log_i = _log_i_minus_half(x) if nu < 0 else log_bessel_i(nu, x)
    return -_LOG2 - 0.5 * (z + psi) + 0.5 * nu * (math.log(z) - math.log(psi)) + log_i


def noncentral_chisq_logpdf(z, p: int, psi):
    """Log density of the non-central chi-squared law at ``z``.

    Parameters
    ----------
    z : float
        Observation, ``z > 0``.
    p : int
        Degrees of freedom, ``p >= 1``.
    psi : float or array_like
        Non-centrality, ``psi >= 0``; ``psi = 0`` gives the central law.
    """
    z = float(z)
    if z <= 0 or p < 1:
        raise ValueError("require z > 0 and p >= 1")
    if np.ndim(psi) == 0:
        return _ncx2_scalar(z, int(p), float(psi))
    arr = np.asarray(psi, dtype=float)
    return np.array([_ncx2_scalar(z, int(p), float(v)) for v in arr.ravel()]).reshape(arr.shape)


def lik_approx_logpdf(z, p: int, psi):
    """Large-``z`` approximation to the non-central chi-squared log density:

    ``log[(2 sqrt(2 pi))^-1 exp(-(sqrt z - sqrt psi)^2 / 2) z^((p-3)/4) psi^(-(p-1)/4)]``.
    Returns ``-inf`` at ``psi = 0`` where the approximation is undefined.
    """
    z = float(z)
    psi_arr = np.asarray(psi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (-_LOG_2SQRT2PI - 0.5 * (math.sqrt(z) - np.sqrt(psi_arr)) ** 2
               + 0.25 * (p - 3) * math.log(z) - 0.25 * (p - 1) * np.log(psi_arr))
    out = np.where(psi_arr > 0, out, -np.inf)
    return float(out) if np.ndim(psi) == 0 else out


# ---------------------------------------------------------------------- priors

_NORMAL_ALIASES = ("normal", "normal_gamma", "vague_normal")


def _canonical_kind(kind: str) -> str:
    if kind in _NORMAL_ALIASES:
        return "normal"
    if kind in ("horseshoe", "reference"):
        return kind
    raise ValueError(f"unknown prior kind {kind!r}")


def psi_prior_logpdf(prior_kind: str, psi, p: int, tau2: float | None = None):
    """Unnormalized log prior density of ``psi``.

    ``horseshoe``: ``psi^(-1/2) (psi + p)^(-1)``; ``normal`` (alias
    ``normal_gamma``): ``tau^-p psi^(p/2 - 1) exp(-psi / (2 tau^2))``, the law
    of ``tau^2`` times a chi-squared; ``reference``: ``psi^(-(p-1)/2)``.
    """
    kind = _canonical_kind(prior_kind)
    psi_arr = np.asarray(psi, dtype=float)
    if np.any(psi_arr <= 0):
        raise ValueError("psi must be positive")
    if kind == "horseshoe":
        out = -0.5 * np.log(psi_arr) - np.log(psi_arr + p)
    elif kind == "normal":
        if tau2 is None or tau2 <= 0:
            raise ValueError("normal prior needs tau2 > 0")
        out = -0.5 * p * math.log(tau2) + (0.5 * p - 1.0) * np.log(psi_arr) - psi_arr / (2.0 * tau2)
    else:
        out = -0.5 * (p - 1) * np.log(psi_arr)
    return float(out) if np.ndim(psi) == 0 else out


# ----------------------------------------------------------------- curves

@dataclass(frozen=True, eq=False)
class DensityCurve:
    """Grid-evaluated density.

    ``log_values`` are unnormalized log densities; subtracting
    ``log_norm_const`` normalizes them when ``normalized`` is true. A
    log-spaced grid (the default, for densities on ``(0, inf)``) is
    integrated in ``s = log(x)``; ``log_spaced=False`` integrates in ``x``.
    ``lower_mass`` and ``upper_mass`` are the normalized masses outside the
    grid, when known.
    """

    grid: np.ndarray
    log_values: np.ndarray
    normalized: bool = False
    log_norm_const: float = 0.0
    lower_mass: float = 0.0
    upper_mass: float = 0.0
    log_spaced: bool = True
    _cdf: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        lv = np.asarray(self.log_values, dtype=float)
        if g.ndim != 1 or g.shape != lv.shape or g.size < 2:
            raise ValueError("grid and log_values must be matching 1-D arrays")
        if np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        if self.log_spaced and g[0] <= 0:
            raise ValueError("a log-spaced grid must be positive")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "log_values", lv)

    def density(self) -> np.ndarray:
        return np.exp(self.log_values - self.log_norm_const)

    def _axis(self) -> np.ndarray:
        return np.log(self.grid) if self.log_spaced else self.grid

    def _integrand(self) -> np.ndarray:
        # density with respect to the integration axis
        if self.log_spaced:
            return np.exp(self.log_values - self.log_norm_const + np.log(self.grid))
        return self.density()

    def trapezoid_mass(self) -> float:
        f = self._integrand()
        return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(self._axis()))) + self.lower_mass + self.upper_mass

    def cdf(self) -> np.ndarray:
        if self._cdf is None:
            f = self._integrand()
            c = np.concatenate(([0.0], np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(self._axis()))))
            c = c + self.lower_mass
            c = c / (c[-1] + self.upper_mass)
            object.__setattr__(self, "_cdf", c)
        return self._cdf

    def cdf_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        c = self.cdf()
        if self.log_spaced:
            ax = np.log(np.maximum(x, self.grid[0]))
        else:
            ax = x
        return np.interp(ax, self._axis(), c, left=c[0], right=1.0)

    def quantile(self, q):
        v = np.interp(q, self.cdf(), self._axis())
        return np.exp(v) if self.log_spaced else v

    def to_csv(self, x_name: str = "psi") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([x_name, "log_density"])
        for x, lv in zip(self.grid, self.log_values - self.log_norm_const):
            w.writerow([repr(float(x)), repr(float(lv))])
        return buf.getvalue()


def _log_slope_at_zero(logf, s1: float = -400.0, s2: float = -300.0) -> float:
    # slope in s = log psi of log(f(e^s) e^s); integrable at 0 only if positive
    return ((logf(math.exp(s2)) + s2) - (logf(math.exp(s1)) + s1)) / (s2 - s1)


@dataclass(frozen=True, eq=False)
class PsiPosterior:
    """Posterior of ``psi`` given ``Z`` for one prior.

    ``likelihood`` is ``"approx"`` (the large-``Z`` closed forms, evaluated
    exactly as written) or ``"exact"`` (non-central chi-squared likelihood
    times the prior from ``psi_prior_logpdf``; the reference kind then uses
    ``psi^(-1/2)``, see ``reference_psi_sample``).
    """

    prior_kind: str
    p: int
    Z: float
    tau2: float | None
    likelihood: str
    curve: DensityCurve
    log_norm_const: float

    def logpdf_unnormalized(self, psi):
        return _posterior_logf(self.prior_kind, self.p, self.Z, self.tau2, self.likelihood)(psi)

    def logpdf(self, psi):
        return self.logpdf_unnormalized(psi) - self.log_norm_const

    def _integrate(self, weight, lo: float, hi: float) -> float:
        logf = _posterior_logf(self.prior_kind, self.p, self.Z, self.tau2, self.likelihood)
        g = _s_integrand(logf, self.log_norm_const, weight)

        slo = -math.inf if lo <= 0 else math.log(lo)
        shi = math.inf if math.isinf(hi) else math.log(hi)
        if slo >= shi:
            return 0.0
        return _integrate_pieces(g, slo, shi, _s_breaks(self.Z, slo, shi))

    def mean(self) -> float:
        return self._integrate(lambda x: x, 0.0, math.inf)

    def interval_probability(self, lo: float, hi: float) -> float:
        return self._integrate(lambda x: np.ones_like(x), lo, hi)

    def quantile(self, q):
        return self.curve.quantile(q)

    def cdf(self, x):
        return self.curve.cdf_at(x)

    def local_modes(self) -> np.ndarray:
        """Interior local maxima of the density on the grid."""
        lv = self.curve.log_values
        idx = np.where((lv[1:-1] > lv[:-2]) & (lv[1:-1] >= lv[2:]))[0] + 1
        return self.curve.grid[idx]


def _posterior_logf(kind: str, p: int, Z: float, tau2, likelihood: str):
    kind = _canonical_kind(kind)
    sz = math.sqrt(Z)
    if likelihood == "approx":
        if kind == "horseshoe":
            def f(psi):
                psi = np.asarray(psi, dtype=float)
                return -0.5 * (sz - np.sqrt(psi)) ** 2 - 0.25 * (p + 1) * np.log(psi) - np.log(psi + p)
        elif kind == "normal":
            def f(psi):
                psi = np.asarray(psi, dtype=float)
                return -0.5 * (sz - np.sqrt(psi)) ** 2 + 0.25 * (p - 3) * np.log(psi) - psi / (2.0 * tau2)
        else:
            def f(psi):
                psi = np.asarray(psi, dtype=float)
                return lik_approx_logpdf(Z, p, psi) - 0.5 * np.log(psi)
        return f
    if likelihood != "exact":
        raise ValueError("likelihood must be 'approx' or 'exact'")

    def f(psi):
        psi = np.asarray(psi, dtype=float)
        lik = noncentral_chisq_logpdf(Z, p, psi)
        if kind == "reference":
            return lik - 0.5 * np.log(psi)
        return lik + psi_prior_logpdf(kind, psi, p, tau2)
    return f


def _s_integrand(logf, shift: float, weight=None):
    """``f(e^s) e^s`` (times ``weight(e^s)``), scaled by ``exp(-shift)``; 0 where e^s underflows."""
    def g(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            x = np.exp(s)
            out = np.exp(np.asarray(logf(np.where(x > 0, x, 1e-300)), dtype=float) - shift + s)
            if weight is not None:
                out = out * weight(x)
        return np.where((x > 0) & np.isfinite(out), out, 0.0)
    return g


def _s_breaks(Z: float, lo: float, hi: float) -> list:
    # breakpoints in s = log psi dense enough that no piece can hide the bulk
    lz = math.log(Z)
    cand = [lz + d for d in (-8.0, -4.0, -2.0, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0, 4.0)]
    cand += [-300.0, -100.0, -30.0, -10.0, -3.0, 0.0]
    return sorted({c for c in cand if lo < c < hi})


def _integrate_pieces(g, lo: float, hi: float, pts) -> float:
    try:
        return adaptive_quadrature(g, lo, hi, rel_tol=1e-10, abs_tol=1e-14, breakpoints=pts,
                                   max_intervals=3000).value
    except QuadratureError as exc:
        if exc.result.abs_error_estimate <= 1e-7 * max(1.0, abs(exc.result.value)):
            return exc.result.value
        raise


def psi_posterior(prior_kind: str, p: int, Z: float, tau2: float | None = None,
                  likelihood: str = "approx", n_grid: int = 4096) -> PsiPosterior:
    """Normalized posterior of ``psi`` given ``Z = sum(y**2)``.

    Raises
    ------
    ImproperPosteriorError
        When the unnormalized density is not integrable (for the horseshoe
        closed form this happens for every ``p >= 3``, because of the
        ``psi^(-(p+1)/4)`` factor at the origin).
    """
    if not Z > 0:
        raise ValueError("Z must be positive")
    kind = _canonical_kind(prior_kind)
    if kind == "normal" and (tau2 is None or tau2 <= 0):
        raise ValueError("normal prior needs tau2 > 0")
    logf = _posterior_logf(kind, p, Z, tau2, likelihood)

    slope0 = _log_slope_at_zero(lambda x: float(logf(x)))
    if not slope0 > 1e-3:
        raise ImproperPosteriorError(
            f"{kind} posterior ({likelihood} likelihood, p={p}, Z={Z}) is not integrable at psi = 0 "
            f"(log-density slope {slope0:.3g} in log psi)")

    # bracket the bulk: the likelihood pins sqrt(psi) near sqrt(Z) with unit spread
    hi = (math.sqrt(Z) + 40.0) ** 2 + 4.0 * p
    if kind == "normal":
        hi = max(hi, 2.0 * (Z + p) + 50.0 * math.sqrt(2.0 * p + 4.0 * Z))
    ref = float(np.max(logf(np.geomspace(1e-3 * Z, hi, 512))))
    while float(logf(hi)) > ref - 60.0:
        hi *= 2.0
    bulk_lo = max(1e-4 * Z, (max(0.0, math.sqrt(Z) - 40.0)) ** 2)
    lo = min(1e-24 * Z, bulk_lo)
    n_low = n_grid // 4
    if bulk_lo > lo * 1.0001:
        grid = np.concatenate((np.geomspace(lo, bulk_lo, n_low, endpoint=False),
                               np.geomspace(bulk_lo, hi, n_grid - n_low)))
    else:
        grid = np.geomspace(lo, hi, n_grid)
    log_values = np.asarray(logf(grid), dtype=float)
    shift = float(np.max(log_values))

    g = _s_integrand(logf, shift)
    mass = _integrate_pieces(g, -math.inf, math.log(hi), _s_breaks(Z, -math.inf, math.log(hi)))
    if not (mass > 0 and math.isfinite(mass)):
        raise ImproperPosteriorError("normalizing integral is not finite")
    log_norm = shift + math.log(mass)
    # mass below the first grid point, from the local power law there
    k = (log_values[1] - log_values[0]) / math.log(grid[1] / grid[0])
    lower = math.exp(log_values[0] - log_norm) * grid[0] / (k + 1.0) if k > -1.0 else 0.0
    curve = DensityCurve(grid, log_values, True, log_norm, lower_mass=lower)
    return PsiPosterior(kind, int(p), float(Z), tau2, likelihood, curve, log_norm)


# ----------------------------------------------------------------- bounds

@dataclass(frozen=True)
class BoundCheck:
    """Outcome of a tail-mass bound check.

    ``prob`` is the posterior probability named by the bound, computed from
    the closed-form posterior; ``prob_exact`` is the same probability under
    the exact non-central chi-squared likelihood for comparison.
    """

    name: str
    p: int
    Z: float
    prob: float
    bound: float
    holds: bool
    prob_exact: float | None = None
    improper: bool = False
    tau2: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def verify_hs_bound(p: int, Z: float) -> BoundCheck:
    """Check ``P(psi >= Z | Z) <= 4 / (p + 1)`` under the horseshoe closed form.

    For ``p >= 3`` the closed-form density has a non-integrable pole at 0, so
    no posterior probability exists: ``prob`` is NaN, ``improper`` is set and
    the check does not hold. ``prob_exact`` is the same tail probability
    under the exact non-central chi-squared likelihood, for reference.
    """
    if p < 1 or not Z > 0:
        raise ValueError("require p >= 1 and Z > 0")
    bound = 4.0 / (p + 1)
    notes = [] if Z >= p else ["Z < p: outside the large-Z regime"]
    improper = False
    try:
        post = psi_posterior("horseshoe", p, Z)
        prob = post.interval_probability(Z, math.inf)
    except ImproperPosteriorError:
        improper = True
        prob = math.nan
        notes.append("closed-form posterior is not integrable at psi = 0; tail probability undefined")
    exact = psi_posterior("horseshoe", p, Z, likelihood="exact")
    prob_exact = exact.interval_probability(Z, math.inf)
    notes.append(f"exact-likelihood tail probability {prob_exact:.4g} "
                 f"({'within' if prob_exact <= bound else 'above'} the bound)")
    return BoundCheck("hs_bound", int(p), float(Z), float(prob), bound, bool(prob <= bound),
                      float(prob_exact), improper, None, "; ".join(notes))


def verify_normal_bound(p: int, Z: float, tau2: float) -> BoundCheck:
    """Check ``P(psi <= Z | Z) <= Gamma((p+5)/4)^-1 (Z / (2 tau2))^((p+1)/4)``.

    Raises
    ------
    PreconditionError
        If ``Z > 2 * tau2``.
    """
    if Z > 2.0 * tau2:
        raise PreconditionError(f"Z = {Z} exceeds 2 tau^2 = {2.0 * tau2}")
    log_bound = 0.25 * (p + 1) * math.log(Z / (2.0 * tau2)) - math.lgamma(0.25 * (p + 5))
    bound = math.exp(log_bound)
    post = psi_posterior("normal", p, Z, tau2)
    prob = post.interval_probability(0.0, Z)
    exact = psi_posterior("normal", p, Z, tau2, likelihood="exact")
    prob_exact = exact.interval_probability(0.0, Z)
    return BoundCheck("normal_bound", int(p), float(Z), float(prob), bound, bool(prob <= bound),
                      float(prob_exact), False, float(tau2))


def karamata_check(p: int, Z: float) -> dict:
    """Compare ``int_Z^inf psi^(-(p+1)/4 - 1) psi/(psi+p) dpsi`` with its
    regular-variation asymptote ``(4/(p+1)) Z^(-(p-3)/4) / (Z+p)``."""
    a = 0.25 * (p + 1)
    log_asym = math.log(4.0 / (p + 1)) - 0.25 * (p - 3) * math.log(Z) - math.log(Z + p)

    def g(s):
        # integrand in s = log psi, scaled by exp(-log_asym)
        with np.errstate(over="ignore"):
            x = np.exp(s)
        return np.exp(-a * s - np.log(x + p) + s - log_asym)

    val = _integrate_pieces(g, math.log(Z), math.inf, [])
    return {"p": int(p), "Z": float(Z), "integral": math.exp(log_asym) * val,
            "asymptote": math.exp(log_asym), "ratio": val}


# ----------------------------------------------------------------- Tweedie

def tweedie_posterior_mean(marginal, y: float) -> float:
    """``y + d/dy log m(y)`` by a central difference with ``h = 1e-4 max(1, |y|)``.

    ``marginal`` is a callable returning the marginal density ``m`` of the
    observation (for instance ``regvar.observation_marginal(mix)``).
    """
    h = 1e-4 * max(1.0, abs(y))
    mp = float(marginal(y + h))
    mm = float(marginal(y - h))
    if not (mp > 0 and mm > 0):
        raise ArithmeticError(f"marginal density underflows near y = {y}")
    return y + (math.log(mp) - math.log(mm)) / (2.0 * h)
