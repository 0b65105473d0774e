"""Regular variation: tail indices, normal scale mixtures and dual densities.

Mixing densities are densities of the variance ``v`` in
``theta | v ~ N(0, v)``. Every catalog entry is written as
``f(v) = exp(-psi_plus * v) v^(alpha - 1) L(v)`` with ``L`` tending to the
constant ``tail_constant`` as ``v`` grows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .analytics import DensityCurve
from .numerics.quadrature import QuadratureError, adaptive_quadrature

__all__ = [
    "MixingDensity",
    "TailIndexEstimate",
    "ImproperMixingError",
    "MIXING_CATALOG",
    "DUALITY_TABLE",
    "DualityRow",
    "CHARACTERISTIC_FUNCTIONS",
    "mixing_density",
    "estimate_tail_index",
    "closure_check",
    "scale_mixture_pdf",
    "observation_marginal",
    "barndorff_tail_check",
    "loglog_slope",
    "dual_density",
    "dual_mixing_density",
]

_LOG_2PI = math.log(2.0 * math.pi)


class ImproperMixingError(ArithmeticError):
    """A constructed density does not integrate to one."""


@dataclass(frozen=True)
class MixingDensity:
    """Density of the variance in a normal scale mixture."""

    log_pdf: Callable[[np.ndarray], np.ndarray]
    name: str
    tail_index_alpha: float | None = None
    psi_plus: float = 0.0
    tail_constant: float = 1.0
    # natural scale of v, used to place quadrature breakpoints
    scale: float = 1.0

    def pdf(self, v):
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            return np.exp(self.log_pdf(np.asarray(v, dtype=float)))

    def mass(self) -> float:
        g = _log_axis_integrand(self.log_pdf, 0.0)
        c = math.log(self.scale)
        pts = [c + d for d in (-20.0, -6.0, -2.0, 0.0, 2.0, 6.0, 20.0)]
        return _quad(g, -math.inf, math.inf, pts, rel_tol=1e-12)


def _log_axis_integrand(log_f, shift: float):
    """``f(e^s) e^s exp(-shift)`` as a function of ``s``."""
    def g(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
            v = np.exp(s)
            out = np.exp(np.asarray(log_f(np.where(v > 0, v, 1e-300)), dtype=float) + s - shift)
        return np.where((v > 0) & np.isfinite(out), out, 0.0)
    return g


def _quad(g, lo, hi, pts, rel_tol=1e-11, abs_tol=1e-300):
    try:
        return adaptive_quadrature(g, lo, hi, rel_tol=rel_tol, abs_tol=abs_tol,
                                   breakpoints=sorted(p for p in pts if lo < p < hi),
                                   max_intervals=4000).value
    except QuadratureError as exc:
        r = exc.result
        if r.abs_error_estimate <= 1e-9 * abs(r.value):
            return r.value
        raise


# ------------------------------------------------------------------ catalog

def _exp_half(v):
    return math.log(0.5) - 0.5 * v


def _inv_gamma(a: float, b: float):
    c = a * math.log(b) - math.lgamma(a)

    def f(v):
        return c - (a + 1.0) * np.log(v) - b / v
    return f


def _horseshoe_variance(v):
    # lambda ~ C+(0, 1), v = lambda^2
    return -math.log(math.pi) - 0.5 * np.log(v) - np.log1p(v)


def _t_constant(nu: float) -> float:
    a = 0.5 * nu
    return math.exp(a * math.log(a) - math.lgamma(a))


MIXING_CATALOG: dict[str, MixingDensity] = {
    "exponential": MixingDensity(_exp_half, "exponential", 1.0, 0.5, 0.5, 2.0),
    "cauchy": MixingDensity(_inv_gamma(0.5, 0.5), "cauchy", -0.5, 0.0, (2.0 * math.pi) ** -0.5, 1.0),
    "student_t3": MixingDensity(_inv_gamma(1.5, 1.5), "student_t3", -1.5, 0.0, _t_constant(3.0), 1.0),
    "horseshoe": MixingDensity(_horseshoe_variance, "horseshoe", -0.5, 0.0, 1.0 / math.pi, 1.0),
}
MIXING_CATALOG["laplace"] = MIXING_CATALOG["exponential"]


def mixing_density(name: str) -> MixingDensity:
    """Catalog lookup. ``laplace`` and ``exponential`` are the same entry."""
    try:
        return MIXING_CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown mixing density {name!r}; known: {sorted(MIXING_CATALOG)}") from None


@dataclass(frozen=True)
class DualityRow:
    density: str
    dual: str
    normal_scale_mixture: bool
    implemented: bool
    note: str = ""


DUALITY_TABLE: tuple[DualityRow, ...] = (
    DualityRow("exponential power (Laplace, normal)", "symmetric stable (Cauchy, normal)", True, True,
               "only the Laplace and normal members have closed forms here"),
    DualityRow("Bessel function density", "Student t", True, True,
               "characteristic function (1 + t^2/nu)^(-(nu+1)/2)"),
    DualityRow("gamma (shape a, rate l)", "x^(-a) on a truncated domain", False, True,
               "mgf (1 - t/l)^(-a)"),
    DualityRow("Laplace", "(1 + x^2)^(-1) e^(a x)", True, True, "a = 0 gives the Cauchy"),
    DualityRow("skew-Laplace I", "e^(a x) (c/(b + x) + 1/x)", False, False),
    DualityRow("skew-Laplace II", "c x/(x^2 + a^2) + 1/(b + x)", False, False),
    DualityRow("Frechet", "sqrt(x) K_{-1}(a sqrt(x))", False, False),
    DualityRow("inverse Gaussian", "x^(1/4) K_{-1/2}(a sqrt(x))", False, False),
    DualityRow("Linnik", "generalized Cauchy (1 + |x|^a)^(-b)", True, False),
)


def _cf_bessel(nu: float):
    return lambda t: (1.0 + np.asarray(t, dtype=float) ** 2 / nu) ** (-(nu + 1.0) / 2.0)


def _mgf_gamma(shape: float, rate: float):
    return lambda t: (1.0 - np.asarray(t, dtype=float) / rate) ** (-shape)


CHARACTERISTIC_FUNCTIONS: dict[str, tuple[Callable, tuple[float, float]]] = {
    "laplace": (lambda t: 1.0 / (1.0 + np.asarray(t, dtype=float) ** 2), (-math.inf, math.inf)),
    "normal": (lambda t: np.exp(-0.5 * np.asarray(t, dtype=float) ** 2), (-math.inf, math.inf)),
    "bessel3": (_cf_bessel(3.0), (-math.inf, math.inf)),
    # the truncation point t <= rate - 1 keeps the mgf integrable for shape > 1
    "gamma2": (_mgf_gamma(2.0, 1.0), (-math.inf, 0.0)),
}


# -------------------------------------------------------------- tail index

@dataclass(frozen=True)
class TailIndexEstimate:
    alpha_hat: float
    k_used: int
    stderr: float
    predicted: float | None = None

    def agrees(self, n_stderr: float = 2.0) -> bool:
        if self.predicted is None:
            raise ValueError("no predicted index")
        return abs(self.alpha_hat - self.predicted) <= n_stderr * self.stderr


def estimate_tail_index(sample, k: int | None = None) -> TailIndexEstimate:
    """Hill estimator from the ``k`` largest order statistics.

    ``alpha_hat = k / sum(log(X_(n-i+1) / X_(n-k)))`` for ``i = 1..k``, with
    standard error ``alpha_hat / sqrt(k)``. Default ``k = floor(n^0.6)``.
    """
    x = np.asarray(sample, dtype=float).ravel()
    n = x.size
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise ValueError("sample must be finite and strictly positive")
    if k is None:
        k = int(math.floor(n ** 0.6))
    if not 10 <= k < n:
        raise ValueError(f"need 10 <= k < n (k={k}, n={n})")
    xs = np.sort(x)
    top = xs[n - k:]
    thresh = xs[n - k - 1]
    logs = np.log(top) - math.log(thresh)
    total = math.fsum(logs.tolist())
    if total <= 0:
        raise ValueError("degenerate upper tail (ties at the threshold)")
    alpha = k / total
    return TailIndexEstimate(alpha, k, alpha / math.sqrt(k))


def closure_check(op: str, *samples, rho: float | None = None, alphas: Sequence[float] | None = None,
                  k: int | None = None) -> TailIndexEstimate:
    """Tail index of a combination of heavy-tailed samples.

    ``op`` is ``sum``, ``max``, ``product``, ``ratio`` or ``power`` (with
    ``rho``). The Hill estimator is applied to ``|result|``. When the
    component indices ``alphas`` are given the closure rule's prediction is
    attached: ``min`` of the indices for sum, max and product, the
    numerator's index for a ratio (denominator assumed to have a light left
    tail at zero) and ``alpha / rho`` for a power.
    """
    arrs = [np.asarray(s, dtype=float).ravel() for s in samples]
    if op == "power":
        if rho is None or rho <= 0 or len(arrs) != 1:
            raise ValueError("power needs one sample and rho > 0")
        out = np.abs(arrs[0]) ** rho
    else:
        if len(arrs) != 2 or arrs[0].shape != arrs[1].shape:
            raise ValueError(f"{op} needs two samples of equal length")
        a, b = arrs
        if op == "sum":
            out = a + b
        elif op == "max":
            out = np.maximum(a, b)
        elif op == "product":
            out = a * b
        elif op == "ratio":
            out = a / b
        else:
            raise ValueError(f"unknown operation {op!r}")
    out = np.abs(out)
    out = out[out > 0]
    est = estimate_tail_index(out, k)
    predicted = None
    if alphas is not None:
        if op == "power":
            predicted = alphas[0] / rho
        elif op == "ratio":
            predicted = alphas[0]
        else:
            predicted = min(alphas)
    return TailIndexEstimate(est.alpha_hat, est.k_used, est.stderr, predicted)


# ------------------------------------------------------------ scale mixtures

def _mixture_value(mix: MixingDensity, theta: float, noise_var: float) -> float:
    # integral over s = log v of N(theta; 0, v + noise_var) f(v) v
    t2 = theta * theta

    def log_h(v):
        w = v + noise_var
        return -0.5 * (_LOG_2PI + np.log(w)) - t2 / (2.0 * w) + mix.log_pdf(v)

    centers = [math.log(mix.scale)]
    if t2 > 0:
        centers.append(math.log(t2))
    probe = np.linspace(min(centers) - 30.0, max(centers) + 30.0, 601)
    with np.errstate(all="ignore"):
        vals = log_h(np.exp(probe)) + probe
    vals = np.where(np.isfinite(vals), vals, -np.inf)
    shift = float(np.max(vals))
    s_peak = float(probe[int(np.argmax(vals))])
    pts = [s_peak + d for d in (-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0)]
    pts += [c + d for c in centers for d in (-3.0, 0.0, 3.0)]
    val = _quad(_log_axis_integrand(log_h, shift), -math.inf, math.inf, pts)
    return val * math.exp(shift)


def scale_mixture_pdf(mix: MixingDensity, theta):
    """``p(theta) = int (2 pi v)^(-1/2) exp(-theta^2 / (2v)) f(v) dv`` by quadrature.

    Returns ``inf`` at ``theta = 0`` when the integral diverges there.
    """
    th = np.asarray(theta, dtype=float)
    out = np.empty(th.shape)
    for idx, t in np.ndenumerate(th):
        try:
            out[idx] = _mixture_value(mix, float(t), 0.0)
        except QuadratureError:
            if t == 0.0:
                out[idx] = math.inf
            else:
                raise
    return float(out) if th.ndim == 0 else out


def observation_marginal(mix: MixingDensity, y):
    """Marginal density of ``y = theta + N(0, 1)`` with ``theta`` from the mixture."""
    ya = np.asarray(y, dtype=float)
    out = np.array([_mixture_value(mix, float(t), 1.0) for t in ya.ravel()]).reshape(ya.shape)
    return float(out) if ya.ndim == 0 else out


def barndorff_tail_check(mix: MixingDensity, theta_grid) -> np.ndarray:
    """Ratio of ``p(theta)`` to its polynomial tail asymptote.

    For ``f(v) ~ L v^(alpha-1)`` with ``alpha < 1/2`` the asymptote is
    ``(2 pi)^(-1/2) 2^(1/2-alpha) Gamma(1/2-alpha) |theta|^(2 alpha-1) L``.
    """
    a = mix.tail_index_alpha
    if mix.psi_plus != 0.0:
        raise ValueError("the polynomial asymptote needs psi_plus = 0")
    if a is None or not a < 0.5:
        raise ValueError(f"need tail index alpha < 1/2, got {a}")
    th = np.abs(np.asarray(theta_grid, dtype=float))
    log_c = -0.5 * _LOG_2PI + (0.5 - a) * math.log(2.0) + math.lgamma(0.5 - a) + math.log(mix.tail_constant)
    asym = np.exp(log_c + (2.0 * a - 1.0) * np.log(th))
    return np.asarray(scale_mixture_pdf(mix, th)) / asym


def loglog_slope(mix: MixingDensity, theta: float, rel_step: float = 1e-3) -> float:
    """Central-difference slope of ``log p`` against ``log |theta|``."""
    h = rel_step
    up = scale_mixture_pdf(mix, theta * math.exp(h))
    dn = scale_mixture_pdf(mix, theta * math.exp(-h))
    return (math.log(up) - math.log(dn)) / (2.0 * h)


# -------------------------------------------------------------------- duals

def dual_density(phi, domain: tuple[float, float] | None = None, grid=None,
                 n_grid: int = 4001, window: float = 50.0) -> DensityCurve:
    """Good's dual: the density proportional to ``phi`` on ``domain``.

    ``phi`` may also be a key of ``CHARACTERISTIC_FUNCTIONS``. The normalizer
    ``C = int_domain phi`` is computed by quadrature; the returned curve lives
    on a linear grid (default: ``n_grid`` points over the domain clipped to
    ``[-window, window]``) and carries the masses beyond both grid ends.

    Raises
    ------
    ImproperMixingError
        If ``C`` is not finite or ``phi`` is negative on the grid.
    """
    if isinstance(phi, str):
        phi, default_domain = CHARACTERISTIC_FUNCTIONS[phi]
        domain = domain or default_domain
    if domain is None:
        domain = (-math.inf, math.inf)
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise ValueError("empty domain")

    def f(t):
        return np.asarray(phi(np.asarray(t, dtype=float)), dtype=float)

    if grid is None:
        glo = max(lo, -window)
        ghi = min(hi, window)
        if not glo < ghi:
            raise ValueError("grid window does not meet the domain")
        grid = np.linspace(glo, ghi, n_grid)
    grid = np.asarray(grid, dtype=float)
    vals = f(grid)
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ImproperMixingError("phi must be finite and non-negative on the domain")

    def piece(a, b):
        if not a < b:
            return 0.0
        pts = [x for x in (-10.0, -1.0, 0.0, 1.0, 10.0) if a < x < b]
        try:
            return adaptive_quadrature(f, a, b, rel_tol=1e-13, abs_tol=1e-15, breakpoints=pts,
                                       max_intervals=4000).value
        except QuadratureError as exc:
            raise ImproperMixingError(f"normalizing integral diverges: {exc}") from exc

    below = piece(lo, grid[0])
    inside = piece(grid[0], grid[-1])
    above = piece(grid[-1], hi)
    C = below + inside + above
    if not (math.isfinite(C) and C > 0):
        raise ImproperMixingError("normalizing integral is not finite")
    with np.errstate(divide="ignore"):
        logv = np.log(vals)
    return DensityCurve(grid, logv, True, math.log(C), below / C, above / C, log_spaced=False)


def dual_mixing_density(f: MixingDensity, p_at_zero: float, check_mass: bool = True,
                        name: str | None = None) -> MixingDensity:
    """Mixing density of the dual: ``(2 pi)^(-1/2) p(0)^(-1) v^(-3/2) f(1/v)``.

    Raises
    ------
    ImproperMixingError
        When ``check_mass`` is set and the result does not integrate to
        ``1 +- 1e-6``.
    """
    if not (p_at_zero > 0 and math.isfinite(p_at_zero)):
        raise ValueError("p_at_zero must be positive and finite")
    c = -0.5 * _LOG_2PI - math.log(p_at_zero)
    base = f.log_pdf

    def log_pdf(v):
        v = np.asarray(v, dtype=float)
        return c - 1.5 * np.log(v) + base(1.0 / v)

    alpha = None
    if f.psi_plus > 0:
        # f(1/v) ~ exp(-psi_plus / v): the dual has a polynomial tail v^(-3/2) f(0+)
        alpha = -0.5
    out = MixingDensity(log_pdf, name or f"dual({f.name})", alpha, 0.0,
                        math.exp(c + float(base(np.array(1e-300)))) if f.psi_plus > 0 else 1.0,
                        1.0 / f.scale)
    if check_mass:
        m = out.mass()
        if not abs(m - 1.0) <= 1e-6:
            raise ImproperMixingError(f"dual mixing density has mass {m:.9g}, not 1")
    return out
