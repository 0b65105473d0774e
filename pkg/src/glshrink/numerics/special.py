"""Special functions needed by the non-central chi-squared machinery."""
from __future__ import annotations

import math

import numpy as np

__all__ = ["log_bessel_i", "reg_lower_inc_gamma", "log_reg_lower_inc_gamma"]

_LOG_2PI = math.log(2.0 * math.pi)


def _log_bessel_series(nu: float, z: float) -> float:
    # ascending series, all terms positive: no cancellation, only rounding
    half_z = 0.5 * z
    k_peak = 0.5 * (-nu + math.sqrt(nu * nu + z * z))
    n_terms = int(math.ceil(k_peak + 12.0 * math.sqrt(k_peak + 1.0) + 60.0))
    k = np.arange(1, n_terms + 1, dtype=float)
    log_ratio = 2.0 * math.log(half_z) - np.log(k) - np.log(nu + k)
    log_terms = np.concatenate(([0.0], np.cumsum(log_ratio)))
    top = log_terms.max()
    log_sum = top + math.log(math.fsum(np.exp(log_terms - top)))
    return nu * math.log(half_z) - math.lgamma(nu + 1.0) + log_sum


def _log_bessel_hankel(nu: float, z: float) -> float:
    # large-argument expansion; stop at the smallest term
    mu = 4.0 * nu * nu
    total = 1.0
    term = 1.0
    prev = math.inf
    for k in range(1, 500):
        term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        a = abs(term)
        if a >= prev:
            break
        total += term
        if a < 1e-17 * abs(total):
            break
        prev = a
    return z - 0.5 * (_LOG_2PI + math.log(z)) + math.log(total)


def _log_bessel_scalar(nu: float, z: float) -> float:
    if nu < 0:
        raise ValueError("nu must be >= 0")
    if z < 0:
        raise ValueError("z must be >= 0")
    if z == 0.0:
        return 0.0 if nu == 0.0 else -math.inf
    if math.isinf(z):
        return math.inf
    if z > max(20.0, 0.5 * nu * nu):
        return _log_bessel_hankel(nu, z)
    return _log_bessel_series(nu, z)


def log_bessel_i(nu, z):
    """Logarithm of the modified Bessel function of the first kind.

    Uses the ascending series (summed in log space) when
    ``z <= max(20, nu**2 / 2)`` and the large-argument Hankel expansion
    otherwise. Relative accuracy of ``I_nu`` is better than 1e-10.

    Parameters
    ----------
    nu : float or array_like
        Order, ``nu >= 0``.
    z : float or array_like
        Argument, ``z >= 0``. ``z = 0`` with ``nu > 0`` returns ``-inf``.
    """
    if np.ndim(nu) == 0 and np.ndim(z) == 0:
        return _log_bessel_scalar(float(nu), float(z))
    nu_b, z_b = np.broadcast_arrays(np.asarray(nu, float), np.asarray(z, float))
    out = np.empty(nu_b.shape)
    for idx in np.ndindex(nu_b.shape):
        out[idx] = _log_bessel_scalar(float(nu_b[idx]), float(z_b[idx]))
    return out


def _log_gamma_p_series(a: float, x: float) -> float:
    # log P(a, x) from the series sum_n x^n / (a (a+1) ... (a+n))
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(10000):
        ap += 1.0
        term *= x / ap
        total += term
        if term < total * 1e-17:
            break
    return math.log(total) - x + a * math.log(x) - math.lgamma(a)


def _log_gamma_q_cf(a: float, x: float) -> float:
    # log Q(a, x) via the modified Lentz continued fraction
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.log(h) - x + a * math.log(x) - math.lgamma(a)


def log_reg_lower_inc_gamma(a: float, x: float) -> float:
    """``log(gamma(a, x) / Gamma(a))``, accurate deep in the lower tail."""
    if a <= 0:
        raise ValueError("a must be > 0")
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return -math.inf
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return _log_gamma_p_series(a, x)
    return math.log1p(-math.exp(_log_gamma_q_cf(a, x)))


def reg_lower_inc_gamma(a: float, x: float) -> float:
    """Regularized lower incomplete gamma ``P(a, x) = gamma(a, x) / Gamma(a)``."""
    return math.exp(log_reg_lower_inc_gamma(a, x))
