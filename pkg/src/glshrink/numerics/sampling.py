"""Elementary truncated and heavy-tailed draws."""
from __future__ import annotations

import math

__all__ = ["trunc_exp_from_uniform", "sample_trunc_exp", "sample_half_cauchy"]


def trunc_exp_from_uniform(rate: float, width: float, u: float) -> float:
    """Map a uniform ``u`` to a draw from ``exp(-rate * x)`` on ``(0, width)``.

    For ``rate >= 0`` this is the inverse CDF. A negative rate (increasing
    but proper density) is handled by reflecting ``x -> width - x``, so the
    accurate end of the ``log1p``/``expm1`` formula sits where the mass
    is; the result is then the quantile at ``1 - u``, which has the same
    law. The sampler kernels rely on this exact mapping.
    """
    if rate == 0.0:
        return u * width
    t = rate * width
    if abs(t) < 1e-8:
        # second-order series; log1p/expm1 lose everything near subnormal rates
        if t > 0.0:
            return u * width * (1.0 - 0.5 * t * (1.0 - u))
        return width - u * width * (1.0 + 0.5 * t * (1.0 - u))
    if rate > 0.0:
        return -math.log1p(u * math.expm1(-rate * width)) / rate
    r = -rate
    return width + math.log1p(u * math.expm1(-r * width)) / r


def _uniform(rng) -> float:
    # open interval (0, 1): Generator.random() can return exactly 0.0
    while True:
        u = float(rng.random())
        if u > 0.0:
            return u


def sample_trunc_exp(rate: float, lo: float, hi: float, rng) -> float:
    """Draw from ``rate * exp(-rate * x)`` restricted to ``(lo, hi)``.

    Parameters
    ----------
    rate : float
        Exponential rate. Zero gives the uniform limit on a finite interval;
        negative values are accepted for finite ``hi``.
    lo, hi : float
        Truncation bounds, ``lo < hi``; ``hi`` may be ``inf``.
    rng : RngStream or numpy.random.Generator

    Raises
    ------
    ValueError
        If ``lo >= hi`` or the restricted density cannot be normalized.
    """
    lo = float(lo)
    hi = float(hi)
    rate = float(rate)
    if not lo < hi:
        raise ValueError(f"empty truncation interval ({lo}, {hi})")
    if math.isinf(hi):
        if rate <= 0.0:
            raise ValueError("rate must be positive on an unbounded interval")
        return lo - math.log(_uniform(rng)) / rate
    x = lo + trunc_exp_from_uniform(rate, hi - lo, _uniform(rng))
    # guard against rounding onto the closed endpoints
    return min(max(x, math.nextafter(lo, hi)), math.nextafter(hi, lo))


def sample_half_cauchy(scale: float, rng) -> float:
    """One draw from the half-Cauchy ``C+(0, scale)`` via ``scale * tan(pi U / 2)``."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    # U in (0, 1] keeps the draw strictly positive; tan(pi/2) is finite in floating point
    u = 1.0 - float(rng.random())
    return scale * math.tan(0.5 * math.pi * u)
