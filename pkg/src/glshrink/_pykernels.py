"""Pure-Python sampler kernels.

Reference implementation of the hot loops; ``_ckernels.pyx`` mirrors it
operation for operation. Both consume raw 64-bit words from the same numpy
bit generator and use only correctly-ordered IEEE arithmetic plus libm calls,
so the two backends produce bitwise-identical draws. Edit them together.

Every random variate is built from ``_unif`` (one 64-bit word per call):
exponentials by ``-log U``, normals by Box-Muller (no caching), gammas by
Marsaglia-Tsang.
"""
from __future__ import annotations

import math

__all__ = [
    "hsplus_finv",
    "hsplus_f",
    "hs_sweep",
    "hs_chain",
    "hsplus_sweep",
    "hsplus_chain",
    "laplace_sweep",
    "laplace_chain",
    "global_chain",
    "normal_draws",
    "t_slice_chain",
    "t_n_params",
    "uniform_stream",
]

_TWO_PI = 6.283185307179586
_U_SCALE = 2.220446049250313e-16  # 2**-52
_ONE_MINUS = 0.9999999999999999  # largest double below 1
_TINY = 2.2250738585072014e-308
_EXP_MAX = 709.0
_SLICE_MAX_STEPS = 100


# --------------------------------------------------------------------------
# variates

def _unif(raw) -> float:
    return ((raw() >> 12) + 0.5) * _U_SCALE


def _exp_safe(x: float) -> float:
    return math.exp(x) if x < _EXP_MAX else math.inf


def _normal(raw) -> float:
    u1 = _unif(raw)
    u2 = _unif(raw)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


def _gamma(raw, a: float) -> float:
    if a < 1.0:
        g = _gamma(raw, a + 1.0)
        return g * math.exp(math.log(_unif(raw)) / a)
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = _normal(raw)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        uu = _unif(raw)
        if math.log(uu) < 0.5 * x * x + d - d * v + d * math.log(v):
            return d * v


def _trunc_exp(rate: float, width: float, u: float) -> float:
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


def _inv_gauss(raw, mu: float, shape: float) -> float:
    n = _normal(raw)
    r = mu * (n * n) / (2.0 * shape)
    if r > 1.0:
        q = r * math.sqrt(1.0 + 2.0 / r)
    else:
        q = math.sqrt(r * r + 2.0 * r)
    x = mu / (1.0 + r + q)
    if x < _TINY:
        x = _TINY
    if _unif(raw) <= mu / (mu + x):
        return x
    return mu * (mu / x)


def uniform_stream(bitgen, n: int) -> list:
    """``n`` kernel uniforms from ``bitgen`` (exposed for parity tests)."""
    raw = bitgen.random_raw
    return [_unif(raw) for _ in range(n)]


# --------------------------------------------------------------------------
# the map x -> log x / (x^2 - 1) used by the horseshoe+ slice and its inverse

def _g_of_t(t: float) -> float:
    # log x / (x^2 - 1) at x = exp(t)
    if abs(t) < 1e-4:
        return 0.5 * (1.0 - t + t * t / 3.0)
    if t > 0.0:
        return t * math.exp(-2.0 * t) / (-math.expm1(-2.0 * t))
    return t / math.expm1(2.0 * t)


def _log_g_of_t(t: float) -> float:
    if abs(t) < 1e-4:
        return math.log(0.5) - t - t * t / 6.0
    if t > 0.0:
        return math.log(t) - 2.0 * t - math.log(-math.expm1(-2.0 * t))
    return math.log(-t) - math.log(-math.expm1(2.0 * t))


def _dlog_g_of_t(t: float) -> float:
    if abs(t) < 1e-4:
        return -1.0 - t / 3.0
    if t > 0.0:
        return 1.0 / t - 2.0 / (-math.expm1(-2.0 * t))
    return 1.0 / t + 2.0 * math.exp(2.0 * t) / (-math.expm1(2.0 * t))


def hsplus_finv(x: float) -> float:
    """``log x / (x**2 - 1)``, continuous at ``x = 1`` where it equals 1/2."""
    if x <= 0.0:
        return math.inf
    if math.isinf(x):
        return 0.0
    return _g_of_t(math.log(x))


def _solve_log_g(log_u: float) -> float:
    # t with log g(t) = log_u; log g is strictly decreasing in t
    lo = -27.631021115928547  # log 1e-12
    hi = 27.631021115928547
    while _log_g_of_t(lo) - log_u <= 0.0:
        lo = 2.0 * lo
    while _log_g_of_t(hi) - log_u >= 0.0:
        hi = 2.0 * hi
    u = math.exp(log_u)
    if u >= 0.5:
        t = -u
    else:
        t = -0.5 * log_u
    if not (lo < t < hi):
        t = 0.5 * (lo + hi)
    for _ in range(200):
        h = _log_g_of_t(t) - log_u
        if h == 0.0:
            return t
        if h > 0.0:
            lo = t
        else:
            hi = t
        dh = _dlog_g_of_t(t)
        t_new = t - h / dh
        if not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-12 * max(1.0, abs(t)):
            return t_new
        t = t_new
    return t


def hsplus_f(u: float) -> float:
    """Inverse of ``hsplus_finv``: the ``x > 0`` with ``log x / (x**2 - 1) = u``."""
    if u <= 0.0:
        return math.inf
    if math.isinf(u):
        return 0.0
    return math.exp(_solve_log_g(math.log(u)))


# --------------------------------------------------------------------------
# univariate slice machinery

def _stepping_out(raw, ell, x0: float, lower: float, width: float) -> float:
    """Stepping-out / shrinkage slice update of ``x0`` for log density ``ell``
    restricted to ``x > lower`` (use ``-inf`` for no bound)."""
    level = ell(x0) + math.log(_unif(raw))
    left = x0 - width * _unif(raw)
    right = left + width
    j = int(_SLICE_MAX_STEPS * _unif(raw))
    k = _SLICE_MAX_STEPS - 1 - j
    while j > 0 and left > lower and ell(left) > level:
        left = left - width
        j -= 1
    while k > 0 and ell(right) > level:
        right = right + width
        k -= 1
    if left < lower:
        left = lower
    while True:
        x1 = left + _unif(raw) * (right - left)
        if x1 > lower and ell(x1) > level:
            return x1
        if x1 < x0:
            left = x1
        else:
            right = x1
        if right - left <= 0.0:
            return x0


def _phi_lambda(t: float, c: float) -> float:
    # log (1 + l^2)^(-1/2) exp(-c / (1 + l^2)) at t = log(1 + l^2)
    return -0.5 * t - c * math.exp(-t)


def _root_phi(c: float, level: float, a: float, b: float) -> float:
    """Root of phi(t) = level on [a, b] (phi - level changes sign there)."""
    ha = _phi_lambda(a, c) - level
    t = 0.5 * (a + b)
    for _ in range(100):
        h = _phi_lambda(t, c) - level
        if h == 0.0:
            return t
        if (h > 0.0) == (ha > 0.0):
            a = t
            ha = h
        else:
            b = t
        dh = -0.5 + c * math.exp(-t)
        t_new = t - h / dh if dh != 0.0 else 0.5 * (a + b)
        if not (min(a, b) < t_new < max(a, b)):
            t_new = 0.5 * (a + b)
        if abs(t_new - t) <= 1e-13 * max(1.0, abs(t)):
            return t_new
        t = t_new
    return t


def _slice_lambda(raw, lam0: float, c: float, bound: float) -> float:
    """Exact slice update of a horseshoe+ local scale on ``(0, bound)``."""
    if bound < 1e150:
        t_max = math.log1p(bound * bound)
    else:
        t_max = 2.0 * math.log(bound)
    t0 = math.log1p(lam0 * lam0)
    if t0 > t_max:
        t0 = t_max
    level = _phi_lambda(t0, c) + math.log(_unif(raw))
    if _phi_lambda(0.0, c) > level:
        lam_a = 0.0
    else:
        lam_a = math.sqrt(math.expm1(_root_phi(c, level, 0.0, t0)))
    if _phi_lambda(t_max, c) > level:
        lam_b = bound
    else:
        t_b = _root_phi(c, level, t0, t_max)
        lam_b = math.sqrt(math.expm1(t_b)) if t_b < _EXP_MAX else bound
        if lam_b > bound:
            lam_b = bound
    lam = lam_a + _unif(raw) * (lam_b - lam_a)
    if lam >= bound:
        lam = math.nextafter(bound, 0.0)
    if lam <= 0.0:
        lam = _TINY
    return lam


# --------------------------------------------------------------------------
# horseshoe (shrinkage-weight parameterization, stored as nu = 1 - kappa)

def hs_sweep(y, nu, omega, u, glob, eta2: float, tau2_fixed: float, bitgen) -> None:
    """One systematic scan in place. ``glob = [omega_global, tau2]``.

    ``tau2_fixed > 0`` pins tau^2 and skips the global updates.
    """
    raw = bitgen.random_raw
    p = len(y)
    tau2 = tau2_fixed if tau2_fixed > 0.0 else glob[1]
    tm1 = tau2 - 1.0
    acc = 0.0
    for i in range(p):
        yi = y[i]
        rate = -(omega[i] * tm1 + 0.5 * yi * yi)
        ui = u[i]
        width = 1.0 if ui <= 1.0 else 1.0 / (ui * ui)
        v = _trunc_exp(rate, width, _unif(raw))
        if v <= 0.0:
            v = _TINY
        if v >= 1.0:
            v = _ONE_MINUS
        om = -math.log(_unif(raw)) / (v + (1.0 - v) * tau2)
        ui = _unif(raw) / math.sqrt(v)
        nu[i] = v
        omega[i] = om
        u[i] = ui
        acc = acc + (1.0 - v) * om
    if tau2_fixed > 0.0:
        glob[1] = tau2_fixed
        return
    og = -math.log(_unif(raw)) / (tau2 + eta2)
    tau2 = _gamma(raw, 0.5 * (p + 1)) / (og + acc)
    if tau2 < _TINY:
        tau2 = _TINY
    glob[0] = og
    glob[1] = tau2


def hs_chain(y, eta2, tau2_fixed, n_warmup, n_keep, bitgen, theta_out, aux_out) -> None:
    p = len(y)
    nu = [0.5] * p
    omega = [1.0] * p
    u = [1.0] * p
    glob = [1.0, tau2_fixed if tau2_fixed > 0.0 else 1.0]
    raw = bitgen.random_raw
    for it in range(n_warmup + n_keep):
        hs_sweep(y, nu, omega, u, glob, eta2, tau2_fixed, bitgen)
        k = it - n_warmup
        if k >= 0:
            row = theta_out[k]
            for i in range(p):
                v = nu[i]
                row[i] = v * y[i] + math.sqrt(v) * _normal(raw)
            aux_out[k] = glob[1]


# --------------------------------------------------------------------------
# horseshoe+

def _ell_log_tau(sigma: float, p: int, eta: float) -> float:
    e = 2.0 * sigma - 2.0 * math.log(eta)
    if e > 35.0:
        sp = e
    else:
        sp = math.log1p(math.exp(e))
    return (1.0 - p) * sigma - sp


def _ell_log_tau_collapsed(sigma: float, lam, p: int, eta: float) -> float:
    # u integrated out: prod_i g(lambda_i / tau) / tau times the prior, on log tau
    acc = 0.0
    for li in lam:
        acc += _log_g_of_t(math.log(li) - sigma)
    return acc + _ell_log_tau(sigma, p, eta)


def hsplus_sweep(y, lam, u, tau_arr, eta: float, bitgen) -> None:
    """One scan in place: (u_i, lambda_i) for each i, then tau given u, then
    tau again with u integrated out, then a fresh u. ``tau_arr = [tau]``.

    The truncated tau step alone barely moves at large p (tau^-p pins it to
    its lower bound), so the collapsed step carries the global mixing.
    """
    raw = bitgen.random_raw
    p = len(y)
    tau = tau_arr[0]
    log_tau = math.log(tau)
    sig_lo = -math.inf
    for i in range(p):
        gi = _g_of_t(math.log(lam[i]) - log_tau)
        ui = _unif(raw) * gi
        fu = hsplus_f(ui)
        yi = y[i]
        bound = tau * fu
        if bound > 1e300:
            bound = 1e300
        li = _slice_lambda(raw, lam[i], 0.5 * yi * yi, bound)
        lam[i] = li
        u[i] = ui
        b = math.log(li) - math.log(fu)
        if b > sig_lo:
            sig_lo = b
    sigma = _stepping_out(raw, lambda s: _ell_log_tau(s, p, eta), log_tau, sig_lo, 1.0)
    sigma = _stepping_out(raw, lambda s: _ell_log_tau_collapsed(s, lam, p, eta), sigma, -math.inf, 1.0)
    for i in range(p):
        u[i] = _unif(raw) * _g_of_t(math.log(lam[i]) - sigma)
    tau_arr[0] = math.exp(sigma)


def hsplus_chain(y, eta, n_warmup, n_keep, bitgen, theta_out, aux_out) -> None:
    p = len(y)
    lam = [1.0] * p
    u = [0.25] * p
    tau_arr = [1.0]
    raw = bitgen.random_raw
    for it in range(n_warmup + n_keep):
        hsplus_sweep(y, lam, u, tau_arr, eta, bitgen)
        k = it - n_warmup
        if k >= 0:
            row = theta_out[k]
            for i in range(p):
                li = lam[i]
                v = li * li / (1.0 + li * li)
                row[i] = v * y[i] + math.sqrt(v) * _normal(raw)
            aux_out[k] = tau_arr[0]


# --------------------------------------------------------------------------
# Laplace (Bayesian-lasso hierarchy)

def laplace_sweep(y, theta, lam2, glob, xi: float, d2: float, bitgen) -> None:
    """theta | lambda^2, then 1/lambda^2 | theta, tau^2, then tau^2 | lambda^2.
    ``glob = [tau2]``."""
    raw = bitgen.random_raw
    p = len(y)
    tau2 = glob[0]
    for i in range(p):
        l2 = lam2[i]
        s = l2 / (1.0 + l2)
        theta[i] = y[i] * s + math.sqrt(s) * _normal(raw)
    shape = 1.0 / tau2
    tau = math.sqrt(tau2)
    acc = 0.0
    for i in range(p):
        a = abs(theta[i])
        if a == 0.0 or tau * a < 1e-280:
            # mu = infinity: the inverse-Gaussian degenerates to a Levy law
            n = _normal(raw)
            inv = shape / (n * n) if n != 0.0 else math.inf
        else:
            inv = _inv_gauss(raw, 1.0 / (tau * a), shape)
        if inv < _TINY:
            inv = _TINY
        l2 = 1.0 / inv
        if l2 < _TINY:
            l2 = _TINY
        lam2[i] = l2
        acc = acc + l2
    tau2 = (0.5 * acc + 0.5 * xi * d2) / _gamma(raw, p + 0.5 * xi)
    if tau2 < _TINY:
        tau2 = _TINY
    glob[0] = tau2


def laplace_chain(y, xi, d2, n_warmup, n_keep, bitgen, theta_out, aux_out) -> None:
    p = len(y)
    theta = [0.0] * p
    lam2 = [1.0] * p
    glob = [1.0]
    for it in range(n_warmup + n_keep):
        laplace_sweep(y, theta, lam2, glob, xi, d2, bitgen)
        k = it - n_warmup
        if k >= 0:
            row = theta_out[k]
            for i in range(p):
                row[i] = theta[i]
            aux_out[k] = glob[0]


# --------------------------------------------------------------------------
# pure global (collapsed: tau^2 | y, then theta | tau^2, y)

def _ell_global(sigma: float, p: int, ssq: float, eta2: float) -> float:
    if sigma > _EXP_MAX:
        return -math.inf
    e = math.exp(sigma)
    return (0.5 * sigma - math.log1p(e / eta2) - 0.5 * p * math.log1p(e)
            - ssq / (2.0 * (1.0 + e)))


def global_chain(y, eta2, n_warmup, n_keep, bitgen, theta_out, aux_out) -> None:
    raw = bitgen.random_raw
    p = len(y)
    ssq = 0.0
    for i in range(p):
        ssq = ssq + y[i] * y[i]
    sigma = 0.0
    for it in range(n_warmup + n_keep):
        sigma = _stepping_out(raw, lambda s: _ell_global(s, p, ssq, eta2), sigma, -math.inf, 1.0)
        k = it - n_warmup
        if k >= 0:
            tau2 = math.exp(sigma)
            s = tau2 / (1.0 + tau2)
            row = theta_out[k]
            for i in range(p):
                row[i] = y[i] * s + math.sqrt(s) * _normal(raw)
            aux_out[k] = tau2


def normal_draws(y, sigma2, n_keep, bitgen, theta_out, aux_out) -> None:
    raw = bitgen.random_raw
    p = len(y)
    c = sigma2 / (sigma2 + 1.0)
    sc = math.sqrt(c)
    for k in range(n_keep):
        row = theta_out[k]
        for i in range(p):
            row[i] = y[i] * c + sc * _normal(raw)
        aux_out[k] = sigma2


# --------------------------------------------------------------------------
# generic coordinate-wise slice sampler for Student-t observations
#
# prior codes and unconstrained layouts (p components):
#   0 normal        [theta]
#   1 horseshoe     [theta, log lambda, log tau]
#   2 horseshoe+    [theta, log lambda, log eta_i, log tau]
#   3 laplace       [theta, log tau^2]          (lambda integrated out)
#   4 pure local    [theta, log lambda]
#   5 pure global   [theta, log tau]

def t_n_params(code: int, p: int) -> int:
    return (p, 2 * p + 1, 3 * p + 1, p + 1, 2 * p, p + 1)[code]


def _softplus(x: float) -> float:
    return x if x > 35.0 else math.log1p(math.exp(x))


def _log_normal_scale(theta: float, log_sd: float) -> float:
    # log N(theta; 0, exp(2 log_sd)) up to a constant
    if theta == 0.0:
        return -log_sd
    return -log_sd - 0.5 * theta * theta * _exp_safe(-2.0 * log_sd)


def _log_half_cauchy_log(a: float, log_scale2: float) -> float:
    # log density of a = log x for x ~ C+(0, s), s^2 = exp(log_scale2)
    return a - _softplus(2.0 * a - log_scale2)


def _t_prior(code: int, x, p: int, hyp) -> float:
    # hyp = (log eta^2, sigma2, xi, d2)
    tot = 0.0
    if code == 0:
        inv = 1.0 / hyp[1]
        for j in range(p):
            tot = tot - 0.5 * x[j] * x[j] * inv
    elif code == 1:
        b = x[2 * p]
        for j in range(p):
            a = x[p + j]
            tot = tot + _log_normal_scale(x[j], a + b) + _log_half_cauchy_log(a, 0.0)
        tot = tot + _log_half_cauchy_log(b, hyp[0])
    elif code == 2:
        b = x[3 * p]
        for j in range(p):
            a = x[p + j]
            c = x[2 * p + j]
            tot = (tot + _log_normal_scale(x[j], a + c + b) + _log_half_cauchy_log(a, 0.0)
                   + _log_half_cauchy_log(c, 0.0))
        tot = tot + _log_half_cauchy_log(b, hyp[0])
    elif code == 3:
        s = x[p]
        if s < -2.0 * _EXP_MAX:
            return -math.inf
        inv_tau = _exp_safe(-0.5 * s)
        for j in range(p):
            tot = tot - 0.5 * s
            if x[j] != 0.0:
                tot = tot - abs(x[j]) * inv_tau
        tot = tot - 0.5 * hyp[2] * s - 0.5 * hyp[2] * hyp[3] * _exp_safe(-s)
    elif code == 4:
        for j in range(p):
            a = x[p + j]
            tot = tot + _log_normal_scale(x[j], a) + _log_half_cauchy_log(a, 0.0)
    else:
        b = x[p]
        for j in range(p):
            tot = tot + _log_normal_scale(x[j], b)
        tot = tot + _log_half_cauchy_log(b, hyp[0])
    return tot


def _t_loglik(col, theta: float, half_df1: float, df: float) -> float:
    tot = 0.0
    for yk in col:
        r = yk - theta
        tot = tot - half_df1 * math.log1p(r * r / df)
    return tot


def t_slice_chain(Y, df, code, hyp, n_warmup, n_keep, bitgen, theta_out, aux_out) -> None:
    """``Y`` is a K x p replicate matrix with Student-t(df) noise."""
    raw = bitgen.random_raw
    n_rep = len(Y)
    p = len(Y[0])
    cols = [[Y[k][j] for k in range(n_rep)] for j in range(p)]
    n_par = t_n_params(code, p)
    x = [0.0] * n_par
    for j in range(p):
        s = 0.0
        for k in range(n_rep):
            s = s + cols[j][k]
        x[j] = s / n_rep
    half_df1 = 0.5 * (df + 1.0)

    for it in range(n_warmup + n_keep):
        for m in range(n_par):
            def ell(v, m=m):
                old = x[m]
                x[m] = v
                val = _t_prior(code, x, p, hyp)
                if m < p:
                    val = val + _t_loglik(cols[m], v, half_df1, df)
                x[m] = old
                return val
            x[m] = _stepping_out(raw, ell, x[m], -math.inf, 1.0)
        k = it - n_warmup
        if k >= 0:
            row = theta_out[k]
            for j in range(p):
                row[j] = x[j]
            aux_out[k] = x[n_par - 1]
