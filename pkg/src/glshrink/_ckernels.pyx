# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled sampler kernels.

Line-by-line mirror of ``_pykernels.py``; see that module for the algorithms.
Any change here must be made there too (the parity tests enforce it).
"""
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport log, log1p, exp, expm1, sqrt, cos, fabs, fmax, fmin, nextafter, INFINITY
from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free
from numpy.random cimport bitgen_t

cdef double TWO_PI = 6.283185307179586
cdef double U_SCALE = 2.220446049250313e-16
cdef double ONE_MINUS = 0.9999999999999999
cdef double TINY = 2.2250738585072014e-308
cdef double EXP_MAX = 709.0
cdef int SLICE_MAX_STEPS = 100


cdef bitgen_t* _bitgen_ptr(object bitgen) except NULL:
    return <bitgen_t*> PyCapsule_GetPointer(bitgen.capsule, "BitGenerator")


# ---------------------------------------------------------------- variates

cdef inline double _unif(bitgen_t* rng) noexcept nogil:
    cdef uint64_t r = rng.next_uint64(rng.state)
    return (<double>(r >> 12) + 0.5) * U_SCALE


cdef inline double _exp_safe(double x) noexcept nogil:
    return exp(x) if x < EXP_MAX else INFINITY


cdef inline double _normal(bitgen_t* rng) noexcept nogil:
    cdef double u1 = _unif(rng)
    cdef double u2 = _unif(rng)
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


cdef double _gamma(bitgen_t* rng, double a) noexcept nogil:
    cdef double g, d, c, x, v, uu
    if a < 1.0:
        g = _gamma(rng, a + 1.0)
        return g * exp(log(_unif(rng)) / a)
    d = a - 1.0 / 3.0
    c = 1.0 / sqrt(9.0 * d)
    while True:
        x = _normal(rng)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        uu = _unif(rng)
        if log(uu) < 0.5 * x * x + d - d * v + d * log(v):
            return d * v


cdef inline double _trunc_exp(double rate, double width, double u) noexcept nogil:
    cdef double r, t
    if rate == 0.0:
        return u * width
    t = rate * width
    if fabs(t) < 1e-8:
        # second-order series; log1p/expm1 lose everything near subnormal rates
        if t > 0.0:
            return u * width * (1.0 - 0.5 * t * (1.0 - u))
        return width - u * width * (1.0 + 0.5 * t * (1.0 - u))
    if rate > 0.0:
        return -log1p(u * expm1(-rate * width)) / rate
    r = -rate
    return width + log1p(u * expm1(-r * width)) / r


cdef double _inv_gauss(bitgen_t* rng, double mu, double shape) noexcept nogil:
    cdef double n = _normal(rng)
    cdef double r = mu * (n * n) / (2.0 * shape)
    cdef double q, x
    if r > 1.0:
        q = r * sqrt(1.0 + 2.0 / r)
    else:
        q = sqrt(r * r + 2.0 * r)
    x = mu / (1.0 + r + q)
    if x < TINY:
        x = TINY
    if _unif(rng) <= mu / (mu + x):
        return x
    return mu * (mu / x)


def uniform_stream(object bitgen, Py_ssize_t n):
    cdef bitgen_t* rng = _bitgen_ptr(bitgen)
    cdef Py_ssize_t i
    out = []
    with bitgen.lock:
        for i in range(n):
            out.append(_unif(rng))
    return out


# ---------------------------------------------------- horseshoe+ slice map

cdef inline double _g_of_t(double t) noexcept nogil:
    if fabs(t) < 1e-4:
        return 0.5 * (1.0 - t + t * t / 3.0)
    if t > 0.0:
        return t * exp(-2.0 * t) / (-expm1(-2.0 * t))
    return t / expm1(2.0 * t)


cdef inline double _log_g_of_t(double t) noexcept nogil:
    if fabs(t) < 1e-4:
        return log(0.5) - t - t * t / 6.0
    if t > 0.0:
        return log(t) - 2.0 * t - log(-expm1(-2.0 * t))
    return log(-t) - log(-expm1(2.0 * t))


cdef inline double _dlog_g_of_t(double t) noexcept nogil:
    if fabs(t) < 1e-4:
        return -1.0 - t / 3.0
    if t > 0.0:
        return 1.0 / t - 2.0 / (-expm1(-2.0 * t))
    return 1.0 / t + 2.0 * exp(2.0 * t) / (-expm1(2.0 * t))


cdef double _solve_log_g(double log_u) noexcept nogil:
    cdef double lo = -27.631021115928547
    cdef double hi = 27.631021115928547
    cdef double u, t, h, dh, t_new
    cdef int it
    while _log_g_of_t(lo) - log_u <= 0.0:
        lo = 2.0 * lo
    while _log_g_of_t(hi) - log_u >= 0.0:
        hi = 2.0 * hi
    u = exp(log_u)
    if u >= 0.5:
        t = -u
    else:
        t = -0.5 * log_u
    if not (lo < t and t < hi):
        t = 0.5 * (lo + hi)
    for it in range(200):
        h = _log_g_of_t(t) - log_u
        if h == 0.0:
            return t
        if h > 0.0:
            lo = t
        else:
            hi = t
        dh = _dlog_g_of_t(t)
        t_new = t - h / dh
        if not (lo < t_new and t_new < hi):
            t_new = 0.5 * (lo + hi)
        if fabs(t_new - t) <= 1e-12 * fmax(1.0, fabs(t)):
            return t_new
        t = t_new
    return t


cdef inline double _f_of_u(double u) noexcept nogil:
    if u <= 0.0:
        return INFINITY
    if u == INFINITY:
        return 0.0
    return exp(_solve_log_g(log(u)))


def hsplus_finv(double x):
    if x <= 0.0:
        return INFINITY
    if x == INFINITY:
        return 0.0
    return _g_of_t(log(x))


def hsplus_f(double u):
    return _f_of_u(u)


# ------------------------------------------------------- slice machinery

cdef struct EllCtx:
    int kind          # 0: log tau (horseshoe+), 1: collapsed global, 2: t coordinate,
                      # 3: log tau (horseshoe+, u integrated out; x = lambda)
    int p
    double a          # eta (kind 0) / ssq (kind 1)
    double b          # eta^2 (kind 1)
    # kind 2
    int code
    int m
    double* x
    double* col
    int n_rep
    double half_df1
    double df
    double* hyp


cdef inline double _softplus(double x) noexcept nogil:
    return x if x > 35.0 else log1p(exp(x))


cdef inline double _log_normal_scale(double theta, double log_sd) noexcept nogil:
    if theta == 0.0:
        return -log_sd
    return -log_sd - 0.5 * theta * theta * _exp_safe(-2.0 * log_sd)


cdef inline double _log_half_cauchy_log(double a, double log_scale2) noexcept nogil:
    return a - _softplus(2.0 * a - log_scale2)


cdef double _t_prior(int code, double* x, int p, double* hyp) noexcept nogil:
    cdef double tot = 0.0
    cdef double inv, a, b, c, s, inv_tau
    cdef int j
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
        if s < -2.0 * EXP_MAX:
            return -INFINITY
        inv_tau = _exp_safe(-0.5 * s)
        for j in range(p):
            tot = tot - 0.5 * s
            if x[j] != 0.0:
                tot = tot - fabs(x[j]) * inv_tau
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


cdef inline double _t_loglik(double* col, int n_rep, double theta, double half_df1,
                             double df) noexcept nogil:
    cdef double tot = 0.0
    cdef double r
    cdef int k
    for k in range(n_rep):
        r = col[k] - theta
        tot = tot - half_df1 * log1p(r * r / df)
    return tot


cdef double _ell(EllCtx* ctx, double v) noexcept nogil:
    cdef double e, sp, old, val
    cdef double acc = 0.0
    cdef int i
    if ctx.kind == 0 or ctx.kind == 3:
        if ctx.kind == 3:
            for i in range(ctx.p):
                acc = acc + _log_g_of_t(log(ctx.x[i]) - v)
        e = 2.0 * v - 2.0 * log(ctx.a)
        if e > 35.0:
            sp = e
        else:
            sp = log1p(exp(e))
        return acc + ((1.0 - ctx.p) * v - sp)
    if ctx.kind == 1:
        if v > EXP_MAX:
            return -INFINITY
        e = exp(v)
        return (0.5 * v - log1p(e / ctx.b) - 0.5 * ctx.p * log1p(e)
                - ctx.a / (2.0 * (1.0 + e)))
    old = ctx.x[ctx.m]
    ctx.x[ctx.m] = v
    val = _t_prior(ctx.code, ctx.x, ctx.p, ctx.hyp)
    if ctx.m < ctx.p:
        val = val + _t_loglik(ctx.col, ctx.n_rep, v, ctx.half_df1, ctx.df)
    ctx.x[ctx.m] = old
    return val


cdef double _stepping_out(bitgen_t* rng, EllCtx* ctx, double x0, double lower,
                          double width) noexcept nogil:
    cdef double level = _ell(ctx, x0) + log(_unif(rng))
    cdef double left = x0 - width * _unif(rng)
    cdef double right = left + width
    cdef int j = <int>(SLICE_MAX_STEPS * _unif(rng))
    cdef int k = SLICE_MAX_STEPS - 1 - j
    cdef double x1
    while j > 0 and left > lower and _ell(ctx, left) > level:
        left = left - width
        j -= 1
    while k > 0 and _ell(ctx, right) > level:
        right = right + width
        k -= 1
    if left < lower:
        left = lower
    while True:
        x1 = left + _unif(rng) * (right - left)
        if x1 > lower and _ell(ctx, x1) > level:
            return x1
        if x1 < x0:
            left = x1
        else:
            right = x1
        if right - left <= 0.0:
            return x0


cdef inline double _phi_lambda(double t, double c) noexcept nogil:
    return -0.5 * t - c * exp(-t)


cdef double _root_phi(double c, double level, double a, double b) noexcept nogil:
    cdef double ha = _phi_lambda(a, c) - level
    cdef double t = 0.5 * (a + b)
    cdef double h, dh, t_new
    cdef int it
    for it in range(100):
        h = _phi_lambda(t, c) - level
        if h == 0.0:
            return t
        if (h > 0.0) == (ha > 0.0):
            a = t
            ha = h
        else:
            b = t
        dh = -0.5 + c * exp(-t)
        if dh != 0.0:
            t_new = t - h / dh
        else:
            t_new = 0.5 * (a + b)
        if not (fmin(a, b) < t_new and t_new < fmax(a, b)):
            t_new = 0.5 * (a + b)
        if fabs(t_new - t) <= 1e-13 * fmax(1.0, fabs(t)):
            return t_new
        t = t_new
    return t


cdef double _slice_lambda(bitgen_t* rng, double lam0, double c, double bound) noexcept nogil:
    cdef double t_max, t0, level, lam_a, lam_b, t_b, lam
    if bound < 1e150:
        t_max = log1p(bound * bound)
    else:
        t_max = 2.0 * log(bound)
    t0 = log1p(lam0 * lam0)
    if t0 > t_max:
        t0 = t_max
    level = _phi_lambda(t0, c) + log(_unif(rng))
    if _phi_lambda(0.0, c) > level:
        lam_a = 0.0
    else:
        lam_a = sqrt(expm1(_root_phi(c, level, 0.0, t0)))
    if _phi_lambda(t_max, c) > level:
        lam_b = bound
    else:
        t_b = _root_phi(c, level, t0, t_max)
        if t_b < EXP_MAX:
            lam_b = sqrt(expm1(t_b))
        else:
            lam_b = bound
        if lam_b > bound:
            lam_b = bound
    lam = lam_a + _unif(rng) * (lam_b - lam_a)
    if lam >= bound:
        lam = nextafter(bound, 0.0)
    if lam <= 0.0:
        lam = TINY
    return lam


# --------------------------------------------------------------- horseshoe

cdef void _hs_sweep(double* y, int p, double* nu, double* omega, double* u, double* glob,
                    double eta2, double tau2_fixed, bitgen_t* rng) noexcept nogil:
    cdef double tau2 = tau2_fixed if tau2_fixed > 0.0 else glob[1]
    cdef double tm1 = tau2 - 1.0
    cdef double acc = 0.0
    cdef double yi, rate, ui, width, v, om, og
    cdef int i
    for i in range(p):
        yi = y[i]
        rate = -(omega[i] * tm1 + 0.5 * yi * yi)
        ui = u[i]
        width = 1.0 if ui <= 1.0 else 1.0 / (ui * ui)
        v = _trunc_exp(rate, width, _unif(rng))
        if v <= 0.0:
            v = TINY
        if v >= 1.0:
            v = ONE_MINUS
        om = -log(_unif(rng)) / (v + (1.0 - v) * tau2)
        ui = _unif(rng) / sqrt(v)
        nu[i] = v
        omega[i] = om
        u[i] = ui
        acc = acc + (1.0 - v) * om
    if tau2_fixed > 0.0:
        glob[1] = tau2_fixed
        return
    og = -log(_unif(rng)) / (tau2 + eta2)
    tau2 = _gamma(rng, 0.5 * (p + 1)) / (og + acc)
    if tau2 < TINY:
        tau2 = TINY
    glob[0] = og
    glob[1] = tau2


def hs_sweep(double[::1] y, double[::1] nu, double[::1] omega, double[::1] u,
             double[::1] glob, double eta2, double tau2_fixed, object bitgen):
    cdef bitgen_t* rng = _bitgen_ptr(bitgen)
    cdef int p = y.shape[0]
    with bitgen.lock, nogil:
        _hs_sweep(&y[0], p, &nu[0], &omega[0], &u[0], &glob[0], eta2, tau2_fixed, rng)


def hs_chain(double[::1] y, double eta2, double tau2_fixed, int n_warmup, int n_keep,
             object bitgen, double[:, ::1] theta_out, double[::1] aux_out):
    cdef bitgen_t* rng = _bitgen_ptr(bitgen)
    cdef int p = y.shape[0]
    cdef int it, k, i
    cdef double v
    cdef double* nu = <double*> malloc(3 * p * sizeof(double))
    cdef double* omega = nu + p
    cdef double* u = nu + 2 * p
    cdef double glob[2]
    if nu == NULL:
        raise MemoryError()
    for i in range(p):
        nu[i] = 0.5
        omega[i] = 1.0
        u[i] = 1.0
    glob[0] = 1.0
    glob[1] = tau2_fixed if tau2_fixed > 0.0 else 1.0
    try:
        with bitgen.lock, nogil:
            for it in range(n_warmup + n_keep):
                _hs_sweep(&y[0], p, nu, omega, u, glob, eta2, tau2_fixed, rng)
                k = it - n_warmup
                if k >= 0:
                    for i in range(p):
                        v = nu[i]
                        theta_out[k, i] = v * y[i] + sqrt(v) * _normal(rng)
                    aux_out[k] = glob[1]
    finally:
        free(nu)


# -------------------------------------------------------------- horseshoe+

cdef void _hsplus_sweep(double* y, int p, double* lam, double* u, double* tau_arr,
                        double eta, bitgen_t* rng) noexcept nogil:
    cdef double tau = tau_arr[0]
    cdef double log_tau = log(tau)
    cdef double sig_lo = -INFINITY
    cdef double gi, ui, fu, yi, bound, li, b, sigma
    cdef int i
    cdef EllCtx ctx
    for i in range(p):
        gi = _g_of_t(log(lam[i]) - log_tau)
        ui = _unif(rng) * gi
        fu = _f_of_u(ui)
        yi = y[i]
        bound = tau * fu
        if bound > 1e300:
            bound = 1e300
        li = _slice_lambda(rng, lam[i], 0.5 * yi * yi, bound)
        lam[i] = li
        u[i] = ui
        b = log(li) - log(fu)
        if b > sig_lo:
            sig_lo = b
    ctx.kind = 0
    ctx.p = p
    ctx.a = eta
    sigma = _stepping_out(rng, &ctx, log_tau, sig_lo, 1.0)
    # tau again with u integrated out, then u refreshed so the truncation holds
    ctx.kind = 3
    ctx.x = lam
    sigma = _stepping_out(rng, &ctx, sigma, -INFINITY, 1.0)
    for i in range(p):
        u[i] = _unif(rng) * _g_of_t(log(lam[i]) - sigma)
    tau_arr[0] = exp(sigma)


def hsplus_sweep(double[::1] y, double[::1] lam, double[::1] u, double[::1] tau_arr,
                 double eta, object bitgen):
    cdef bitgen_t* rng = _bitgen_ptr(bitgen)
    cdef int p = y.shape[0]
    with bitgen.lock, nogil:
        _hsplus_sweep(&y[0], p, &lam[0], &u[0], &tau_arr[0], eta, rng)


def hsplus_chain(double[::1] y, double eta, int n_warmup, int n_keep, object bitgen,
                 double[:, ::1] theta_out, double[::1] aux_out):
    cdef bitgen_t* rng = _bitgen_ptr(bitgen)
    cdef int p = y.shape[0]
    cdef int it, k, i
    cdef double li, v
    cdef double* lam = <double*> malloc(2 * p * sizeof(double))
    cdef double* u = lam + p
    cdef double tau_arr[1]
    if lam == NULL:
        raise MemoryError()
    for i in range(p):
        lam[i] = 1.0
        u[i] = 0.25
    tau_arr[0] = 1.0
    try:
        with bitgen.lock, nogil:
            for it in range(n_warmup + n_keep):
                _hsplus_sweep(&y[0], p, lam, u, tau_arr, eta, rng)
                k = it - n_warmup
                if k >= 0:
                    for i in range(p):
                        li = lam[i]
                        v = li * li / (1.0 + li * li)
                        theta_out[k, i] = v * y[i] + sqrt(v) * _normal(rng)
                    aux_out[k] = tau_arr[0]
    finally:
        free(lam)


# ----------------------------------------------------------------- Laplace

cdef void _laplace_sweep(double* y, int p, double* theta, double* lam2, double* glob,
                         double xi, double d2, bitgen_t* rng) noexcept nogil:
    cdef double tau2 = glob[0]
    cdef double l2, s, shape, tau, acc, a, n, inv
    cdef int i
    for i in range(p):
        l2 = lam2[i]
        s = l2 / (1.0 + l2)
        theta[i] = y[i] * s + sqrt(s) * _normal(rng)
    shape = 1.0 / tau2
    tau = sqrt(tau2)
    acc = 0.0
    for i in range(p):
        a = fabs(theta[i])
        if a == 0.0 or tau * a < 1e-280:
            n = _normal(rng)
            if n != 0.0:
                inv = shape / (n * n)
            else:
                inv = INFINITY
        else:
            inv = _inv_gauss(rng, 1.0 / (tau * a), shape)
        if inv < TINY:
            inv = TINY
        l2 = 1.0 / inv
        if l2 < TINY:
            l2 = TINY
        lam2[i] = l2
        acc = acc + l2
    tau2 = (0.5 * acc + 0.5 * xi * d2) / _gamma(rng, p + 0.5 * xi)
    if tau2 < TINY:
        tau2 = TINY
    glob[0] = tau2


def laplace_sweep(double[::1] y, double[::1] theta, double[::1] lam2, double[::1] glob,
                  double xi, double d2, object bitgen):
    cdef bitgen_t* rng = _bitgen_ptr(bitgen)
    cdef int p = y.shape[0]
    with bitgen.lock, nogil:
        _laplace_sweep(&y[0], p, &theta[0], &lam2[0], &glob[0], xi, d2, rng)


def laplace_chain(double[::1] y, double xi, double d2, int n_warmup, int n_keep,
                  object bitgen, double[:, ::1] theta_out, double[::1] aux_out):
    cdef bitgen_t* rng = _bitgen_ptr(bitgen)
    cdef int p = y.shape[0]
    cdef int it, k, i
    cdef double* theta = <double*> malloc(2 * p * sizeof(double))
    cdef double* lam2 = theta + p
    cdef double glob[1]
    if theta == NULL:
        raise MemoryError()
    for i in range(p):
        theta[i] = 0.0
        lam2[i] = 1.0
    glob[0] = 1.0
    try:
        with bitgen.lock, nogil:
            for it in range(n_warmup + n_keep):
                _laplace_sweep(&y[0], p, theta, lam2, glob, xi, d2, rng)
                k = it - n_warmup
                if k >= 0:
                    for i in range(p):
                        theta_out[k, i] = theta[i]
                    aux_out[k] = glob[0]
    finally:
        free(theta)


# ----------------------------------------------------------- pure global

def global_chain(double[::1] y, double eta2, int n_warmup, int n_keep, object bitgen,
                 double[:, ::1] theta_out, double[::1] aux_out):
    cdef bitgen_t* rng = _bitgen_ptr(bitgen)
    cdef int p = y.shape[0]
    cdef int it, k, i
    cdef double ssq = 0.0
    cdef double sigma = 0.0
    cdef double tau2, s
    cdef EllCtx ctx
    for i in range(p):
        ssq = ssq + y[i] * y[i]
    ctx.kind = 1
    ctx.p = p
    ctx.a = ssq
    ctx.b = eta2
    with bitgen.lock, nogil:
        for it in range(n_warmup + n_keep):
            sigma = _stepping_out(rng, &ctx, sigma, -INFINITY, 1.0)
            k = it - n_warmup
            if k >= 0:
                tau2 = exp(sigma)
                s = tau2 / (1.0 + tau2)
                for i in range(p):
                    theta_out[k, i] = y[i] * s + sqrt(s) * _normal(rng)
                aux_out[k] = tau2


def normal_draws(double[::1] y, double sigma2, int n_keep, object bitgen,
                 double[:, ::1] theta_out, double[::1] aux_out):
    cdef bitgen_t* rng = _bitgen_ptr(bitgen)
    cdef int p = y.shape[0]
    cdef int k, i
    cdef double c = sigma2 / (sigma2 + 1.0)
    cdef double sc = sqrt(c)
    with bitgen.lock, nogil:
        for k in range(n_keep):
            for i in range(p):
                theta_out[k, i] = y[i] * c + sc * _normal(rng)
            aux_out[k] = sigma2


# --------------------------------------------- Student-t coordinate slice

def t_n_params(int code, int p):
    return (p, 2 * p + 1, 3 * p + 1, p + 1, 2 * p, p + 1)[code]


def t_slice_chain(double[:, ::1] Y, double df, int code, double[::1] hyp, int n_warmup,
                  int n_keep, object bitgen, double[:, ::1] theta_out, double[::1] aux_out):
    cdef bitgen_t* rng = _bitgen_ptr(bitgen)
    cdef int n_rep = Y.shape[0]
    cdef int p = Y.shape[1]
    cdef int n_par = t_n_params(code, p)
    cdef int it, k, j, m
    cdef double s
    cdef double* cols = <double*> malloc((n_rep * p + n_par) * sizeof(double))
    cdef double* x = cols + n_rep * p
    cdef EllCtx ctx
    if cols == NULL:
        raise MemoryError()
    for j in range(p):
        for k in range(n_rep):
            cols[j * n_rep + k] = Y[k, j]
    for m in range(n_par):
        x[m] = 0.0
    for j in range(p):
        s = 0.0
        for k in range(n_rep):
            s = s + cols[j * n_rep + k]
        x[j] = s / n_rep
    ctx.kind = 2
    ctx.p = p
    ctx.code = code
    ctx.x = x
    ctx.n_rep = n_rep
    ctx.half_df1 = 0.5 * (df + 1.0)
    ctx.df = df
    ctx.hyp = &hyp[0]
    try:
        with bitgen.lock, nogil:
            for it in range(n_warmup + n_keep):
                for m in range(n_par):
                    ctx.m = m
                    if m < p:
                        ctx.col = cols + m * n_rep
                    x[m] = _stepping_out(rng, &ctx, x[m], -INFINITY, 1.0)
                k = it - n_warmup
                if k >= 0:
                    for j in range(p):
                        theta_out[k, j] = x[j]
                    aux_out[k] = x[n_par - 1]
    finally:
        free(cols)
