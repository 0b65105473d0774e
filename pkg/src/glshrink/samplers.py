"""Posterior samplers for the normal-means model.

The horseshoe and horseshoe+ samplers are slice-within-Gibbs schemes whose
inner loops live in the kernel backend (compiled, or the pure-Python
fallback). Comparator priors use conjugate or collapsed updates, the
reference priors use direct low-dimensional samplers, and Student-t
observations fall back to a generic coordinate-wise slice sampler.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import _pykernels
from .analytics import ImproperPosteriorError, psi_posterior
from .diagnostics import split_rhat
from .draws import DrawMatrix
from .functionals import map_draws
from .kernels import KernelSet, get_backend
from .model import PRIOR_KINDS, Dataset, ExperimentConfig, FunctionalSpec, PriorSpec
from .numerics.quadrature import QuadratureError, adaptive_quadrature
from .numerics.rng import RngStream, chain_stream_id

__all__ = [
    "SamplerError",
    "InvariantViolation",
    "HsChainState",
    "HsPlusChainState",
    "LaplaceChainState",
    "GlobalChainState",
    "NormalState",
    "hs_gibbs_sweep",
    "hsplus_gibbs_sweep",
    "theta_from_kappa",
    "theta_from_lambda",
    "baseline_sweep",
    "reference_psi_sample",
    "run_posterior",
    "prior_code",
    "T_PRIOR_CODES",
]

RHAT_THRESHOLD = 1.1


class SamplerError(RuntimeError):
    pass


class InvariantViolation(SamplerError):
    pass


def prior_code(kind: str) -> int:
    """Stable small integer for a prior kind (used in stream ids)."""
    return PRIOR_KINDS.index(kind)


# prior codes understood by the generic Student-t slice kernel
T_PRIOR_CODES = {
    "vague_normal": 0,
    "horseshoe": 1,
    "horseshoe_plus": 2,
    "laplace": 3,
    "pure_local": 4,
    "pure_global": 5,
}


def _bitgen(rng):
    """Raw bit generator behind an RngStream, Generator or BitGenerator."""
    if isinstance(rng, RngStream):
        return rng.bit_generator
    if isinstance(rng, np.random.Generator):
        return rng.bit_generator
    if hasattr(rng, "random_raw"):
        return rng
    raise TypeError(f"cannot draw from {type(rng).__name__}")


def _generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.Generator(_bitgen(rng))


def _check_y(y) -> np.ndarray:
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1:
        raise ValueError("y must be a vector")
    if not np.all(np.isfinite(y)):
        raise ValueError("y must be finite")
    return y


# ------------------------------------------------------------------ states

@dataclass
class HsChainState:
    """Horseshoe state in the shrinkage-weight parameterization.

    ``nu`` stores ``1 - kappa`` so that weights close to 1 keep full
    precision; ``kappa`` is derived.
    """

    nu: np.ndarray
    omega: np.ndarray
    u: np.ndarray
    omega_glob: float
    tau2: float

    @classmethod
    def initial(cls, p: int, tau2: float = 1.0) -> "HsChainState":
        return cls(np.full(p, 0.5), np.ones(p), np.ones(p), 1.0, float(tau2))

    @property
    def kappa(self) -> np.ndarray:
        return 1.0 - self.nu

    @property
    def p(self) -> int:
        return self.nu.size

    def copy(self) -> "HsChainState":
        return HsChainState(self.nu.copy(), self.omega.copy(), self.u.copy(), self.omega_glob, self.tau2)

    def check(self) -> None:
        nu, u = self.nu, self.u
        if not (np.all(nu > 0) and np.all(nu < 1)):
            raise InvariantViolation("kappa must lie strictly inside (0, 1)")
        if not (np.all(u > 0) and np.all(u < 1.0 / np.sqrt(nu))):
            raise InvariantViolation("u_i must lie in (0, (1 - kappa_i)^(-1/2))")
        if not (np.all(self.omega > 0) and self.omega_glob > 0 and self.tau2 > 0):
            raise InvariantViolation("omega, omega_glob and tau2 must be positive")


@dataclass
class HsPlusChainState:
    """Horseshoe+ state: local scales ``lam``, slice variables ``u``, global ``tau``."""

    lam: np.ndarray
    u: np.ndarray
    tau: float

    @classmethod
    def initial(cls, p: int) -> "HsPlusChainState":
        return cls(np.ones(p), np.full(p, 0.25), 1.0)

    @property
    def p(self) -> int:
        return self.lam.size

    def copy(self) -> "HsPlusChainState":
        return HsPlusChainState(self.lam.copy(), self.u.copy(), self.tau)

    def check(self, backend: KernelSet | None = None) -> None:
        ks = backend or get_backend()
        if not (np.all(self.lam > 0) and np.all(self.u > 0) and self.tau > 0):
            raise InvariantViolation("lambda, u and tau must be positive")
        for li, ui in zip(self.lam, self.u):
            fu = ks.hsplus_f(ui)
            # tau > lambda_i / f(u_i) is the same event as u_i < f^-1(lambda_i / tau)
            if not self.tau * fu > li * (1.0 - 1e-12):
                raise InvariantViolation(
                    f"tau = {self.tau!r} does not exceed lambda/f(u) = {li / fu!r}")


@dataclass
class LaplaceChainState:
    theta: np.ndarray
    lam2: np.ndarray
    tau2: float

    @classmethod
    def initial(cls, p: int) -> "LaplaceChainState":
        return cls(np.zeros(p), np.ones(p), 1.0)

    def check(self) -> None:
        if not (np.all(self.lam2 > 0) and self.tau2 > 0 and np.all(np.isfinite(self.theta))):
            raise InvariantViolation("lambda^2 and tau^2 must be positive, theta finite")


@dataclass
class GlobalChainState:
    """Pure-global state; the slice variable is ``log_tau2``."""

    theta: np.ndarray
    log_tau2: float

    @classmethod
    def initial(cls, p: int) -> "GlobalChainState":
        return cls(np.zeros(p), 0.0)

    @property
    def tau2(self) -> float:
        return math.exp(self.log_tau2)

    def check(self) -> None:
        if not (math.isfinite(self.log_tau2) and np.all(np.isfinite(self.theta))):
            raise InvariantViolation("tau^2 must be positive and finite, theta finite")


@dataclass
class NormalState:
    theta: np.ndarray

    @classmethod
    def initial(cls, p: int) -> "NormalState":
        return cls(np.zeros(p))

    def check(self) -> None:
        if not np.all(np.isfinite(self.theta)):
            raise InvariantViolation("theta must be finite")


# ------------------------------------------------------------------ sweeps

def hs_gibbs_sweep(state: HsChainState, y, rng, *, eta: float = 1.0, tau2_fixed: float = 0.0,
                   backend: KernelSet | None = None) -> HsChainState:
    """One systematic scan of the horseshoe sampler.

    For each ``i`` the weight ``kappa_i`` (truncated exponential with a
    possibly negative rate), ``omega_i`` and ``u_i`` are refreshed, then the
    global ``omega`` and ``tau2``. ``tau2_fixed > 0`` pins ``tau2`` and skips
    both global updates. Returns a new state; the input is not modified.
    """
    y = _check_y(y)
    if y.size != state.p:
        raise ValueError("state and y have different lengths")
    ks = backend or get_backend()
    new = state.copy()
    glob = np.array([new.omega_glob, new.tau2])
    ks.hs_sweep(y, new.nu, new.omega, new.u, glob, eta * eta, tau2_fixed, _bitgen(rng))
    new.omega_glob, new.tau2 = float(glob[0]), float(glob[1])
    return new


def hsplus_gibbs_sweep(state: HsPlusChainState, y, rng, *, eta: float = 1.0,
                       backend: KernelSet | None = None) -> HsPlusChainState:
    """One scan of the horseshoe+ sampler: ``(u_i, lambda_i)`` for each ``i``, then ``tau``."""
    y = _check_y(y)
    if y.size != state.p:
        raise ValueError("state and y have different lengths")
    ks = backend or get_backend()
    new = state.copy()
    tau_arr = np.array([new.tau])
    ks.hsplus_sweep(y, new.lam, new.u, tau_arr, eta, _bitgen(rng))
    new.tau = float(tau_arr[0])
    return new


def theta_from_kappa(kappa, y, rng) -> np.ndarray:
    """Draw ``theta_i ~ N((1 - kappa_i) y_i, 1 - kappa_i)`` independently.

    ``kappa_i = 1`` returns exactly 0.
    """
    k = np.asarray(kappa, dtype=float)
    y = _check_y(y)
    if k.shape != y.shape:
        raise ValueError("kappa and y must have the same shape")
    if not np.all((k > 0) & (k <= 1)):
        raise ValueError("kappa must lie in (0, 1]")
    v = 1.0 - k
    z = _generator(rng).standard_normal(y.size)
    return np.where(v == 0.0, 0.0, v * y + np.sqrt(v) * z)


def theta_from_lambda(lam, y, rng) -> np.ndarray:
    """Horseshoe+ version: shrinkage factor ``lam^2 / (1 + lam^2)``."""
    lam = np.asarray(lam, dtype=float)
    y = _check_y(y)
    v = lam * lam / (1.0 + lam * lam)
    return v * y + np.sqrt(v) * _generator(rng).standard_normal(y.size)


_STATE_TYPES = {
    "laplace": LaplaceChainState,
    "vague_normal": NormalState,
    "pure_local": HsChainState,
    "pure_global": GlobalChainState,
}


def baseline_sweep(kind: str, state, y, rng, prior: PriorSpec | None = None,
                   backend: KernelSet | None = None):
    """One update of a comparator-prior sampler.

    ``vague_normal`` draws theta exactly from its conjugate posterior.
    ``laplace`` is a Gibbs cycle over theta, the local variances and tau^2.
    ``pure_local`` is the horseshoe scan with tau^2 pinned to 1.
    ``pure_global`` updates tau^2 marginally (theta integrated out) by a
    slice step on log tau^2, then draws theta given tau^2.
    """
    if kind not in _STATE_TYPES:
        raise ValueError(f"no baseline sampler for {kind!r}")
    if not isinstance(state, _STATE_TYPES[kind]):
        raise TypeError(f"{kind} needs a {_STATE_TYPES[kind].__name__}, got {type(state).__name__}")
    y = _check_y(y)
    prior = prior or PriorSpec(kind)
    ks = backend or get_backend()
    bg = _bitgen(rng)
    if kind == "pure_local":
        return hs_gibbs_sweep(state, y, bg, tau2_fixed=1.0, backend=ks)
    if kind == "vague_normal":
        theta, _ = ks.normal_draws(y, prior.sigma2, 1, bg)
        return NormalState(theta[0])
    if kind == "laplace":
        new = LaplaceChainState(state.theta.copy(), state.lam2.copy(), state.tau2)
        glob = np.array([new.tau2])
        ks.laplace_sweep(y, new.theta, new.lam2, glob, prior.xi, prior.d ** 2, bg)
        new.tau2 = float(glob[0])
        return new
    sigma = _global_log_tau2_step(y, prior.eta ** 2, state.log_tau2, bg.random_raw)
    return GlobalChainState(_global_theta(y, sigma, bg.random_raw), sigma)


def _global_log_tau2_step(y: np.ndarray, eta2: float, sigma: float, raw) -> float:
    # same arithmetic and draw order as the chain kernel
    p = y.size
    ssq = 0.0
    for v in y:
        ssq = ssq + float(v) * float(v)
    return _pykernels._stepping_out(raw, lambda s: _pykernels._ell_global(s, p, ssq, eta2),
                                    sigma, -math.inf, 1.0)


def _global_theta(y: np.ndarray, sigma: float, raw) -> np.ndarray:
    tau2 = math.exp(sigma)
    s = tau2 / (1.0 + tau2)
    return np.array([y[i] * s + math.sqrt(s) * _pykernels._normal(raw) for i in range(y.size)])


# -------------------------------------------------------------- reference

def _normal_loglik_2d(ybar: np.ndarray, K: int):
    def f(t1, t2):
        return -0.5 * K * ((t1 - ybar[0]) ** 2 + (t2 - ybar[1]) ** 2)
    return f


def _t_loglik_2d(Y: np.ndarray, df: float):
    c = 0.5 * (df + 1.0)

    def f(t1, t2):
        t1 = np.asarray(t1, dtype=float)
        t2 = np.asarray(t2, dtype=float)
        r1 = Y[:, 0][(...,) + (None,) * t1.ndim] - t1
        r2 = Y[:, 1][(...,) + (None,) * t2.ndim] - t2
        return -c * (np.log1p(r1 * r1 / df).sum(axis=0) + np.log1p(r2 * r2 / df).sum(axis=0))
    return f


def _bivariate_loglik(data: Dataset):
    if data.replicates is None or data.p != 2:
        raise ValueError("reference samplers for product/ratio need bivariate replicate data")
    if data.obs_model.kind == "student_t":
        return _t_loglik_2d(np.asarray(data.replicates), data.obs_model.df)
    return _normal_loglik_2d(np.asarray(data.y), data.K)


def _assert_proper_2d(loglik, center: np.ndarray, scale: float) -> float:
    """Mass of ``L(theta) / |theta|`` over the plane, by polar quadrature.

    Both bivariate reference posteriors reduce to this density in theta
    coordinates. Raises ImproperPosteriorError if the integral is not finite.
    """
    ref = float(loglik(center[0], center[1]))

    def radial(phi):
        c, s = math.cos(phi), math.sin(phi)

        def g(r):
            return np.exp(loglik(r * c, r * s) - ref)
        r_peak = max(0.0, center[0] * c + center[1] * s)
        pts = [x for x in (r_peak - 5 * scale, r_peak, r_peak + 5 * scale) if x > 0]
        return adaptive_quadrature(g, 0.0, math.inf, rel_tol=1e-8, abs_tol=1e-14, breakpoints=pts).value

    try:
        res = adaptive_quadrature(lambda ph: np.array([radial(v) for v in np.atleast_1d(ph)]),
                                  0.0, 2.0 * math.pi, rel_tol=1e-6, abs_tol=1e-14)
    except QuadratureError as exc:
        raise ImproperPosteriorError(f"normalizing integral did not converge: {exc}") from exc
    if not (math.isfinite(res.value) and res.value > 0):
        raise ImproperPosteriorError("normalizing integral is not finite")
    return res.value


def _log_ref_prior_theta(t1, t2):
    return -0.5 * np.log(t1 * t1 + t2 * t2)


def _metropolis_chain(logpost, x0, scales0, n_warmup: int, n_keep: int, gen: np.random.Generator,
                      batch: int = 50):
    """Component-wise Gaussian random-walk Metropolis.

    Each coordinate's step size is tuned on warmup batches toward an
    acceptance rate inside [0.2, 0.5] and then frozen.
    """
    x = np.array(x0, dtype=float)
    d = x.size
    scales = np.array(scales0, dtype=float)
    lp = logpost(x)
    if not math.isfinite(lp):
        raise SamplerError("Metropolis start point has zero posterior density")
    out = np.empty((n_keep, d))
    acc_batch = np.zeros(d)
    acc_keep = np.zeros(d)
    for it in range(n_warmup + n_keep):
        z = gen.standard_normal(d)
        lu = np.log(gen.random(d))
        for j in range(d):
            prop = x.copy()
            prop[j] += scales[j] * z[j]
            lq = logpost(prop)
            if lu[j] < lq - lp:
                x, lp = prop, lq
                if it < n_warmup:
                    acc_batch[j] += 1
                else:
                    acc_keep[j] += 1
        if it < n_warmup and (it + 1) % batch == 0:
            rate = acc_batch / batch
            scales = np.where(rate < 0.2, scales * 0.6, np.where(rate > 0.5, scales * 1.6, scales))
            acc_batch[:] = 0
        if it >= n_warmup:
            out[it - n_warmup] = x
    return out, scales, acc_keep / max(n_keep, 1)


def reference_psi_sample(target: str, data: Dataset, n_keep: int, rng=None, *, n_chains: int = 1,
                         n_warmup: int | None = None, base_seed: int | None = None) -> DrawMatrix:
    """Draws under the reference prior for ``target``.

    ``sum_sq``
        psi is drawn by inverse CDF from the grid posterior proportional to
        the non-central chi-squared likelihood times ``psi^(-1/2)``, the law
        of ``psi`` induced by the theta-space reference density
        ``|theta|^(-(p-1))``. No theta draws exist, so the parameter axis has
        length 0.
    ``product``
        Metropolis on ``(theta1, theta2)`` with prior ``|theta|^-1``.
    ``ratio``
        Metropolis on ``(psi, lam)``, ``theta = (psi*lam, lam)``, with prior
        ``(psi^2 + 1)^(-1/2)``.

    Either ``rng`` (one chain) or ``base_seed`` (one stream per chain) must
    be given.
    """
    if target not in ("sum_sq", "product", "ratio"):
        raise ValueError(f"unknown reference target {target!r}")
    n_warmup = n_keep if n_warmup is None else n_warmup
    code = prior_code("reference")

    def chain_rng(c):
        if base_seed is not None:
            return RngStream(base_seed, chain_stream_id(code, c))
        if n_chains != 1:
            raise ValueError("several chains need base_seed")
        return rng

    meta = {"sampler": f"reference_{target}", "n_warmup": n_warmup}
    if target == "sum_sq":
        if data.replicates is not None:
            raise ValueError("sum_sq reference sampler needs independent observations")
        post = psi_posterior("reference", data.p, data.sum_sq, likelihood="exact")
        meta["normalizing_log_const"] = post.log_norm_const
        psi = np.empty((n_chains, n_keep))
        for c in range(n_chains):
            u = _generator(chain_rng(c)).random(n_keep)
            psi[c] = post.quantile(u)
        meta["n_warmup"] = 0
        return DrawMatrix(np.zeros((n_chains, n_keep, 0)), psi, meta, "sum_sq")

    loglik = _bivariate_loglik(data)
    K = data.K
    ybar = np.asarray(data.y, dtype=float)
    sd = 1.0 / math.sqrt(K)
    if data.obs_model.kind == "student_t":
        df = data.obs_model.df
        sd *= math.sqrt(df / (df - 2.0)) if df > 2 else 3.0
    center = ybar
    meta["normalizing_mass_rel"] = _assert_proper_2d(loglik, center, sd)

    if target == "product":
        def logpost(x):
            if x[0] == 0.0 and x[1] == 0.0:
                return -math.inf
            return float(loglik(x[0], x[1]) + _log_ref_prior_theta(x[0], x[1]))
        x0 = ybar.copy()
        scales0 = np.array([2.4 * sd, 2.4 * sd])
    else:
        def logpost(x):
            psi, lam = x
            return float(loglik(psi * lam, lam) - 0.5 * math.log1p(psi * psi))
        lam0 = ybar[1] if abs(ybar[1]) > sd else math.copysign(sd, ybar[1] if ybar[1] != 0 else 1.0)
        x0 = np.array([ybar[0] / lam0, lam0])
        scales0 = np.array([2.4 * sd / abs(lam0), 2.4 * sd])

    theta = np.empty((n_chains, n_keep, 2))
    accept, final_scales = [], []
    for c in range(n_chains):
        gen = _generator(chain_rng(c))
        xs, sc, acc = _metropolis_chain(logpost, x0, scales0, n_warmup, n_keep, gen)
        if target == "ratio":
            theta[c, :, 0] = xs[:, 0] * xs[:, 1]
            theta[c, :, 1] = xs[:, 1]
        else:
            theta[c] = xs
        accept.append(acc.tolist())
        final_scales.append(sc.tolist())
    meta["acceptance"] = accept
    meta["proposal_scales"] = final_scales
    dm = DrawMatrix(theta, None, meta)
    return map_draws(FunctionalSpec(target, (0, 1)), dm)


# ---------------------------------------------------------------- driver

def _unit_noise_problem(prior: PriorSpec, data: Dataset):
    """Observations with unit noise plus the prior rescaled to match.

    Bivariate Gaussian data with K replicates become ``z = sqrt(K) * ybar``
    for ``phi = sqrt(K) * theta``; every prior scale is multiplied by
    ``sqrt(K)`` (variances by ``K``) so the model is unchanged.
    """
    if data.replicates is None:
        return np.asarray(data.y, dtype=float), prior, 1.0, 1.0
    c = math.sqrt(data.K)
    scaled = replace(prior, eta=prior.eta * c, sigma2=prior.sigma2 * data.K, d=prior.d * c)
    return c * np.asarray(data.y, dtype=float), scaled, float(data.K), c


def _run_chain(kind: str, y: np.ndarray, prior: PriorSpec, local_tau2: float, n_warmup: int,
               n_keep: int, stream: RngStream, ks: KernelSet):
    bg = stream.bit_generator
    if kind == "horseshoe":
        return ks.hs_chain(y, prior.eta ** 2, 0.0, n_warmup, n_keep, bg)
    if kind == "pure_local":
        return ks.hs_chain(y, 1.0, local_tau2, n_warmup, n_keep, bg)
    if kind == "horseshoe_plus":
        return ks.hsplus_chain(y, prior.eta, n_warmup, n_keep, bg)
    if kind == "laplace":
        return ks.laplace_chain(y, prior.xi, prior.d ** 2, n_warmup, n_keep, bg)
    if kind == "pure_global":
        return ks.global_chain(y, prior.eta ** 2, n_warmup, n_keep, bg)
    if kind == "vague_normal":
        return ks.normal_draws(y, prior.sigma2, n_keep, bg)
    raise ValueError(f"no chain sampler for {kind!r}")


def _run_chain_checked(kind: str, y: np.ndarray, prior: PriorSpec, local_tau2: float, n_warmup: int,
                       n_keep: int, stream: RngStream, ks: KernelSet):
    """Sweep-by-sweep run that validates the state after every sweep.

    Uses the same kernels, so the retained draws equal the fast path's.
    """
    p = y.size
    bg = stream.bit_generator
    raw = bg.random_raw
    theta = np.empty((n_keep, p))
    aux = np.empty(n_keep)
    if kind in ("horseshoe", "pure_local"):
        fixed = 0.0 if kind == "horseshoe" else local_tau2
        eta = prior.eta if kind == "horseshoe" else 1.0
        st = HsChainState.initial(p, fixed if fixed > 0 else 1.0)
        for it in range(n_warmup + n_keep):
            st = hs_gibbs_sweep(st, y, bg, eta=eta, tau2_fixed=fixed, backend=ks)
            st.check()
            k = it - n_warmup
            if k >= 0:
                for i in range(p):
                    v = float(st.nu[i])
                    theta[k, i] = v * y[i] + math.sqrt(v) * _pykernels._normal(raw)
                aux[k] = st.tau2
        return theta, aux
    if kind == "horseshoe_plus":
        st = HsPlusChainState.initial(p)
        for it in range(n_warmup + n_keep):
            st = hsplus_gibbs_sweep(st, y, bg, eta=prior.eta, backend=ks)
            st.check(ks)
            k = it - n_warmup
            if k >= 0:
                for i in range(p):
                    li = float(st.lam[i])
                    v = li * li / (1.0 + li * li)
                    theta[k, i] = v * y[i] + math.sqrt(v) * _pykernels._normal(raw)
                aux[k] = st.tau
        return theta, aux
    if kind == "laplace":
        st = LaplaceChainState.initial(p)
        for it in range(n_warmup + n_keep):
            st = baseline_sweep("laplace", st, y, bg, prior, ks)
            st.check()
            k = it - n_warmup
            if k >= 0:
                theta[k] = st.theta
                aux[k] = st.tau2
        return theta, aux
    if kind == "pure_global":
        st = GlobalChainState.initial(p)
        for it in range(n_warmup + n_keep):
            # the fast kernel skips theta during warmup; draw it only when kept
            st = GlobalChainState(st.theta, _global_log_tau2_step(y, prior.eta ** 2, st.log_tau2, raw))
            k = it - n_warmup
            if k >= 0:
                st = GlobalChainState(_global_theta(y, st.log_tau2, raw), st.log_tau2)
                theta[k] = st.theta
                aux[k] = st.tau2
            st.check()
        return theta, aux
    return _run_chain(kind, y, prior, local_tau2, n_warmup, n_keep, stream, ks)


def _t_hyper(prior: PriorSpec) -> np.ndarray:
    return np.array([2.0 * math.log(prior.eta), prior.sigma2, prior.xi, prior.d ** 2])


def run_posterior(config: ExperimentConfig, data: Dataset, prior: PriorSpec | None = None, *,
                  n_threads: int | None = None, backend: str | KernelSet | None = None,
                  check_invariants: bool = False) -> DrawMatrix:
    """Run ``config.n_chains`` independent chains and attach psi draws.

    Each chain uses its own stream ``chain_stream_id(prior_code, chain)`` of
    ``config.base_seed``, so output does not depend on ``n_threads``.
    A split-R-hat above 1.1 on any theta component is recorded as a warning
    in ``meta["warnings"]``; it never raises.
    """
    prior = prior or config.prior
    kind = prior.kind
    ks = backend if isinstance(backend, KernelSet) else get_backend(backend)
    n_chains, n_keep, n_warmup = config.n_chains, config.n_keep, config.n_warmup
    code = prior_code(kind)
    streams = [RngStream(config.base_seed, chain_stream_id(code, c)) for c in range(n_chains)]
    t0 = time.perf_counter()
    meta = {
        "prior": kind,
        "backend": ks.name,
        "base_seed": config.base_seed,
        "stream_ids": [s.stream_id for s in streams],
        "n_chains": n_chains,
        "n_warmup": n_warmup,
        "n_keep": n_keep,
        "warnings": [],
    }

    if kind == "reference":
        target = config.functional.kind
        dm = reference_psi_sample(target, data, n_keep, n_chains=n_chains, n_warmup=n_warmup,
                                  base_seed=config.base_seed)
        meta.update(dm.meta)
        meta["runtime_s"] = time.perf_counter() - t0
        dm.meta = meta
        return dm

    if data.obs_model.kind == "student_t":
        if check_invariants:
            raise ValueError("invariant checking is not available for the Student-t sampler")
        Y = np.asarray(data.replicates, dtype=float)
        hyp = _t_hyper(prior)
        tcode = T_PRIOR_CODES[kind]

        def work(c):
            return ks.t_slice_chain(Y, data.obs_model.df, tcode, hyp, n_warmup, n_keep,
                                    streams[c].bit_generator)
        meta["sampler"] = "t_coordinate_slice"
        scale = 1.0
    else:
        y, sprior, local_tau2, scale = _unit_noise_problem(prior, data)
        runner = _run_chain_checked if check_invariants else _run_chain

        def work(c):
            return runner(kind, y, sprior, local_tau2, n_warmup, n_keep, streams[c], ks)
        meta["sampler"] = kind
        if scale != 1.0:
            meta["unit_noise_rescale"] = scale

    workers = max(1, min(n_threads or n_chains, n_chains))
    if workers == 1:
        results = [work(c) for c in range(n_chains)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(work, range(n_chains)))
    theta = np.stack([r[0] for r in results]) / scale
    aux = np.stack([r[1] for r in results])
    meta["runtime_s"] = time.perf_counter() - t0
    meta["aux_mean"] = float(aux.mean())

    if n_chains * n_keep >= 8:
        worst = -math.inf
        for j in range(theta.shape[2]):
            r = split_rhat(theta[:, :, j])
            if math.isfinite(r):
                worst = max(worst, r)
        meta["max_split_rhat"] = worst if math.isfinite(worst) else None
        if math.isfinite(worst) and worst > RHAT_THRESHOLD:
            meta["warnings"].append(f"split R-hat {worst:.3f} exceeds {RHAT_THRESHOLD} on some theta_i")
    dm = DrawMatrix(theta, None, meta)
    return map_draws(config.functional, dm)
