"""Domain types, JSON configuration and synthetic data generation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .numerics.rng import DATA_STREAM_ID, RngStream

__all__ = [
    "PRIOR_KINDS",
    "FUNCTIONAL_KINDS",
    "REFERENCE_TARGETS",
    "ConfigError",
    "UnknownKindError",
    "InvariantError",
    "NonPositiveScaleError",
    "ConstraintViolationError",
    "ObsModel",
    "Dataset",
    "PriorSpec",
    "FunctionalSpec",
    "ExperimentConfig",
    "generate_dataset",
    "load_config",
    "config_from_dict",
    "config_to_dict",
    "dataset_to_csv",
]

PRIOR_KINDS = (
    "horseshoe",
    "horseshoe_plus",
    "laplace",
    "vague_normal",
    "pure_local",
    "pure_global",
    "reference",
)
FUNCTIONAL_KINDS = ("sum_sq", "max", "product", "ratio")
REFERENCE_TARGETS = ("sum_sq", "product", "ratio")
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; ``field`` is the dotted path of the offending entry."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path


class UnknownKindError(ConfigError):
    pass


class InvariantError(ConfigError):
    pass


class NonPositiveScaleError(ConfigError):
    pass


class ConstraintViolationError(ValueError):
    """Signal size and sparsity disagree with the unit quadratic-mean constraint."""


def _positive(value, path: str) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a number, got {value!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise NonPositiveScaleError(path, f"must be positive and finite, got {value!r}")
    return v


@dataclass(frozen=True)
class ObsModel:
    kind: str = "gaussian"
    df: float | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            object.__setattr__(self, "df", None)
        elif self.kind == "student_t":
            _positive(self.df, "experiment.obs_model.df")
            object.__setattr__(self, "df", float(self.df))
        else:
            raise UnknownKindError("experiment.obs_model.kind", f"unknown observation model {self.kind!r}")


@dataclass(frozen=True)
class PriorSpec:
    """One of the seven priors with its hyperparameters.

    ``eta`` is the half-Cauchy scale of the global parameter, ``sigma2`` the
    vague-normal variance and ``(xi, d)`` the inverse-gamma hyperparameters of
    the Laplace prior's global variance.
    """

    kind: str
    eta: float = 1.0
    sigma2: float = 300.0
    xi: float = 1.0
    d: float = 1.0
    reference_target: str | None = None

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise UnknownKindError("prior.kind", f"unknown prior kind {self.kind!r}")
        for name in ("eta", "sigma2", "xi", "d"):
            object.__setattr__(self, name, _positive(getattr(self, name), f"prior.{name}"))
        if self.kind == "reference":
            if self.reference_target not in REFERENCE_TARGETS:
                raise InvariantError(
                    "prior.reference_target",
                    f"reference prior needs a target in {REFERENCE_TARGETS}, got {self.reference_target!r}",
                )
        elif self.reference_target is not None:
            raise InvariantError("prior.reference_target", "only allowed when kind is 'reference'")


@dataclass(frozen=True)
class FunctionalSpec:
    kind: str
    component_indices: tuple[int, int] = (0, 1)

    def __post_init__(self):
        if self.kind not in FUNCTIONAL_KINDS:
            raise UnknownKindError("functional.kind", f"unknown functional {self.kind!r}")
        idx = tuple(int(i) for i in self.component_indices)
        if len(idx) != 2:
            raise InvariantError("functional.component_indices", "expected exactly two indices")
        if self.kind in ("product", "ratio"):
            if idx[0] == idx[1] or min(idx) < 0:
                raise InvariantError("functional.component_indices", "indices must be distinct and non-negative")
        object.__setattr__(self, "component_indices", idx)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to generate data and run the posterior samplers.

    The experiment type follows from the functional: ``sum_sq`` and ``max``
    use ``p`` independent observations, ``product`` and ``ratio`` use ``K``
    replicate pairs about ``theta_pair``.
    """

    p: int
    A: float
    q_p: int
    prior: PriorSpec
    functional: FunctionalSpec
    n_chains: int = 4
    n_keep: int = 2500
    n_warmup: int | None = None
    base_seed: int = 20160601
    unit_quadratic_mean: bool = False
    max_value: float = 10.0
    K: int = 100
    theta_pair: tuple[float, float] = (0.0, 0.0)
    obs_model: ObsModel = field(default_factory=ObsModel)
    priors: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n_warmup is None:
            object.__setattr__(self, "n_warmup", self.n_keep)
        for name in ("p", "q_p", "n_chains", "n_keep", "n_warmup", "K"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v:
                raise ConfigError(_FIELD_PATHS[name], f"expected an integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.p < 1:
            raise InvariantError("experiment.p", "must be >= 1")
        if not 0 <= self.q_p <= self.p:
            raise InvariantError("experiment.q_p", f"must satisfy 0 <= q_p <= p = {self.p}")
        if self.n_keep < 100:
            raise InvariantError("sampling.n_keep", "must be >= 100")
        if self.n_chains < 1:
            raise InvariantError("sampling.n_chains", "must be >= 1")
        if self.n_warmup < 0:
            raise InvariantError("sampling.n_warmup", "must be >= 0")
        if not 0 <= int(self.base_seed) < 2**64:
            raise InvariantError("sampling.base_seed", "must be an unsigned 64-bit integer")
        object.__setattr__(self, "base_seed", int(self.base_seed))
        if not math.isfinite(float(self.A)):
            raise ConfigError("experiment.A", "must be finite")
        object.__setattr__(self, "A", float(self.A))
        object.__setattr__(self, "theta_pair", tuple(float(t) for t in self.theta_pair))
        if self.is_bivariate:
            if self.p != 2:
                raise InvariantError("experiment.p", "bivariate experiments have p = 2")
            if self.K < 2:
                raise InvariantError("experiment.K", "must be >= 2")
            if max(self.functional.component_indices) >= 2:
                raise InvariantError("functional.component_indices", "index out of range for p = 2")
        elif self.obs_model.kind != "gaussian":
            raise InvariantError("experiment.obs_model", "Student-t observations are only supported for bivariate experiments")
        kinds = self.priors or (self.prior.kind,)
        for i, k in enumerate(kinds):
            if k not in PRIOR_KINDS:
                raise UnknownKindError(f"priors[{i}]", f"unknown prior kind {k!r}")
        object.__setattr__(self, "priors", tuple(kinds))
        if self.functional.kind == "max" and "reference" in kinds:
            raise InvariantError("prior.kind", "no reference prior is available for the max functional")
        if self.prior.kind == "reference" and self.prior.reference_target != self.functional.kind:
            raise InvariantError("prior.reference_target", "must match functional.kind")

    @property
    def is_bivariate(self) -> bool:
        return self.functional.kind in ("product", "ratio")

    @property
    def experiment(self) -> str:
        return "bivariate" if self.is_bivariate else self.functional.kind

    def prior_for(self, kind: str) -> PriorSpec:
        """The configured hyperparameters applied to another prior kind."""
        target = None
        if kind == "reference":
            target = self.functional.kind
            if target == "max":
                raise InvariantError("prior.kind", "no reference prior is available for the max functional")
        return PriorSpec(kind, self.prior.eta, self.prior.sigma2, self.prior.xi, self.prior.d, target)

    def with_updates(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)


_FIELD_PATHS = {
    "p": "experiment.p",
    "q_p": "experiment.q_p",
    "K": "experiment.K",
    "n_chains": "sampling.n_chains",
    "n_keep": "sampling.n_keep",
    "n_warmup": "sampling.n_warmup",
}


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observations plus the true means used to generate them.

    For bivariate experiments ``replicates`` holds the ``K x 2`` draws and
    ``y`` their column means.
    """

    y: np.ndarray
    theta_true: np.ndarray
    obs_model: ObsModel = field(default_factory=ObsModel)
    replicates: np.ndarray | None = None

    def __post_init__(self):
        y = np.array(self.y, dtype=float)
        th = np.array(self.theta_true, dtype=float)
        if y.ndim != 1 or y.shape != th.shape:
            raise ValueError("y and theta_true must be 1-D of equal length")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(th))):
            raise ValueError("dataset entries must be finite")
        y.flags.writeable = False
        th.flags.writeable = False
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "theta_true", th)
        if self.replicates is not None:
            r = np.array(self.replicates, dtype=float)
            if r.ndim != 2 or r.shape[1] != y.size or not np.all(np.isfinite(r)):
                raise ValueError("replicates must be a finite K x p matrix")
            r.flags.writeable = False
            object.__setattr__(self, "replicates", r)
        elif self.obs_model.kind != "gaussian":
            raise ValueError("Student-t observations need replicates")

    @property
    def p(self) -> int:
        return self.y.size

    @property
    def K(self) -> int | None:
        return None if self.replicates is None else self.replicates.shape[0]

    @property
    def sum_sq(self) -> float:
        return math.fsum(float(v) * float(v) for v in self.y)

    def summary(self) -> dict:
        out = {"p": self.p, "sum_y2": self.sum_sq, "max_y": float(self.y.max()),
               "obs_model": self.obs_model.kind}
        if self.replicates is not None:
            out["K"] = self.K
            out["ybar"] = [float(v) for v in self.y]
        return out


def generate_dataset(config: ExperimentConfig, rng_stream: RngStream | None = None) -> Dataset:
    """Simulate the data for ``config``.

    Uses the dedicated data stream of ``config.base_seed`` unless another
    stream is given.

    Raises
    ------
    ConstraintViolationError
        When ``unit_quadratic_mean`` is set and ``A**2 * q_p != p``.
    """
    rng = rng_stream if rng_stream is not None else RngStream(config.base_seed, DATA_STREAM_ID)
    gen = rng.generator
    p = config.p
    if config.experiment == "sum_sq":
        if config.unit_quadratic_mean and not math.isclose(config.A * config.A * config.q_p, p, rel_tol=1e-9):
            raise ConstraintViolationError(
                f"A * sqrt(q_p) = {config.A * math.sqrt(config.q_p):.6g} but sqrt(p) = {math.sqrt(p):.6g}"
            )
        theta = np.zeros(p)
        theta[: config.q_p] = config.A
        return Dataset(theta + gen.standard_normal(p), theta)
    if config.experiment == "max":
        theta = np.zeros(p)
        theta[-1] = config.max_value
        y = np.empty(p)
        y[:-1] = gen.standard_normal(p - 1)
        y[-1] = config.max_value
        return Dataset(y, theta)
    theta = np.array(config.theta_pair, dtype=float)
    if config.obs_model.kind == "gaussian":
        noise = gen.standard_normal((config.K, 2))
    else:
        noise = gen.standard_t(config.obs_model.df, size=(config.K, 2))
    reps = theta + noise
    return Dataset(reps.mean(axis=0), theta, config.obs_model, reps)


# ---------------------------------------------------------------------- JSON

def _section(raw: Mapping, name: str, required: bool = True) -> Mapping:
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ConfigError(name, "missing section")
        return {}
    if not isinstance(sec, Mapping):
        raise ConfigError(name, "must be an object")
    return sec


def _check_keys(sec: Mapping, allowed: set, path: str) -> None:
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"{path}.{key}", "unknown field")


def config_from_dict(raw: Mapping[str, Any]) -> ExperimentConfig:
    """Build and validate a configuration from a parsed JSON document."""
    if not isinstance(raw, Mapping):
        raise ConfigError("$", "top level must be an object")
    version = raw.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version!r}")
    _check_keys(raw, {"schema_version", "experiment", "functional", "prior", "priors", "sampling"}, "$")

    exp = _section(raw, "experiment")
    _check_keys(exp, {"p", "A", "q_p", "unit_quadratic_mean", "max_value", "K", "theta", "obs_model"}, "experiment")
    fun = _section(raw, "functional")
    _check_keys(fun, {"kind", "component_indices"}, "functional")
    pri = _section(raw, "prior")
    _check_keys(pri, {"kind", "eta", "sigma2", "xi", "d", "reference_target"}, "prior")
    smp = _section(raw, "sampling", required=False)
    _check_keys(smp, {"n_chains", "n_keep", "n_warmup", "base_seed"}, "sampling")

    if "kind" not in fun:
        raise ConfigError("functional.kind", "missing")
    functional = FunctionalSpec(fun["kind"], tuple(fun.get("component_indices", (0, 1))))
    if "kind" not in pri:
        raise ConfigError("prior.kind", "missing")
    target = pri.get("reference_target")
    if pri["kind"] == "reference" and target is None:
        target = functional.kind
    prior = PriorSpec(pri["kind"], pri.get("eta", 1.0), pri.get("sigma2", 300.0), pri.get("xi", 1.0),
                      pri.get("d", 1.0), target)

    obs_raw = exp.get("obs_model", {"kind": "gaussian"})
    if isinstance(obs_raw, str):
        obs_raw = {"kind": obs_raw}
    obs = ObsModel(obs_raw.get("kind", "gaussian"), obs_raw.get("df"))

    priors = raw.get("priors", ())
    if isinstance(priors, str):
        priors = [s for s in priors.split(",") if s]
    if not isinstance(priors, (list, tuple)):
        raise ConfigError("priors", "must be a list of prior kinds")

    bivariate = functional.kind in ("product", "ratio")
    try:
        p = exp["p"] if "p" in exp else (2 if bivariate else None)
        if p is None:
            raise ConfigError("experiment.p", "missing")
        kwargs = dict(
            p=p,
            A=exp.get("A", 0.0),
            q_p=exp.get("q_p", 0),
            prior=prior,
            functional=functional,
            unit_quadratic_mean=bool(exp.get("unit_quadratic_mean", False)),
            max_value=float(exp.get("max_value", 10.0)),
            K=exp.get("K", 100),
            theta_pair=tuple(exp.get("theta", (0.0, 0.0))),
            obs_model=obs,
            priors=tuple(priors),
        )
        for key in ("n_chains", "n_keep", "n_warmup", "base_seed"):
            if key in smp:
                kwargs[key] = smp[key]
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError("$", str(exc)) from None


def load_config(path) -> ExperimentConfig:
    """Read a JSON configuration file; defaults are applied and invariants checked."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("$", f"invalid JSON: {exc}") from None
    return config_from_dict(raw)


def config_to_dict(config: ExperimentConfig) -> dict:
    """JSON-ready echo of a configuration (round-trips through ``config_from_dict``)."""
    pr = config.prior
    prior = {"kind": pr.kind, "eta": pr.eta, "sigma2": pr.sigma2, "xi": pr.xi, "d": pr.d}
    if pr.reference_target is not None:
        prior["reference_target"] = pr.reference_target
    obs = {"kind": config.obs_model.kind}
    if config.obs_model.df is not None:
        obs["df"] = config.obs_model.df
    return {
        "schema_version": SCHEMA_VERSION,
        "experiment": {
            "p": config.p, "A": config.A, "q_p": config.q_p,
            "unit_quadratic_mean": config.unit_quadratic_mean, "max_value": config.max_value,
            "K": config.K, "theta": list(config.theta_pair), "obs_model": obs,
        },
        "functional": {"kind": config.functional.kind,
                       "component_indices": list(config.functional.component_indices)},
        "prior": prior,
        "priors": list(config.priors),
        "sampling": {"n_chains": config.n_chains, "n_keep": config.n_keep,
                     "n_warmup": config.n_warmup, "base_seed": config.base_seed},
    }


def dataset_to_csv(data: Dataset) -> str:
    """CSV text with header ``index,y,theta_true``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "y", "theta_true"])
    for i, (yi, ti) in enumerate(zip(data.y, data.theta_true)):
        w.writerow([i, repr(float(yi)), repr(float(ti))])
    return buf.getvalue()
