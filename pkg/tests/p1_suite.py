"""Single-observation sampler checks against quadrature truth (shared by two test files)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from glshrink.diagnostics import effective_sample_size
from glshrink.model import Dataset, ExperimentConfig, FunctionalSpec, PriorSpec
from glshrink.samplers import run_posterior
from oracles import p1_posterior_moments

P1_KINDS = ("horseshoe", "horseshoe_plus", "laplace", "vague_normal", "pure_local", "pure_global")
P1_Y = (0.0, 3.0, 10.0)


@dataclass(frozen=True)
class P1Check:
    kind: str
    y: float
    stat: str
    estimate: float
    truth: float
    stderr: float

    @property
    def z(self) -> float:
        return (self.estimate - self.truth) / self.stderr

    @property
    def ok(self) -> bool:
        return abs(self.z) <= 3.0


@lru_cache(maxsize=None)
def p1_checks(kind: str, y: float, n_keep: int = 10000, seed: int = 20160601) -> tuple[P1Check, P1Check]:
    cfg = ExperimentConfig(1, 0.0, 0, PriorSpec(kind), FunctionalSpec("sum_sq"), n_keep=n_keep,
                           n_warmup=1000, base_seed=seed)
    dm = run_posterior(cfg, Dataset([y], [0.0]))
    th = dm.draws[:, :, 0]
    mean_true, var_true = p1_posterior_moments(kind, y)
    se_mean = th.std() / math.sqrt(effective_sample_size(th))
    dev = (th - th.mean()) ** 2
    se_var = dev.std() / math.sqrt(effective_sample_size(dev))
    return (P1Check(kind, y, "mean", float(th.mean()), mean_true, se_mean),
            P1Check(kind, y, "var", float(th.var()), var_true, se_var))


def all_p1_checks() -> list[P1Check]:
    return [c for k in P1_KINDS for y in P1_Y for c in p1_checks(k, y)]
