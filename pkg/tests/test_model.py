import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from glshrink.model import (PRIOR_KINDS, ConfigError, ConstraintViolationError, Dataset, ExperimentConfig,
                            FunctionalSpec, InvariantError, NonPositiveScaleError, ObsModel, PriorSpec,
                            UnknownKindError, config_from_dict, config_to_dict, dataset_to_csv,
                            generate_dataset, load_config)


def _raw(**over):
    raw = {
        "experiment": {"p": 100, "A": 10, "q_p": 1},
        "functional": {"kind": "sum_sq"},
        "prior": {"kind": "horseshoe"},
    }
    for k, v in over.items():
        raw[k] = v
    return raw


def test_minimal_config_defaults():
    cfg = config_from_dict(_raw())
    assert (cfg.n_chains, cfg.n_keep, cfg.n_warmup) == (4, 2500, 2500)
    assert cfg.priors == ("horseshoe",)
    assert cfg.prior.eta == 1.0 and cfg.prior.sigma2 == 300.0
    assert cfg.experiment == "sum_sq"


def test_round_trip_through_json(tmp_path):
    cfg = config_from_dict(_raw(priors=list(PRIOR_KINDS), sampling={"n_keep": 500, "base_seed": 9}))
    path = tmp_path / "c.json"
    path.write_text(json.dumps(config_to_dict(cfg)))
    assert load_config(path) == cfg


@pytest.mark.parametrize("raw,field", [
    (_raw(prior={"kind": "cauchy"}), "prior.kind"),
    (_raw(functional={"kind": "median"}), "functional.kind"),
    (_raw(prior={"kind": "horseshoe", "eta": 0}), "prior.eta"),
    (_raw(prior={"kind": "horseshoe", "sigma2": -1}), "prior.sigma2"),
    (_raw(experiment={"p": 10, "A": 1, "q_p": 11}), "experiment.q_p"),
    (_raw(sampling={"n_keep": 50}), "sampling.n_keep"),
    (_raw(sampling={"n_chains": 0}), "sampling.n_chains"),
    (_raw(experiment={"p": 100, "A": 1, "q_p": 1, "bogus": 2}), "experiment.bogus"),
    (_raw(functional={"kind": "max"}, prior={"kind": "reference"}), "prior.reference_target"),
    (_raw(functional={"kind": "max"}, priors=["horseshoe", "reference"]), "prior.kind"),
    (_raw(priors=["horseshoe", "lasso"]), "priors[1]"),
    (_raw(experiment={"p": 3, "obs_model": {"kind": "student_t", "df": 3}}), "experiment.obs_model"),
    ({"functional": {"kind": "sum_sq"}, "prior": {"kind": "horseshoe"}}, "experiment"),
])
def test_invalid_configs_name_the_field(raw, field):
    with pytest.raises(ConfigError) as info:
        config_from_dict(raw)
    assert info.value.field == field


def test_error_subclasses():
    with pytest.raises(UnknownKindError):
        PriorSpec("nope")
    with pytest.raises(NonPositiveScaleError):
        PriorSpec("horseshoe", eta=-2.0)
    with pytest.raises(InvariantError):
        PriorSpec("reference")
    with pytest.raises(InvariantError):
        PriorSpec("horseshoe", reference_target="sum_sq")
    with pytest.raises(InvariantError):
        FunctionalSpec("ratio", (1, 1))


def test_invalid_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_reference_target_defaults_to_functional():
    cfg = config_from_dict(_raw(functional={"kind": "product"}, experiment={"K": 50}, prior={"kind": "reference"}))
    assert cfg.prior.reference_target == "product"
    assert cfg.p == 2 and cfg.is_bivariate


def test_prior_for_carries_hyperparameters():
    cfg = config_from_dict(_raw(prior={"kind": "horseshoe", "eta": 2.5, "sigma2": 50}))
    pr = cfg.prior_for("reference")
    assert pr.reference_target == "sum_sq" and pr.eta == 2.5 and pr.sigma2 == 50


# ------------------------------------------------------------- datasets

def test_sum_sq_dataset_layout():
    cfg = config_from_dict(_raw())
    d = generate_dataset(cfg)
    assert d.p == 100
    assert d.theta_true[0] == 10 and np.all(d.theta_true[1:] == 0)
    assert math.fsum(d.theta_true ** 2) == 100
    assert d.sum_sq == pytest.approx(float(np.sum(d.y ** 2)), rel=1e-14)
    # same seed, same data
    assert np.array_equal(generate_dataset(cfg).y, d.y)
    with pytest.raises(ValueError):
        d.y[0] = 1.0


def test_dataset_noise_is_standard_normal():
    cfg = ExperimentConfig(5000, 0.0, 0, PriorSpec("horseshoe"), FunctionalSpec("sum_sq"), base_seed=11)
    y = generate_dataset(cfg).y
    assert stats.kstest(y, "norm").pvalue > 1e-3


def test_unit_quadratic_mean_constraint():
    ok = ExperimentConfig(100, 1.0, 100, PriorSpec("horseshoe"), FunctionalSpec("sum_sq"), unit_quadratic_mean=True)
    assert math.fsum(generate_dataset(ok).theta_true ** 2) == 100
    bad = ExperimentConfig(100, 2.0, 10, PriorSpec("horseshoe"), FunctionalSpec("sum_sq"), unit_quadratic_mean=True)
    with pytest.raises(ConstraintViolationError):
        generate_dataset(bad)


def test_max_dataset_fixes_last_observation():
    cfg = config_from_dict(_raw(functional={"kind": "max"}, experiment={"p": 100, "max_value": 10}))
    d = generate_dataset(cfg)
    assert d.y[-1] == 10.0 and d.theta_true[-1] == 10.0


@pytest.mark.parametrize("obs", [{"kind": "gaussian"}, {"kind": "student_t", "df": 3}])
def test_bivariate_dataset(obs):
    cfg = config_from_dict(_raw(functional={"kind": "ratio"}, experiment={"K": 100, "theta": [1, 2], "obs_model": obs}))
    d = generate_dataset(cfg)
    assert d.replicates.shape == (100, 2)
    assert np.allclose(d.y, d.replicates.mean(axis=0))
    assert d.K == 100 and d.obs_model.kind == obs["kind"]
    assert d.summary()["K"] == 100


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset([1.0, np.nan], [0.0, 0.0])
    with pytest.raises(ValueError):
        Dataset([1.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        Dataset([0.0, 0.0], [0.0, 0.0], ObsModel("student_t", 3))


def test_dataset_csv():
    d = Dataset([1.5, -2.0], [0.0, 1.0])
    assert dataset_to_csv(d).splitlines() == ["index,y,theta_true", "0,1.5,0.0", "1,-2.0,1.0"]


@given(seed=st.integers(0, 2**64 - 1))
@settings(max_examples=25, deadline=None)
def test_any_64bit_seed_is_accepted(seed):
    cfg = ExperimentConfig(3, 1.0, 1, PriorSpec("horseshoe"), FunctionalSpec("sum_sq"), base_seed=seed)
    assert generate_dataset(cfg).y.shape == (3,)
