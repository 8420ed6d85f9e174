import json
import math

import pytest

from cavcool.config import (ConfigError, apply_overrides, config_from_dict, evaluate, load_config,
                            set_path)

BASE = {
    "params": {"n_particles": 20, "kappa": 40, "delta_c": "-kappa"},
    "vars": {"alpha0": 50, "e0": "kappa/4", "v0": "2*alpha0*e0", "t_ramp": 10},
    "model": "full",
    "initial": {"alpha": "alpha0", "e_kin": "e0"},
    "stages": [{"kind": "exp_ramp", "v0": "v0", "t_ramp": "t_ramp"}],
    "trajectories": "400/n",
    "seed": 3,
}


def test_expression_names_and_derived_quantities():
    cfg = config_from_dict(BASE)
    assert cfg.params.delta_c == -40.0
    assert cfg.initial.e_kin == 10.0 and cfg.initial.alpha == 50
    assert cfg.stages[0].schedule.v0 == 1000.0
    assert cfg.stages[0].duration == 10.0
    assert cfg.trajectories == 20
    raw = dict(BASE, vars={**BASE["vars"], "a": "v_opt", "b": "e_fer", "c": "e_cav", "d": "sqrt(16)*pi"})
    c2 = config_from_dict(raw)
    v = c2.raw["_resolved_vars"]
    assert v["a"] == 200.0 and v["b"] == 20.0 and v["c"] == 10.0
    assert v["d"] == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("expr", ["__import__('os')", "kappa.real", "[1]", "lambda: 1", "1 if 1 else 2"])
def test_evaluator_rejects_non_arithmetic(expr):
    with pytest.raises(ConfigError):
        evaluate(expr, {"kappa": 1.0})


def test_evaluator_errors_name_the_field():
    with pytest.raises(ConfigError, match="stages.0.v0"):
        config_from_dict(set_path(BASE, "stages.0.v0", "missing*2"))
    with pytest.raises(ConfigError, match="params"):
        config_from_dict(set_path(BASE, "params.kappa", -1))
    with pytest.raises(ConfigError):
        evaluate(True, {})


@pytest.mark.parametrize("path,value", [
    ("model", "quantum"), ("trajectories", 0), ("stages", []), ("extra_key", 1),
    ("stages.0.kind", "cubic"), ("params.n_particles", 2.5),
])
def test_invalid_documents(path, value):
    with pytest.raises(ConfigError):
        config_from_dict(set_path(BASE, path, value))


def test_hold_stage_needs_duration():
    with pytest.raises(ConfigError, match="duration"):
        config_from_dict(set_path(BASE, "stages.0", {"kind": "hold", "v0": 1}))


def test_piecewise_stage():
    stage = {"kind": "piecewise", "segments": [
        {"kind": "hold", "v0": "v_opt", "duration": 5},
        {"kind": "exp_ramp", "v0": "v_opt", "t_ramp": 2}]}
    cfg = config_from_dict(set_path(BASE, "stages.0", stage))
    assert cfg.stages[0].duration == 7.0
    assert cfg.stages[0].schedule.value(6.0) == pytest.approx(200 * 10 ** -2.5)


def test_overrides_and_bare_names():
    raw = apply_overrides(BASE, ["t_ramp=30", "kappa=400", "seed=9", "stages.0.decades=3",
                                 "integrator.dt=1e-4"])
    cfg = config_from_dict(raw)
    assert cfg.stages[0].duration == 30.0 and cfg.params.kappa == 400.0
    assert cfg.base_seed == 9 and cfg.stages[0].schedule.decades == 3
    assert cfg.integrator.dt == 1e-4
    assert BASE["vars"]["t_ramp"] == 10  # input untouched
    with pytest.raises(ConfigError):
        apply_overrides(BASE, ["no_equals_sign"])


def test_summary_documents_are_accepted():
    assert config_from_dict({"config": BASE}).trajectories == 20


def test_load_config_reports_line(tmp_path):
    good = tmp_path / "a.json"
    good.write_text(json.dumps(BASE))
    assert load_config(good) == BASE
    bad = tmp_path / "b.json"
    bad.write_text('{\n  "params": {,\n}')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(bad)
