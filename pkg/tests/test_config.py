from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from geoquad import ScenarioConfig, preset
from geoquad.config import SCENARIOS, apply_overrides, dumps, load, loads, parse_set
from geoquad.errors import ConfigError


@pytest.mark.parametrize("name", SCENARIOS)
def test_presets_round_trip(name):
    cfg = preset(name)
    again = loads(dumps(cfg))
    assert dumps(again) == dumps(cfg)
    assert again.scenario == cfg.scenario
    assert again.t_final == cfg.t_final
    assert np.array_equal(again.params.J, cfg.params.J)


def test_flip_defaults():
    cfg = preset("flip_full")
    assert cfg.dt == 1e-3 and cfg.t_final == 10.0
    assert cfg.strategy_enabled and cfg.fp_enabled
    assert cfg.rate_mode == "analytic"


def test_unknown_preset():
    with pytest.raises(ConfigError):
        preset("loop")


def test_overrides():
    cfg = apply_overrides(preset("hover"), parse_set(["gains.k_R=5000", "params.J=0.1,0.1,0.2", "sim.seed=3"]))
    assert cfg.gains.k_R == 5000.0
    assert np.allclose(cfg.params.J, np.diag([0.1, 0.1, 0.2]))
    assert np.allclose(cfg.params.J_inv, np.diag([10.0, 10.0, 5.0]))
    assert cfg.seed == 3
    cfg = apply_overrides(cfg, parse_set(["allocation.f_idl=auto", "benchmark.k_R=1,2,3"]))
    assert cfg.allocation.f_idl is None
    assert np.allclose(cfg.benchmark.k_R, np.diag([1.0, 2.0, 3.0]))


@pytest.mark.parametrize(
    "item",
    [
        "gains.k_R=abc",
        "gains.nope=1",
        "bogus.k=1",
        "sim.controller=pid",
        "sim.dt=-1",
        "gains.k_R=-5",
        "params.J=1,2",
        "sim.strategy_enabled=maybe",
        "scenario.name=loop",
    ],
)
def test_bad_overrides_raise_config_error(item):
    with pytest.raises(ConfigError):
        apply_overrides(preset("flip_full"), parse_set([item]))


def test_parse_set_validation():
    with pytest.raises(ConfigError):
        parse_set(["no_equals"])
    with pytest.raises(ConfigError):
        parse_set(["nodot=1"])


def test_malformed_file():
    with pytest.raises(ConfigError):
        loads("this is not ini")


def test_load_from_file(tmp_path):
    path = tmp_path / "s.ini"
    path.write_text("[scenario]\nname = step90\n\n[sim]\nt_final = 0.5\n")
    cfg = load(path)
    assert cfg.scenario.name == "step90"
    assert cfg.t_final == 0.5
    assert not cfg.strategy_enabled  # inherited from the step90 preset


def test_bad_schedule_is_config_error():
    cfg = replace(preset("flip_full"), t_final=6.5)
    with pytest.raises(ConfigError):
        cfg.schedule()


def test_initial_perturbation_is_seeded():
    cfg = apply_overrides(preset("hover"), parse_set(["init.perturb_angle=0.1"]))
    a = cfg.initial_state().R
    assert np.array_equal(a, cfg.initial_state().R)
    assert not np.array_equal(a, replace(cfg, seed=1).initial_state().R)
    assert not np.allclose(a, np.eye(3))


def test_validation_in_constructor():
    with pytest.raises(ConfigError):
        ScenarioConfig(rate_mode="spline")
