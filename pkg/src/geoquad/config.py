"""Scenario configuration files.

A scenario is a flat INI file read with :mod:`configparser`; every value is
addressable as ``section.key`` (the form accepted by ``--set``)::

    [sim]
    dt = 0.001
    controller = proposed

    [gains]
    k_R = 5625

Vectors are comma separated.  ``params.J`` takes 3 (diagonal) or 9 values.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from typing import Any, Optional

import numpy as np

from .allocation import AllocationConfig
from .controllers import BenchmarkGains, GainSet
from .dynamics import QuadParams, RigidBodyState
from .errors import ConfigError
from .so3 import exp_so3
from .trajectory import (
    FlightSchedule,
    attitude_step_schedule,
    hover_schedule,
    flip_scenario,
    position_step_schedule,
)

SCENARIOS = ("flip_full", "hover", "step90", "step_position_1cm")
CONTROLLERS = ("proposed", "benchmark")


@dataclass(frozen=True)
class ScenarioSpec:
    name: str = "flip_full"
    waypoint: tuple = (2.0, 0.0, 5.0)
    heading: tuple = (1.0, 0.0, 0.0)
    translate_start: float = 0.5
    translate_end: float = 5.5
    flip_start: float = 6.0
    flip_end: float = 7.0
    return_duration: float = 2.5
    flip_angle: float = 2.0 * np.pi
    step_angle: float = np.pi / 2
    step_target: tuple = (0.01, 0.01, 0.01)


@dataclass(frozen=True)
class InitialState:
    x: tuple = (0.0, 0.0, 0.0)
    v: tuple = (0.0, 0.0, 0.0)
    rotvec: tuple = (0.0, 0.0, 0.0)
    omega: tuple = (0.0, 0.0, 0.0)
    perturb_angle: float = 0.0

    def build(self, seed: int) -> RigidBodyState:
        R = exp_so3(np.array(self.rotvec, dtype=float))
        if self.perturb_angle > 0.0:
            rng = np.random.default_rng(seed)
            axis = rng.normal(size=3)
            R = R @ exp_so3(axis / np.linalg.norm(axis) * self.perturb_angle)
        return RigidBodyState(
            x=np.array(self.x, dtype=float),
            v=np.array(self.v, dtype=float),
            R=R,
            omega=np.array(self.omega, dtype=float),
        )


@dataclass(frozen=True)
class ScenarioConfig:
    params: QuadParams = field(default_factory=QuadParams)
    gains: GainSet = field(default_factory=GainSet)
    benchmark: BenchmarkGains = field(default_factory=BenchmarkGains)
    allocation: AllocationConfig = field(default_factory=AllocationConfig)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    init: InitialState = field(default_factory=InitialState)
    dt: float = 1e-3
    t_final: float = 10.0
    controller: str = "proposed"
    strategy_enabled: bool = True
    fp_enabled: bool = True
    clip_thrusts: bool = False
    rate_mode: str = "analytic"
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("sim.dt must be positive")
        if not self.t_final >= self.dt:
            raise ConfigError("sim.t_final must be at least one step")
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"sim.controller must be one of {CONTROLLERS}")
        if self.scenario.name not in SCENARIOS:
            raise ConfigError(f"scenario.name must be one of {SCENARIOS}")
        if self.rate_mode not in ("analytic", "finite_difference"):
            raise ConfigError("sim.rate_mode must be analytic or finite_difference")

    def schedule(self) -> FlightSchedule:
        """Build the flight schedule; inconsistent timing raises :class:`ConfigError`."""
        try:
            return self._schedule()
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"invalid schedule: {exc}") from exc

    def _schedule(self) -> FlightSchedule:
        sc = self.scenario
        if sc.name == "flip_full":
            return flip_scenario(
                waypoint=sc.waypoint,
                heading=sc.heading,
                translate_start=sc.translate_start,
                translate_end=sc.translate_end,
                flip_start=sc.flip_start,
                flip_end=sc.flip_end,
                t_final=self.t_final,
                return_duration=sc.return_duration,
                flip_angle=sc.flip_angle,
            )
        if sc.name == "hover":
            return hover_schedule(self.t_final, self.init.x)
        if sc.name == "step90":
            return attitude_step_schedule(sc.step_angle, t_final=self.t_final)
        return position_step_schedule(sc.step_target, t_final=self.t_final)

    def initial_state(self) -> RigidBodyState:
        return self.init.build(self.seed)


# --- presets -----------------------------------------------------------------


def preset(name: str) -> ScenarioConfig:
    """Shipped scenarios: ``hover``, ``step90``, ``step_position_1cm``, ``flip_full``."""
    if name == "flip_full":
        return ScenarioConfig()
    if name == "hover":
        return ScenarioConfig(scenario=ScenarioSpec(name="hover"), t_final=1.0, strategy_enabled=False)
    if name == "step90":
        return ScenarioConfig(scenario=ScenarioSpec(name="step90"), t_final=2.0, strategy_enabled=False)
    if name == "step_position_1cm":
        return ScenarioConfig(
            scenario=ScenarioSpec(name="step_position_1cm"), t_final=2.0, strategy_enabled=False
        )
    raise ConfigError(f"unknown preset {name!r}; choose from {SCENARIOS}")


# --- (de)serialisation -------------------------------------------------------

_SECTIONS = {
    "params": QuadParams,
    "gains": GainSet,
    "benchmark": BenchmarkGains,
    "allocation": AllocationConfig,
    "scenario": ScenarioSpec,
    "init": InitialState,
}
_SIM_KEYS = ("dt", "t_final", "controller", "strategy_enabled", "fp_enabled", "clip_thrusts", "rate_mode", "seed")


def _fmt(value: Any) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return value
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 2:
        if np.count_nonzero(arr - np.diag(np.diag(arr))) == 0:
            arr = np.diag(arr)
        else:
            arr = arr.ravel()
    return ", ".join(repr(float(v)) for v in arr.ravel())


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _parse_vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.replace("[", "").replace("]", "").split(",") if v.strip()])
    except ValueError as exc:
        raise ConfigError(f"not a vector: {text!r}") from exc


def _coerce(default: Any, text: str, key: str):
    try:
        if isinstance(default, bool):
            return _parse_bool(text)
        if isinstance(default, (int, np.integer)) and not isinstance(default, bool):
            return int(text)
        if isinstance(default, str):
            return text.strip()
        if default is None or isinstance(default, (float, np.floating)):
            if default is None and text.strip().lower() in ("auto", "none", ""):
                return None
            return float(text)
        arr = np.asarray(default)
        vec = _parse_vector(text)
        if arr.ndim == 2:
            if vec.size == 3:
                return np.diag(vec)
            if vec.size == 9:
                return vec.reshape(3, 3)
            raise ConfigError(f"{key}: expected 3 or 9 values")
        if vec.size != arr.size:
            raise ConfigError(f"{key}: expected {arr.size} values, got {vec.size}")
        return tuple(vec) if isinstance(default, tuple) else vec
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {text!r}") from exc


def _public_fields(cls):
    return [f for f in fields(cls) if f.init]


def to_mapping(cfg: ScenarioConfig) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {"sim": {k: _fmt(getattr(cfg, k)) for k in _SIM_KEYS}}
    for section in _SECTIONS:
        obj = getattr(cfg, section)
        out[section] = {f.name: _fmt(getattr(obj, f.name)) for f in _public_fields(type(obj))}
    return out


def dumps(cfg: ScenarioConfig) -> str:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_dict(to_mapping(cfg))
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def apply_overrides(cfg: ScenarioConfig, values: dict[str, dict[str, str]]) -> ScenarioConfig:
    """Return ``cfg`` with ``{section: {key: text}}`` values parsed in."""
    sim_kw = {}
    section_objs = {name: getattr(cfg, name) for name in _SECTIONS}
    for section, items in values.items():
        for key, text in items.items():
            dotted = f"{section}.{key}"
            if section == "sim":
                if key not in _SIM_KEYS:
                    raise ConfigError(f"unknown key {dotted}")
                sim_kw[key] = _coerce(getattr(cfg, key), text, dotted)
            elif section in _SECTIONS:
                obj = section_objs[section]
                names = {f.name for f in _public_fields(type(obj))}
                if key not in names:
                    raise ConfigError(f"unknown key {dotted}")
                try:
                    section_objs[section] = replace(obj, **{key: _coerce(getattr(obj, key), text, dotted)})
                except (ValueError, TypeError) as exc:
                    raise ConfigError(f"{dotted}: {exc}") from exc
            else:
                raise ConfigError(f"unknown section [{section}]")
    try:
        return replace(cfg, **section_objs, **sim_kw)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def loads(text: str, base: Optional[ScenarioConfig] = None) -> ScenarioConfig:
    """Parse INI text on top of ``base`` (or the preset named by ``scenario.name``)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    values = {s: dict(cp.items(s)) for s in cp.sections()}
    if base is None:
        name = values.get("scenario", {}).get("name", "flip_full").strip()
        base = preset(name)
    return apply_overrides(base, values)


def load(path) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def parse_set(items: list[str]) -> dict[str, dict[str, str]]:
    """Turn ``["gains.k_R=5000", ...]`` into ``{"gains": {"k_R": "5000"}}``."""
    out: dict[str, dict[str, str]] = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        if "." not in lhs:
            raise ConfigError(f"override key must be dotted, got {lhs!r}")
        section, key = lhs.strip().split(".", 1)
        out.setdefault(section, {})[key] = value
    return out
