"""YAML configuration files for vehicle, controller, tuner and scenarios."""
from __future__ import annotations

from dataclasses import dataclass

import yaml

from .adaptation import DEFAULT_OFFSETS, DEFAULT_SPEEDS
from .mpc import MpcConfig
from .pso import TUNE_BOUNDS, PsoHyper, StepManeuver
from .sim import Profile, Reference, Scenario, SimConfig
from .vehicle import PlantState, TireParams, VehicleParams

VEHICLE_KEYS = ("mass", "yaw_inertia", "dist_front", "dist_rear", "stiff_front", "stiff_rear")
MPC_KEYS = {
    "np": "pred_horizon", "nc": "ctrl_horizon", "q_y": "weight_track", "r": "weight_ctrl",
    "laguerre_n": "laguerre_terms", "laguerre_alpha": "laguerre_scale", "du_max": "du_limit",
    "u_max": "u_limit", "y_max": "y_limit", "ts": "sample_time", "check_window": "check_window",
    "discretization": "discretization", "max_iter": "max_iter", "tol": "tol",
}
PSO_KEYS = {
    "generations": "generations", "population": "population", "w_max": "w_max", "w_min": "w_min",
    "w_damp": "w_damp", "c1": "c1_init", "c2": "c2_init", "lambda1": "lambda1", "lambda2": "lambda2",
    "variant": "variant", "seed": "seed", "gbest_update": "gbest_update",
}
TUNE_BOUND_KEYS = ("np", "nc", "q_y", "r", "laguerre_n", "laguerre_alpha")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Settings:
    sim: SimConfig = SimConfig()
    pso: PsoHyper = PsoHyper()
    maneuver: StepManeuver = StepManeuver()
    tune_bounds: tuple = TUNE_BOUNDS


def _read(path) -> dict:
    try:
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return doc


def _mapped(section: dict, keys: dict, where: str) -> dict:
    unknown = set(section) - set(keys)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    return {keys[k]: v for k, v in section.items()}


def settings_from_doc(doc: dict) -> Settings:
    try:
        vehicle = VehicleParams(**{k: float(doc[k]) for k in VEHICLE_KEYS if k in doc})
        tire = TireParams(**doc.get("pacejka", {}))
        mpc = MpcConfig(**_mapped(doc.get("mpc", {}), MPC_KEYS, "mpc"))
        pp = doc.get("pp", {})
        sim = SimConfig(vehicle, tire, mpc, pp_lookahead=float(pp.get("lookahead", 6.0)), **doc.get("sim", {}))
        pso = PsoHyper(**_mapped(doc.get("pso", {}), PSO_KEYS, "pso"))
        tune = dict(doc.get("tune", {}))
        bounds_doc = tune.pop("bounds", {})
        bounds = tuple(tuple(float(v) for v in bounds_doc.get(k, default))
                       for k, default in zip(TUNE_BOUND_KEYS, TUNE_BOUNDS))
        maneuver = StepManeuver(duration=float(tune.pop("maneuver_duration", 10.0)),
                                min_offset=float(tune.pop("min_offset", 0.5)))
        if tune:
            raise ConfigError(f"tune: unknown keys {sorted(tune)}")
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    return Settings(sim, pso, maneuver, bounds)


def load_settings(path=None) -> Settings:
    return Settings() if path is None else settings_from_doc(_read(path))


def load_grid(path) -> tuple[tuple[float, ...], tuple[float, ...]]:
    doc = _read(path)
    speeds = tuple(float(v) for v in doc.get("speeds", DEFAULT_SPEEDS))
    offsets = tuple(float(v) for v in doc.get("offsets", DEFAULT_OFFSETS))
    return speeds, offsets


def _profile(doc, default: float) -> Profile:
    if doc is None:
        return Profile.constant(default)
    if isinstance(doc, (int, float)):
        return Profile.constant(float(doc))
    if "gusts" in doc:
        return Profile.gusts([(g["start"], g["width"], g["edge"], g["amplitude"]) for g in doc["gusts"]])
    return Profile(tuple(float(t) for t in doc["times"]), tuple(float(v) for v in doc["values"]))


def scenario_from_doc(doc: dict) -> Scenario:
    ref = dict(doc.get("reference", {"kind": "constant"}))
    kind = ref.pop("kind")
    speed = _profile(doc.get("speed"), 9.0)
    initial = PlantState(**{**doc.get("initial", {}), "long_vel": speed(0.0)})
    return Scenario(str(doc.get("name", "scenario")), float(doc["duration"]), Reference(kind, ref), speed,
                    _profile(doc.get("wind"), 0.0), initial)


def load_scenario(path) -> Scenario:
    try:
        return scenario_from_doc(_read(path))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
