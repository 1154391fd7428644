"""Closed-loop scenarios: references, speed and wind profiles, controllers, metrics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .adaptation import LookupTable, Scheduler, TunedParams
from .mpc import MpcConfig, MpcController, pure_pursuit_step
from .vehicle import PlantDivergence, PlantState, TireParams, VehicleParams, axle_tires, plant_step

CONTROLLERS = ("ampc", "mpc", "pp")
TRACE_COLUMNS = ("t", "x", "y", "y_ref", "delta_f", "d_delta_f", "yaw_rate", "v_x", "wind",
                 "np", "nc", "q_y", "r_w", "lag_n", "lag_alpha")


def smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def double_lane_change(s, start: float = 30.0, ramp: float = 25.0, plateau: float = 30.0,
                       offset: float = 3.5):
    """Lateral target along the path: 0, smooth ramp to ``offset``, plateau, smooth ramp back."""
    s = np.asarray(s, dtype=float)
    up = smoothstep((s - start) / ramp)
    down = smoothstep((s - start - ramp - plateau) / ramp)
    y = offset * (up - down)
    return float(y) if y.ndim == 0 else y


def sine_path(s, amplitudes=(8.0, 4.0), wavelengths=(200.0, 90.0)):
    s = np.asarray(s, dtype=float)
    y = sum(a * np.sin(2.0 * np.pi * s / w) for a, w in zip(amplitudes, wavelengths))
    return float(y) if np.ndim(y) == 0 else y


@dataclass(frozen=True)
class Reference:
    """Lateral reference ``y_ref(x)`` as a function of longitudinal position."""

    kind: str = "constant"
    options: dict = field(default_factory=dict)

    def __call__(self, s):
        if self.kind == "constant":
            value = float(self.options.get("value", 0.0))
            return value if np.ndim(s) == 0 else np.full(np.shape(s), value)
        if self.kind == "double_lane_change":
            return double_lane_change(s, **self.options)
        if self.kind == "sines":
            return sine_path(s, **self.options)
        raise ValueError(f"unknown reference kind {self.kind!r}")


@dataclass(frozen=True)
class Profile:
    """Piecewise-linear signal of time, held constant outside its breakpoints."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise ValueError("profile needs matching, non-empty times and values")
        if any(b < a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("profile times must be non-decreasing")

    def __call__(self, t: float) -> float:
        return float(np.interp(t, self.times, self.values))

    @classmethod
    def constant(cls, value: float) -> "Profile":
        return cls((0.0,), (float(value),))

    @classmethod
    def gusts(cls, pulses) -> "Profile":
        """Zero baseline with trapezoidal pulses ``(start, width, edge, amplitude)``."""
        times, values = [0.0], [0.0]
        for start, width, edge, amp in sorted(pulses):
            times += [start, start + edge, start + edge + width, start + 2 * edge + width]
            values += [0.0, amp, amp, 0.0]
        return cls(tuple(times), tuple(values))


@dataclass(frozen=True)
class Scenario:
    name: str
    duration: float
    reference: Reference = Reference()
    speed: Profile = Profile.constant(9.0)
    wind: Profile = Profile.constant(0.0)
    initial: PlantState = PlantState()

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("scenario duration must be > 0")
        if min(self.speed.values) < 0.1:
            raise ValueError("scenario speed profile must stay >= 0.1 m/s")

    def speed_at(self, t: float) -> float:
        return self.speed(min(max(t, 0.0), self.duration))

    def wind_at(self, t: float) -> float:
        return self.wind(min(max(t, 0.0), self.duration))

    def path(self, spacing: float = 0.5) -> np.ndarray:
        """Reference polyline covering the distance the scenario can travel."""
        x0 = self.initial.global_x
        reach = max(self.speed.values) * self.duration + 50.0
        xs = np.arange(x0 - 10.0, x0 + reach + spacing, spacing)
        return np.column_stack([xs, self.reference(xs)])


def step_scenario(long_vel: float, offset: float, duration: float = 10.0) -> Scenario:
    """Constant-speed step from the origin to a constant lateral target."""
    return Scenario(f"step_v{long_vel:g}_y{offset:g}", duration, Reference("constant", {"value": offset}),
                    Profile.constant(long_vel), Profile.constant(0.0), PlantState(long_vel=long_vel))


@dataclass(frozen=True)
class SimConfig:
    vehicle: VehicleParams = VehicleParams()
    tire: TireParams = TireParams()
    mpc: MpcConfig = MpcConfig()
    pp_lookahead: float = 6.0
    substeps: int = 10
    # tracking error (m) that counts as loss of the path
    divergence_error: float = 50.0
    # max |y - y_ref| (m) above which a run is flagged degraded
    degraded_error: float = 1.75
    hysteresis: float = 0.1
    min_dwell: float = 0.5


@dataclass
class SimResult:
    scenario: str
    controller: str
    trace: dict[str, np.ndarray]
    diverged: bool
    violations: int
    # controller steps whose QP hessian could not be factorized
    solver_failures: int = 0

    @property
    def error(self) -> np.ndarray:
        return self.trace["y"] - self.trace["y_ref"]

    @property
    def mse(self) -> float:
        return mse(self)

    @property
    def max_abs_error(self) -> float:
        err = self.error
        return float(np.max(np.abs(err))) if err.size else 0.0

    def degraded(self, threshold: float) -> bool:
        return self.diverged or self.max_abs_error > threshold

    def write(self, out_dir):
        import os
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "trace.csv"), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_COLUMNS)
            for row in zip(*(self.trace[c] for c in TRACE_COLUMNS)):
                writer.writerow([repr(float(v)) for v in row])
        with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["mse", "max_abs_error", "violations", "diverged", "solver_failures"])
            writer.writerow([repr(self.mse), repr(self.max_abs_error), self.violations, int(self.diverged),
                             self.solver_failures])


def mse(result: SimResult) -> float:
    err = result.error
    if err.size == 0:
        raise ValueError("cannot compute MSE of an empty trace")
    return float(np.mean(err * err))


def run_scenario(scenario: Scenario, controller: str, cfg: SimConfig = SimConfig(),
                 table: LookupTable | None = None, params: TunedParams | None = None) -> SimResult:
    """Simulate one closed loop at the controller rate ``cfg.mpc.sample_time``.

    ``controller`` is ``ampc`` (scheduled from ``table``), ``mpc`` (fixed
    ``params``, default the base config) or ``pp`` (pure pursuit).
    """
    if controller not in CONTROLLERS:
        raise ValueError(f"unknown controller {controller!r}; expected one of {CONTROLLERS}")
    if controller == "ampc" and table is None:
        raise ValueError("the ampc controller needs a lookup table")
    base = cfg.mpc if params is None else params.apply(cfg.mpc)
    ts = base.sample_time
    h = ts / cfg.substeps
    tires = axle_tires(cfg.vehicle, cfg.tire)
    mpc = MpcController(base, cfg.vehicle) if controller != "pp" else None
    scheduler = Scheduler(table, cfg.hysteresis, cfg.min_dwell) if controller == "ampc" else None
    active = TunedParams.from_config(base)
    path = scenario.path() if controller == "pp" else None

    steps = int(round(scenario.duration / ts))
    rows = {c: [] for c in TRACE_COLUMNS}
    state = PlantState(**{**scenario.initial.__dict__, "long_vel": scenario.speed_at(0.0)})
    prev_u = 0.0
    diverged = False
    violations = 0
    failures = 0
    for k in range(steps):
        t = k * ts
        v = scenario.speed_at(t)
        y_ref = float(scenario.reference(state.global_x))
        if abs(state.global_y - y_ref) > cfg.divergence_error or abs(state.heading) > math.pi / 2:
            diverged = True
            break
        if controller == "pp":
            u = pure_pursuit_step(state, path, cfg.pp_lookahead, cfg.vehicle.wheelbase, base.u_limit)
        else:
            if scheduler is not None:
                entry = scheduler.select(t, v, abs(y_ref - state.global_y))
                if entry.params != active:
                    active = entry.params
                    mpc.configure(active.apply(cfg.mpc))
            u = mpc.step(state.lateral, y_ref, v)
            failures += mpc.last.solver_failed
        du = u - prev_u
        if abs(u) > base.u_limit + 1e-9 or abs(du) > base.du_limit + 1e-9:
            violations += 1
        wind = scenario.wind_at(t)
        for name, value in zip(TRACE_COLUMNS, (
                t, state.global_x, state.global_y, y_ref, u, du, state.yaw_rate, v, wind,
                active.pred_horizon, active.ctrl_horizon, active.weight_track, active.weight_ctrl,
                active.laguerre_terms, active.laguerre_scale)):
            rows[name].append(value)
        prev_u = u
        try:
            for j in range(cfg.substeps):
                state = PlantState(state.lat_vel, state.heading, state.yaw_rate, state.global_y,
                                   state.global_x, scenario.speed_at(t + j * h))
                state = plant_step(state, u, wind, cfg.vehicle, h, tires=tires)
        except PlantDivergence:
            diverged = True
            break
    if controller == "pp":
        for name in ("np", "nc", "q_y", "r_w", "lag_n", "lag_alpha"):
            rows[name] = [0.0] * len(rows["t"])
    trace = {c: np.asarray(rows[c], dtype=float) for c in TRACE_COLUMNS}
    return SimResult(scenario.name, controller, trace, diverged, violations, failures)
