"""Lateral vehicle dynamics: linear bicycle prediction model and nonlinear plant.

The prediction model is the classic 2-DOF bicycle with linear tires, state
ordered ``[lat_vel, heading, yaw_rate, lat_pos]``.  The simulation plant keeps
the same single-track structure but uses Pacejka magic-formula axle forces,
exact slip angles and exact body-to-world kinematics, integrated with RK4.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import expm

GRAVITY = 9.81
MIN_LONG_VEL = 0.1
DIVERGENCE_LIMIT = 1e6


class PlantDivergence(RuntimeError):
    """Raised when the simulated plant state leaves any sane range."""


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 1575.0
    yaw_inertia: float = 2875.0
    dist_front: float = 1.2
    dist_rear: float = 1.6
    stiff_front: float = 19000.0
    stiff_rear: float = 33000.0

    def __post_init__(self):
        for name in ("mass", "yaw_inertia", "dist_front", "dist_rear", "stiff_front", "stiff_rear"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def wheelbase(self) -> float:
        return self.dist_front + self.dist_rear


@dataclass(frozen=True)
class TireParams:
    """Magic-formula settings shared by both axles.

    ``b=None`` derives the stiffness factor per axle so that the small-slip
    slope B*C*D equals the axle cornering stiffness ``2*C_y`` of the linear
    model.  Peak force is ``d_scale * mu * axle_load``.
    """

    b: float | None = None
    c: float = 1.9
    e: float = 0.97
    mu: float = 0.9
    d_scale: float = 1.0


@dataclass(frozen=True)
class MagicFormula:
    b: float
    c: float
    d: float
    e: float

    @property
    def cornering_stiffness(self) -> float:
        return self.b * self.c * self.d


@dataclass(frozen=True)
class LateralState:
    lat_vel: float = 0.0
    heading: float = 0.0
    yaw_rate: float = 0.0
    lat_pos: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.lat_vel, self.heading, self.yaw_rate, self.lat_pos])

    @classmethod
    def from_array(cls, x) -> "LateralState":
        return cls(*(float(v) for v in x))


@dataclass(frozen=True)
class PlantState:
    lat_vel: float = 0.0
    heading: float = 0.0
    yaw_rate: float = 0.0
    global_y: float = 0.0
    global_x: float = 0.0
    long_vel: float = 9.0

    @property
    def lateral(self) -> LateralState:
        return LateralState(self.lat_vel, self.heading, self.yaw_rate, self.global_y)


@dataclass(frozen=True)
class ContinuousModel:
    a_mat: np.ndarray
    b_vec: np.ndarray
    c_vec: np.ndarray
    long_vel: float


@dataclass(frozen=True)
class DiscreteModel:
    a_mat: np.ndarray
    b_vec: np.ndarray
    c_vec: np.ndarray
    sample_time: float


def guard_long_vel(long_vel: float) -> float:
    """Clamp a forward speed to the model's singularity limit, warning if needed."""
    if long_vel < MIN_LONG_VEL:
        warnings.warn(f"long_vel {long_vel:.4g} m/s clamped to {MIN_LONG_VEL} m/s", RuntimeWarning, stacklevel=2)
        return MIN_LONG_VEL
    return float(long_vel)


def build_continuous_model(params: VehicleParams, long_vel: float) -> ContinuousModel:
    if not long_vel >= MIN_LONG_VEL:
        raise ValueError(f"long_vel must be >= {MIN_LONG_VEL} m/s, got {long_vel!r}")
    m, iz = params.mass, params.yaw_inertia
    lf, lr = params.dist_front, params.dist_rear
    cf, cr = params.stiff_front, params.stiff_rear
    vx = float(long_vel)

    a = np.zeros((4, 4))
    a[0, 0] = -2.0 * (cf + cr) / (m * vx)
    a[0, 2] = -vx - 2.0 * (cf * lf - cr * lr) / (m * vx)
    a[1, 2] = 1.0
    a[2, 0] = -2.0 * (cf * lf - cr * lr) / (iz * vx)
    a[2, 2] = -2.0 * (cf * lf**2 + cr * lr**2) / (iz * vx)
    a[3, 0] = 1.0
    a[3, 1] = vx
    b = np.array([[2.0 * cf / m], [0.0], [2.0 * cf * lf / iz], [0.0]])
    c = np.array([[0.0, 0.0, 0.0, 1.0]])
    return ContinuousModel(a, b, c, vx)


def discretize(model: ContinuousModel, sample_time: float, method: str = "euler") -> DiscreteModel:
    """Discretize with forward Euler (default) or zero-order hold."""
    if not sample_time > 0:
        raise ValueError(f"sample_time must be > 0, got {sample_time!r}")
    n = model.a_mat.shape[0]
    if method == "euler":
        a_k = np.eye(n) + sample_time * model.a_mat
        b_k = sample_time * model.b_vec
    elif method == "zoh":
        block = np.zeros((n + 1, n + 1))
        block[:n, :n] = model.a_mat
        block[:n, n:] = model.b_vec
        phi = expm(block * sample_time)
        a_k, b_k = phi[:n, :n], phi[:n, n:]
    else:
        raise ValueError(f"unknown discretization method {method!r}")
    return DiscreteModel(a_k, b_k, model.c_vec.copy(), float(sample_time))


def axle_loads(params: VehicleParams) -> tuple[float, float]:
    weight = params.mass * GRAVITY
    return (weight * params.dist_rear / params.wheelbase,
            weight * params.dist_front / params.wheelbase)


def axle_tires(params: VehicleParams, tire: TireParams = TireParams()) -> tuple[MagicFormula, MagicFormula]:
    """Front and rear axle magic-formula coefficients."""
    out = []
    for load, stiff in zip(axle_loads(params), (params.stiff_front, params.stiff_rear)):
        d = tire.d_scale * tire.mu * load
        b = tire.b if tire.b is not None else 2.0 * stiff / (tire.c * d)
        out.append(MagicFormula(b=b, c=tire.c, d=d, e=tire.e))
    return out[0], out[1]


def pacejka_lateral_force(slip_angle, coeffs: MagicFormula):
    ba = coeffs.b * np.asarray(slip_angle, dtype=float)
    force = coeffs.d * np.sin(coeffs.c * np.arctan(ba - coeffs.e * (ba - np.arctan(ba))))
    return float(force) if force.ndim == 0 else force


def _mf(alpha: float, coeffs: MagicFormula) -> float:
    ba = coeffs.b * alpha
    return coeffs.d * math.sin(coeffs.c * math.atan(ba - coeffs.e * (ba - math.atan(ba))))


def _derivative(x, long_vel, steer, wind_force, params, front, rear):
    vy, phi, r, _, _ = x
    lf, lr = params.dist_front, params.dist_rear
    alpha_f = steer - math.atan((vy + lf * r) / long_vel)
    alpha_r = -math.atan((vy - lr * r) / long_vel)
    f_front = _mf(alpha_f, front)
    f_rear = _mf(alpha_r, rear)
    vy_dot = (f_front + f_rear + wind_force) / params.mass - long_vel * r
    r_dot = (lf * f_front - lr * f_rear) / params.yaw_inertia
    sin_phi, cos_phi = math.sin(phi), math.cos(phi)
    return np.array([
        vy_dot,
        r,
        r_dot,
        long_vel * sin_phi + vy * cos_phi,
        long_vel * cos_phi - vy * sin_phi,
    ])


def plant_step(state: PlantState, steer: float, wind_force: float, params: VehicleParams,
               sample_time: float, tire: TireParams = TireParams(),
               tires: tuple[MagicFormula, MagicFormula] | None = None) -> PlantState:
    """Advance the nonlinear single-track plant by one RK4 step.

    Speed is held at ``state.long_vel`` over the step.  Pass precomputed
    ``tires`` from :func:`axle_tires` to skip recomputing them.
    """
    if abs(steer) > math.pi / 2:
        raise ValueError(f"|steer| must be <= pi/2, got {steer!r}")
    vx = guard_long_vel(state.long_vel)
    front, rear = tires if tires is not None else axle_tires(params, tire)
    x = np.array([state.lat_vel, state.heading, state.yaw_rate, state.global_y, state.global_x])
    h = sample_time
    args = (vx, steer, wind_force, params, front, rear)
    k1 = _derivative(x, *args)
    k2 = _derivative(x + 0.5 * h * k1, *args)
    k3 = _derivative(x + 0.5 * h * k2, *args)
    k4 = _derivative(x + h * k3, *args)
    x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x)) or np.max(np.abs(x[:4])) > DIVERGENCE_LIMIT:
        raise PlantDivergence(f"plant state diverged: {x}")
    return replace(state, lat_vel=x[0], heading=x[1], yaw_rate=x[2], global_y=x[3], global_x=x[4], long_vel=vx)
