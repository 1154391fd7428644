"""Laguerre-parameterized MPC for lateral path tracking, plus pure pursuit.

Each step the bicycle model is rebuilt at the current forward speed,
discretized, augmented with an integrator on the output and turned into a
QP over the Laguerre coefficients ``eta``.  Only the first increment
``L(0) @ eta`` is applied.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import toeplitz

from .laguerre import LaguerreBasis, basis_sequence, build_basis
from .qp import DEFAULT_MAX_ITER, DEFAULT_TOL, NotPositiveDefinite, QpProblem, QpSolution, solve_hildreth
from .vehicle import (
    DiscreteModel,
    LateralState,
    PlantState,
    VehicleParams,
    build_continuous_model,
    discretize,
    guard_long_vel,
)


@dataclass(frozen=True)
class MpcConfig:
    pred_horizon: int = 45
    ctrl_horizon: int = 15
    weight_track: float = 10.0
    weight_ctrl: float = 0.01
    laguerre_terms: int = 5
    laguerre_scale: float = 0.75
    du_limit: float = math.pi / 12
    u_limit: float = math.pi / 6
    y_limit: float | None = None
    sample_time: float = 0.1
    # constraint rows cover the first ``check_window`` steps (None: ctrl_horizon)
    check_window: int | None = None
    discretization: str = "euler"
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        for name in ("pred_horizon", "ctrl_horizon", "laguerre_terms"):
            value = getattr(self, name)
            if int(value) != value:
                raise ValueError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if not 1 <= self.ctrl_horizon <= self.pred_horizon:
            raise ValueError(f"need 1 <= ctrl_horizon <= pred_horizon, got N_c={self.ctrl_horizon}, "
                             f"N_p={self.pred_horizon}")
        if not 1 <= self.laguerre_terms <= self.ctrl_horizon:
            raise ValueError(f"need 1 <= laguerre_terms <= ctrl_horizon, got N={self.laguerre_terms}, "
                             f"N_c={self.ctrl_horizon}")
        if not (self.weight_track > 0 and self.weight_ctrl > 0):
            raise ValueError("weights must be > 0")
        if not 0.0 <= self.laguerre_scale < 1.0:
            raise ValueError(f"laguerre_scale must lie in [0, 1), got {self.laguerre_scale!r}")
        limits = [self.du_limit, self.u_limit, self.sample_time]
        if self.y_limit is not None:
            limits.append(self.y_limit)
        if not all(v > 0 for v in limits):
            raise ValueError("limits and sample_time must be > 0")
        if self.check_window is not None and not 1 <= self.check_window <= self.ctrl_horizon:
            raise ValueError("check_window must lie in [1, ctrl_horizon]")

    @property
    def window(self) -> int:
        return self.check_window if self.check_window is not None else self.ctrl_horizon

    def with_tuning(self, pred_horizon, ctrl_horizon, weight_track, weight_ctrl, laguerre_terms,
                    laguerre_scale) -> "MpcConfig":
        return replace(self, pred_horizon=pred_horizon, ctrl_horizon=ctrl_horizon, weight_track=weight_track,
                       weight_ctrl=weight_ctrl, laguerre_terms=laguerre_terms, laguerre_scale=laguerre_scale,
                       check_window=None)


@dataclass(frozen=True)
class AugmentedModel:
    a_aug: np.ndarray
    b_aug: np.ndarray
    c_aug: np.ndarray


@dataclass(frozen=True)
class PredictionMatrices:
    f_mat: np.ndarray
    phi_mat: np.ndarray
    ref_vec: np.ndarray


def augment(model: DiscreteModel) -> AugmentedModel:
    a, b, c = np.atleast_2d(model.a_mat), np.atleast_2d(model.b_vec), np.atleast_2d(model.c_vec)
    n, q = a.shape[0], c.shape[0]
    b = b.reshape(n, -1)
    a_aug = np.zeros((n + q, n + q))
    a_aug[:n, :n] = a
    a_aug[n:, :n] = c @ a
    a_aug[n:, n:] = np.eye(q)
    b_aug = np.vstack([b, c @ b])
    c_aug = np.hstack([np.zeros((q, n)), np.eye(q)])
    return AugmentedModel(a_aug, b_aug, c_aug)


def build_prediction(aug: AugmentedModel, cfg: MpcConfig, setpoint: float) -> PredictionMatrices:
    np_, nc = cfg.pred_horizon, cfg.ctrl_horizon
    dim = aug.a_aug.shape[0]
    f_mat = np.empty((np_, dim))
    impulse = np.empty(np_)
    row = aug.c_aug.reshape(1, -1)  # C A^i
    for i in range(np_):
        impulse[i] = (row @ aug.b_aug).item()
        row = row @ aug.a_aug
        f_mat[i] = row
    phi = toeplitz(impulse, np.zeros(nc))
    ref = np.full(np_, float(setpoint))
    return PredictionMatrices(f_mat, phi, ref)


def build_qp(pred: PredictionMatrices, basis: LaguerreBasis, cfg: MpcConfig, aug_state,
             prev_control: float) -> QpProblem:
    np_, nc = cfg.pred_horizon, cfg.ctrl_horizon
    x_aug = np.asarray(aug_state, dtype=float).reshape(-1)
    if pred.phi_mat.shape != (np_, nc) or pred.f_mat.shape != (np_, x_aug.shape[0]):
        raise ValueError(f"prediction matrices {pred.phi_mat.shape}/{pred.f_mat.shape} do not match "
                         f"N_p={np_}, N_c={nc}, state dim {x_aug.shape[0]}")
    t_l = basis_sequence(basis, nc)
    phi_t = pred.phi_mat @ t_l
    q, r = cfg.weight_track, cfg.weight_ctrl
    hess = q * phi_t.T @ phi_t + r * t_l.T @ t_l
    hess = 0.5 * (hess + hess.T)
    free_error = pred.ref_vec - pred.f_mat @ x_aug
    lin = -q * phi_t.T @ free_error

    w = cfg.window
    inc = t_l[:w]
    cum = np.cumsum(inc, axis=0)
    rows = [inc, -inc, cum, -cum]
    bounds = [np.full(w, cfg.du_limit), np.full(w, cfg.du_limit),
              np.full(w, cfg.u_limit - prev_control), np.full(w, cfg.u_limit + prev_control)]
    if cfg.y_limit is not None:
        y_free = pred.f_mat @ x_aug
        rows += [phi_t, -phi_t]
        bounds += [cfg.y_limit - y_free, cfg.y_limit + y_free]
    return QpProblem(hess, lin, np.vstack(rows), np.concatenate(bounds))


def prediction_model(params: VehicleParams, cfg: MpcConfig, long_vel: float) -> DiscreteModel:
    return discretize(build_continuous_model(params, long_vel), cfg.sample_time, cfg.discretization)


@dataclass(frozen=True)
class ControllerState:
    prev_control: float = 0.0
    prev_state: np.ndarray | None = None


@dataclass(frozen=True)
class StepDiagnostics:
    increment: float
    iterations: int
    converged: bool
    clipped: bool
    eta: np.ndarray = field(repr=False)
    # the hessian could not be factorized; the previous command was held
    solver_failed: bool = False


def control_step(ctrl: ControllerState, measurement: LateralState, setpoint: float, long_vel: float,
                 cfg: MpcConfig, params: VehicleParams,
                 basis: LaguerreBasis | None = None) -> tuple[float, ControllerState, StepDiagnostics]:
    """One receding-horizon step; returns (steer, next controller state, diagnostics)."""
    long_vel = guard_long_vel(long_vel)
    if basis is None:
        basis = build_basis(cfg.laguerre_scale, cfg.laguerre_terms)
    x = measurement.as_array()
    prev_x = x if ctrl.prev_state is None else ctrl.prev_state
    prev_u = float(np.clip(ctrl.prev_control, -cfg.u_limit, cfg.u_limit))

    model = prediction_model(params, cfg, long_vel)
    aug = augment(model)
    x_aug = np.concatenate([x - prev_x, (model.c_vec @ x).reshape(-1)])
    pred = build_prediction(aug, cfg, setpoint)
    problem = build_qp(pred, basis, cfg, x_aug, prev_u)
    try:
        sol: QpSolution = solve_hildreth(problem, cfg.max_iter, cfg.tol)
    except NotPositiveDefinite:
        # e.g. the Euler model is unstable at very low speed and E is numerically singular
        eta = np.zeros(problem.n_vars)
        return prev_u, ControllerState(prev_u, x), StepDiagnostics(0.0, 0, False, False, eta, True)

    du = float(basis.initial_vec @ sol.primal)
    if not math.isfinite(du):
        du = 0.0
    du_applied = min(max(du, -cfg.du_limit), cfg.du_limit)
    u = min(max(prev_u + du_applied, -cfg.u_limit), cfg.u_limit)
    du_applied = u - prev_u
    clipped = abs(du_applied - du) > 1e-12
    diag = StepDiagnostics(du_applied, sol.iterations, sol.converged, clipped, sol.primal)
    return u, ControllerState(u, x), diag


class MpcController:
    """Stateful wrapper around :func:`control_step`.

    ``configure`` swaps tuning parameters while keeping the previous control
    and previous measured state, as the gain scheduler needs.
    """

    def __init__(self, cfg: MpcConfig, params: VehicleParams):
        self.params = params
        self.state = ControllerState()
        self.last = None
        self.configure(cfg)

    def configure(self, cfg: MpcConfig):
        self.cfg = cfg
        self.basis = build_basis(cfg.laguerre_scale, cfg.laguerre_terms)

    def reset(self, prev_control: float = 0.0):
        self.state = ControllerState(prev_control)

    def step(self, measurement: LateralState, setpoint: float, long_vel: float) -> float:
        u, self.state, self.last = control_step(self.state, measurement, setpoint, long_vel, self.cfg,
                                                self.params, self.basis)
        return u


def _lookahead_point(path: np.ndarray, pos: np.ndarray, lookahead: float) -> np.ndarray:
    start = int(np.argmin(np.sum((path - pos) ** 2, axis=1)))
    for i in range(start, len(path) - 1):
        p, d = path[i], path[i + 1] - path[i]
        if np.linalg.norm(path[i + 1] - pos) < lookahead:
            continue
        # first intersection of the segment with the lookahead circle
        f = p - pos
        a, b, c = d @ d, 2.0 * f @ d, f @ f - lookahead**2
        disc = b * b - 4.0 * a * c
        if a > 0 and disc >= 0:
            t = (-b + math.sqrt(disc)) / (2.0 * a)
            if 0.0 <= t <= 1.0:
                return p + t * d
        return path[i + 1]
    return path[-1]


def pure_pursuit_step(plant: PlantState, path, lookahead: float = 6.0, wheelbase: float = 2.8,
                      u_limit: float = math.pi / 6) -> float:
    if not lookahead > 0:
        raise ValueError(f"lookahead must be > 0, got {lookahead!r}")
    path = np.asarray(path, dtype=float).reshape(-1, 2)
    if len(path) == 0:
        raise ValueError("pure pursuit needs a non-empty path")
    pos = np.array([plant.global_x, plant.global_y])
    target = _lookahead_point(path, pos, lookahead)
    dx, dy = target - pos
    if dx == 0.0 and dy == 0.0:
        return 0.0
    alpha = math.atan2(dy, dx) - plant.heading
    delta = math.atan(2.0 * wheelbase * math.sin(alpha) / lookahead)
    return min(max(delta, -u_limit), u_limit)
