"""Particle swarm optimization with scheduled inertia and acceleration.

Variants:

* ``classic``  constant inertia ``w_max`` and constant accelerations
* ``linear``   inertia decreasing linearly from ``w_max`` to ``w_min``
* ``damped``   inertia multiplied by ``w_damp`` every generation
* ``improved`` exponentially decaying inertia plus the four-phase
  acceleration schedule (:func:`update_accelerations`)
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .adaptation import TunedParams

VARIANTS = ("classic", "linear", "damped", "improved")
ACCEL_RANGE = (0.5, 4.0)
# (upper edge of g/G band, increment added to c1; c2 gets the negative)
ACCEL_BANDS = ((0.20, 0.05), (0.35, 0.02), (0.75, -0.035), (math.inf, -0.0015))


class ObjectiveError(ValueError):
    """The objective returned a non-finite value."""


@dataclass(frozen=True)
class PsoHyper:
    generations: int = 15
    population: int = 20
    w_max: float = 0.99
    w_min: float = 0.1
    w_damp: float = 0.99
    c1_init: float = 2.0
    c2_init: float = 2.0
    lambda1: float = 30.0
    lambda2: float = 3.0
    variant: str = "improved"
    seed: int = 0
    # "async": the global best is refreshed after every particle evaluation;
    # "sync": once per generation, which allows a parallel ``map_fn``
    gbest_update: str = "async"
    # velocity clamp as a fraction of each dimension's range
    vel_frac: float = 0.2

    def __post_init__(self):
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not self.w_max > self.w_min > 0:
            raise ValueError("need w_max > w_min > 0")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown PSO variant {self.variant!r}; expected one of {VARIANTS}")
        if self.gbest_update not in ("async", "sync"):
            raise ValueError(f"gbest_update must be 'async' or 'sync', got {self.gbest_update!r}")


@dataclass
class SwarmResult:
    best_position: np.ndarray
    best_fitness: float
    fitness_history: list[float]
    evaluations: int
    # per-generation (w, c1, c2) actually used; entry 0 belongs to initialization
    schedule: list[tuple[float, float, float]] = field(default_factory=list)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["generation", "best_fitness", "w", "c1", "c2"])
            for g, (fit, (w, c1, c2)) in enumerate(zip(self.fitness_history, self.schedule)):
                writer.writerow([g, repr(float(fit)), repr(float(w)), repr(float(c1)), repr(float(c2))])


def sphere(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(x * x))


def inertia_linear(g: float, hyper: PsoHyper) -> float:
    return hyper.w_max - (hyper.w_max - hyper.w_min) * g / hyper.generations


def inertia_exponential(g: float, hyper: PsoHyper) -> float:
    exponent = hyper.w_max - hyper.lambda1 * (hyper.w_max + hyper.w_min) * g / hyper.generations
    return hyper.w_min + math.exp(exponent) / hyper.lambda2


def acceleration_increment(g: float, generations: int) -> float:
    """Increment added to c1 at generation ``g`` (c2 receives its negative)."""
    frac = g / generations
    for edge, inc in ACCEL_BANDS:
        if frac < edge:
            return inc
    return ACCEL_BANDS[-1][1]


def update_accelerations(c1: float, c2: float, g: float, generations: int,
                         clamp: tuple[float, float] | None = ACCEL_RANGE) -> tuple[float, float]:
    inc = acceleration_increment(g, generations)
    c1, c2 = c1 + inc, c2 - inc
    if clamp is not None:
        lo, hi = clamp
        c1, c2 = min(max(c1, lo), hi), min(max(c2, lo), hi)
    return c1, c2


def _evaluate(objective, positions, map_fn) -> np.ndarray:
    values = np.array(list(map_fn(objective, list(positions))), dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ObjectiveError(f"objective returned {values[i]!r} at {positions[i].tolist()}")
    return values


def pso_run(objective: Callable[[np.ndarray], float], bounds: Sequence[tuple[float, float]], hyper: PsoHyper,
            init_positions=None, map_fn=map) -> SwarmResult:
    """Minimize ``objective`` over the box ``bounds``.

    With ``gbest_update="sync"`` the swarm is evaluated through ``map_fn``,
    which may be a parallel map (e.g. ``Pool.map``); results are consumed in
    particle order so the run is unchanged.  The async update evaluates
    particles one at a time.
    """
    bounds = np.asarray(bounds, dtype=float).reshape(-1, 2)
    lo, hi = bounds[:, 0], bounds[:, 1]
    if not np.all(hi > lo):
        raise ValueError("every search interval must have upper > lower")
    dim, n = len(bounds), hyper.population
    rng = np.random.default_rng(hyper.seed)
    v_max = hyper.vel_frac * (hi - lo)

    if init_positions is None:
        pos = lo + rng.random((n, dim)) * (hi - lo)
    else:
        pos = np.clip(np.array(init_positions, dtype=float).reshape(n, dim), lo, hi)
    vel = np.zeros((n, dim))
    fit = _evaluate(objective, pos, map_fn)
    evaluations = n
    p_best, p_fit = pos.copy(), fit.copy()
    g_idx = int(np.argmin(p_fit))
    g_best, g_fit = p_best[g_idx].copy(), float(p_fit[g_idx])

    c1, c2 = hyper.c1_init, hyper.c2_init
    w = hyper.w_max
    history = [g_fit]
    schedule = [(w, c1, c2)]
    for g in range(hyper.generations):
        if hyper.variant == "linear":
            w = inertia_linear(g, hyper)
        elif hyper.variant == "improved":
            w = inertia_exponential(g, hyper)
        elif hyper.variant == "damped" and g > 0:
            w *= hyper.w_damp
        r1 = rng.random((n, dim))
        r2 = rng.random((n, dim))
        if hyper.gbest_update == "sync":
            vel = w * vel + c1 * r1 * (p_best - pos) + c2 * r2 * (g_best - pos)
            vel = np.clip(vel, -v_max, v_max)
            pos = np.clip(pos + vel, lo, hi)
            fit = _evaluate(objective, pos, map_fn)
            better = fit < p_fit
            p_best[better] = pos[better]
            p_fit[better] = fit[better]
            g_idx = int(np.argmin(p_fit))
            if p_fit[g_idx] < g_fit:
                g_best, g_fit = p_best[g_idx].copy(), float(p_fit[g_idx])
        else:
            for i in range(n):
                vel[i] = w * vel[i] + c1 * r1[i] * (p_best[i] - pos[i]) + c2 * r2[i] * (g_best - pos[i])
                vel[i] = np.clip(vel[i], -v_max, v_max)
                pos[i] = np.clip(pos[i] + vel[i], lo, hi)
                f = _evaluate(objective, pos[i:i + 1], map)[0]
                if f < p_fit[i]:
                    p_best[i], p_fit[i] = pos[i], f
                    if f < g_fit:
                        g_best, g_fit = pos[i].copy(), float(f)
        evaluations += n
        history.append(g_fit)
        schedule.append((w, c1, c2))
        if hyper.variant == "improved":
            c1, c2 = update_accelerations(c1, c2, g, hyper.generations)
    return SwarmResult(g_best, g_fit, history, evaluations, schedule)


# decision vector layout for controller tuning: (N_p, N_c, Q_y, R, N, alpha)
TUNE_BOUNDS = ((2.0, 60.0), (1.0, 20.0), (0.1, 100.0), (1e-3, 1.0), (1.0, 10.0), (0.0, 0.95))
DIVERGENCE_PENALTY = 1e9


def repair(vector) -> "TunedParams":
    """Round the integer dimensions and enforce N <= N_c <= N_p."""
    from .adaptation import TunedParams

    n_p, n_c, q_y, r, n, alpha = (float(v) for v in vector)
    n_p = max(1, int(round(n_p)))
    n_c = min(max(1, int(round(n_c))), n_p)
    n = min(max(1, int(round(n))), n_c)
    alpha = min(max(alpha, 0.0), 0.999)
    return TunedParams(n_p, n_c, q_y, r, n, alpha)


@dataclass(frozen=True)
class StepManeuver:
    """Closed-loop fitness experiment: constant speed, step to a lateral offset."""

    duration: float = 10.0
    # offsets smaller than this are replaced by it, so a zero key still excites the loop
    min_offset: float = 0.5

    def scenario(self, long_vel: float, offset: float):
        from .sim import step_scenario

        target = math.copysign(max(abs(offset), self.min_offset), offset if offset else 1.0)
        return step_scenario(long_vel, target, self.duration)


def maneuver_fitness(params, operating_point, sim_cfg=None, maneuver: StepManeuver = StepManeuver()) -> float:
    """MSE of the step maneuver.

    Divergence, or a candidate whose QP hessian is numerically singular, earns
    :data:`DIVERGENCE_PENALTY`.
    """
    from .sim import SimConfig, run_scenario

    sim_cfg = sim_cfg if sim_cfg is not None else SimConfig()
    result = run_scenario(maneuver.scenario(*operating_point), "mpc", sim_cfg, params=params)
    if result.diverged or result.solver_failures:
        return DIVERGENCE_PENALTY
    value = result.mse
    return value if math.isfinite(value) else DIVERGENCE_PENALTY


def tune_mpc(operating_point: tuple[float, float], search_bounds=TUNE_BOUNDS, hyper: PsoHyper = PsoHyper(),
             sim_cfg=None, maneuver: StepManeuver = StepManeuver()):
    """Tune (N_p, N_c, Q_y, R, N, alpha) at one operating point.

    Returns ``(TunedParams, fitness, SwarmResult)``.
    """
    long_vel, offset = operating_point
    if not (3.0 <= long_vel <= 27.0 and -15.0 <= offset <= 15.0):
        raise ValueError(f"operating point {operating_point} outside [3, 27] x [-15, 15]")

    def objective(vector):
        return maneuver_fitness(repair(vector), operating_point, sim_cfg, maneuver)

    result = pso_run(objective, search_bounds, hyper)
    return repair(result.best_position), result.best_fitness, result
