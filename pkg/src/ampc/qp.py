"""Dense convex QP:  minimize 0.5 x'Ex + x'K  subject to  Mx <= gamma.

Inequality problems go through Hildreth's element-wise dual ascent, which
keeps working when the active set is degenerate.  The equality-constrained
closed form and the unconstrained minimizer are exposed as well.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.linalg import LinAlgError, cho_factor, cho_solve

DEFAULT_MAX_ITER = 38
DEFAULT_TOL = 1e-8


class NotPositiveDefinite(ValueError):
    pass


@dataclass(frozen=True)
class QpProblem:
    hessian: np.ndarray
    linear: np.ndarray
    con_mat: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    con_bound: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        e = np.atleast_2d(np.asarray(self.hessian, dtype=float))
        n = e.shape[0]
        k = np.asarray(self.linear, dtype=float).reshape(-1)
        m_mat = np.asarray(self.con_mat, dtype=float)
        if m_mat.size == 0:
            m_mat = np.zeros((0, n))
        m_mat = m_mat.reshape(-1, n)
        g = np.asarray(self.con_bound, dtype=float).reshape(-1)
        if e.shape != (n, n) or k.shape[0] != n or g.shape[0] != m_mat.shape[0]:
            raise ValueError(
                f"inconsistent QP dimensions: E {e.shape}, K {k.shape}, M {m_mat.shape}, gamma {g.shape}")
        object.__setattr__(self, "hessian", e)
        object.__setattr__(self, "linear", k)
        object.__setattr__(self, "con_mat", m_mat)
        object.__setattr__(self, "con_bound", g)

    @property
    def n_vars(self) -> int:
        return self.hessian.shape[0]

    @property
    def n_cons(self) -> int:
        return self.con_mat.shape[0]

    def cost(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.hessian @ x + x @ self.linear)


@dataclass(frozen=True)
class QpSolution:
    primal: np.ndarray
    dual: np.ndarray
    iterations: int
    converged: bool

    @property
    def active_set(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.dual > 0))


def factorize(hessian):
    """Cholesky factor of an SPD hessian; raises :class:`NotPositiveDefinite`."""
    e = np.asarray(hessian, dtype=float)
    if np.max(np.abs(e - e.T), initial=0.0) >= 1e-9:
        raise NotPositiveDefinite("hessian is not symmetric")
    try:
        return cho_factor(e)
    except LinAlgError as exc:
        raise NotPositiveDefinite("hessian is not positive definite") from exc


def unconstrained_minimum(hessian, linear, factor=None) -> np.ndarray:
    factor = factor if factor is not None else factorize(hessian)
    return -cho_solve(factor, np.asarray(linear, dtype=float).reshape(-1))


def solve_equality(problem: QpProblem, factor=None) -> QpSolution:
    """Lagrange solution with every row of ``con_mat`` held as an equality.

    Multipliers of equality rows may be negative.
    """
    factor = factor if factor is not None else factorize(problem.hessian)
    m_mat, g, k = problem.con_mat, problem.con_bound, problem.linear
    if problem.n_cons == 0:
        return QpSolution(unconstrained_minimum(None, k, factor), np.zeros(0), 0, True)
    if np.linalg.matrix_rank(m_mat) < problem.n_cons:
        raise ValueError("equality constraint rows are linearly dependent")
    e_inv_mt = cho_solve(factor, m_mat.T)
    e_inv_k = cho_solve(factor, k)
    h = m_mat @ e_inv_mt
    lam = -np.linalg.solve(h, g + m_mat @ e_inv_k)
    x = -(e_inv_k + e_inv_mt @ lam)
    return QpSolution(x, lam, 0, True)


@njit(cache=True)
def _hildreth_sweeps(h, kd, lam, max_iter, tol):
    m = lam.shape[0]
    for it in range(1, max_iter + 1):
        change = 0.0
        for i in range(m):
            if h[i, i] <= 0.0:
                continue
            acc = kd[i]
            for j in range(m):
                if j != i:
                    acc += h[i, j] * lam[j]
            new = -acc / h[i, i]
            if new < 0.0:
                new = 0.0
            diff = abs(new - lam[i])
            if diff > change:
                change = diff
            lam[i] = new
        if change < tol:
            return it, True
    return max_iter, False


def solve_hildreth(problem: QpProblem, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
                   factor=None) -> QpSolution:
    """Solve the inequality QP by Hildreth's dual coordinate ascent.

    Returns the unconstrained minimum with zero iterations when it is already
    feasible.  On hitting ``max_iter`` sweeps the last iterate is returned with
    ``converged=False``.
    """
    factor = factor if factor is not None else factorize(problem.hessian)
    m_mat, g, k = problem.con_mat, problem.con_bound, problem.linear
    e_inv_k = cho_solve(factor, k)
    x0 = -e_inv_k
    if problem.n_cons == 0 or np.all(m_mat @ x0 <= g):
        return QpSolution(x0, np.zeros(problem.n_cons), 0, True)

    e_inv_mt = cho_solve(factor, m_mat.T)
    h = np.ascontiguousarray(m_mat @ e_inv_mt)
    kd = g + m_mat @ e_inv_k
    lam = np.zeros(problem.n_cons)
    iterations, converged = _hildreth_sweeps(h, kd, lam, int(max_iter), float(tol))
    x = x0 - e_inv_mt @ lam
    return QpSolution(x, lam, int(iterations), bool(converged))
