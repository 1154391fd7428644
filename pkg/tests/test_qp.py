import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ampc.qp import NotPositiveDefinite, QpProblem, solve_equality, solve_hildreth, unconstrained_minimum
from oracles import qp_active_set_enumeration


def random_problem(rng, n, m):
    a = rng.standard_normal((n, n))
    e = a @ a.T + 0.5 * np.eye(n)
    k = 3.0 * rng.standard_normal(n)
    # box rows around the origin plus random halfspaces that keep the origin feasible
    rows, bounds = [], []
    for i in range(min(n, m // 2)):
        unit = np.eye(n)[i]
        rows += [unit, -unit]
        bounds += [rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)]
    while len(rows) < m:
        rows.append(rng.standard_normal(n))
        bounds.append(rng.uniform(0.1, 1.0))
    return QpProblem(e, k, np.array(rows), np.array(bounds))


def test_unconstrained_examples():
    np.testing.assert_allclose(unconstrained_minimum(np.eye(2), [-1, -1]), [1, 1])
    np.testing.assert_allclose(unconstrained_minimum(np.diag([2.0, 4.0]), [-2, -4]), [1, 1])


def test_unconstrained_residual():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.standard_normal((6, 6))
        e = a @ a.T + 0.1 * np.eye(6)
        k = rng.standard_normal(6)
        x = unconstrained_minimum(e, k)
        assert np.max(np.abs(e @ x + k)) < 1e-10


@pytest.mark.parametrize("hessian", [np.diag([1.0, -1.0]), np.array([[1.0, 2.0], [0.0, 1.0]])])
def test_rejects_non_spd(hessian):
    with pytest.raises(NotPositiveDefinite):
        unconstrained_minimum(hessian, [0, 0])
    with pytest.raises(NotPositiveDefinite):
        solve_hildreth(QpProblem(hessian, [0, 0], [[1, 1]], [1]))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        QpProblem(np.eye(2), [1, 2, 3])


def test_equality_example():
    sol = solve_equality(QpProblem(np.eye(2), [-1, -1], [[1, 1]], [1]))
    np.testing.assert_allclose(sol.dual, [0.5])
    np.testing.assert_allclose(sol.primal, [0.5, 0.5])


def test_equality_without_constraints():
    sol = solve_equality(QpProblem(np.eye(2), [-1, -1]))
    np.testing.assert_allclose(sol.primal, [1, 1])


def test_equality_already_satisfied():
    sol = solve_equality(QpProblem(np.eye(2), [-1, -1], [[1, 1]], [2]))
    np.testing.assert_allclose(sol.dual, [0.0], atol=1e-12)
    np.testing.assert_allclose(sol.primal, [1, 1])


def test_equality_rank_deficient():
    with pytest.raises(ValueError):
        solve_equality(QpProblem(np.eye(2), [-1, -1], [[1, 1], [2, 2]], [1, 2]))


@given(st.integers(0, 10_000))
def test_equality_stationarity_and_feasibility(seed):
    rng = np.random.default_rng(seed)
    prob = random_problem(rng, 5, 3)
    prob = QpProblem(prob.hessian, prob.linear, rng.standard_normal((3, 5)), rng.standard_normal(3))
    sol = solve_equality(prob)
    np.testing.assert_allclose(prob.con_mat @ sol.primal, prob.con_bound, atol=1e-9)
    grad = prob.hessian @ sol.primal + prob.linear + prob.con_mat.T @ sol.dual
    assert np.max(np.abs(grad)) < 1e-9


def test_hildreth_active_constraint():
    sol = solve_hildreth(QpProblem(np.eye(2), [-1, -1], [[1, 1]], [1]), max_iter=100)
    np.testing.assert_allclose(sol.primal, [0.5, 0.5], atol=1e-6)
    np.testing.assert_allclose(sol.dual, [0.5], atol=1e-6)
    assert sol.converged and sol.active_set == (0,)


def test_hildreth_inactive_constraint():
    sol = solve_hildreth(QpProblem(np.eye(2), [-1, -1], [[1, 1]], [10]))
    np.testing.assert_array_equal(sol.dual, [0.0])
    np.testing.assert_allclose(sol.primal, [1, 1])
    assert sol.iterations == 0 and sol.converged and sol.active_set == ()


def test_hildreth_box_clip_matches_grid_search():
    e, k = np.eye(2), np.array([-1.0, -1.0])
    m = np.array([[1.0, 0.0], [-1.0, 0.0]])
    g = np.array([0.2, 0.2])
    sol = solve_hildreth(QpProblem(e, k, m, g), max_iter=200)
    # brute force: x1 over the feasible interval, x2 unconstrained but on a wide grid
    x1 = np.linspace(-0.2, 0.2, 401)
    x2 = np.linspace(-2, 2, 4001)
    xx1, xx2 = np.meshgrid(x1, x2)
    cost = 0.5 * (xx1**2 + xx2**2) - xx1 - xx2
    i = np.unravel_index(np.argmin(cost), cost.shape)
    np.testing.assert_allclose(sol.primal, [xx1[i], xx2[i]], atol=1e-3)
    assert sol.primal[0] == pytest.approx(0.2, abs=1e-9)


def test_hildreth_unconverged_returns_best_iterate():
    rng = np.random.default_rng(3)
    prob = random_problem(rng, 6, 8)
    sol = solve_hildreth(prob, max_iter=1, tol=0.0)
    assert not sol.converged and sol.iterations == 1
    assert np.all(np.isfinite(sol.primal))


@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 8))
def test_dual_stays_nonnegative_every_sweep(seed, n, m):
    prob = random_problem(np.random.default_rng(seed), n, m)
    for sweeps in range(1, 15):
        assert np.all(solve_hildreth(prob, max_iter=sweeps, tol=0.0).dual >= 0)


@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 8))
def test_hildreth_matches_enumeration_oracle(seed, n, m):
    prob = random_problem(np.random.default_rng(seed), n, m)
    sol = solve_hildreth(prob, max_iter=20_000, tol=1e-13)
    expected = qp_active_set_enumeration(prob.hessian, prob.linear, prob.con_mat, prob.con_bound)
    assert np.max(np.abs(sol.primal - expected)) < 1e-4
    if sol.converged:
        slack = prob.con_mat @ sol.primal - prob.con_bound
        assert np.all(slack <= 1e-6)
        assert np.max(np.abs(sol.dual * slack)) < 1e-6
