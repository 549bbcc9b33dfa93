"""Tests for the warm-startable dual active-set QP solver.

Reference values come from an independent enumeration route: the QP with
symmetric positive definite Hessian G is the variational problem with H = G,
so brute_force_solve provides ground truth for random cases.
"""

import numpy as np
import pytest

from avisolve import (
    AviProblem,
    DimensionMismatch,
    Infeasible,
    NotPositiveDefinite,
    brute_force_solve,
    qp_setup,
    qp_solve,
)


def _random_instance(seed, n=2, m=8):
    """Random strictly convex QP with a nonempty feasible set."""
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n))
    hessian = g.T @ g + np.eye(n)
    A = rng.standard_normal((m, n))
    x0 = rng.standard_normal(n)
    b = A @ x0 + rng.uniform(0.1, 1.1, m)
    linear = rng.standard_normal(n)
    return hessian, linear, A, b


def test_setup_empty_working_set():
    ws = qp_setup(np.eye(2), np.array([[1.0, 0.0]]), np.array([1.0]))
    assert ws.working_set == ()
    np.testing.assert_allclose(ws.hessian_factor.diag, np.ones(2))


def test_setup_diagonal_factor():
    ws = qp_setup(np.diag([4.0, 4.0]), np.zeros((0, 2)), np.zeros(0))
    np.testing.assert_allclose(ws.hessian_factor.solve(np.array([4.0, 8.0])), [1.0, 2.0])


def test_setup_factor_round_trip():
    rng = np.random.default_rng(11)
    g = rng.standard_normal((5, 5))
    hessian = g.T @ g + np.eye(5)
    ws = qp_setup(hessian, rng.standard_normal((50, 5)), rng.standard_normal(50))
    err = np.max(np.abs(ws.hessian_factor.reconstruct() - hessian))
    assert err <= 1e-12 * np.max(np.abs(hessian))


def test_setup_rejects_indefinite_hessian():
    with pytest.raises(NotPositiveDefinite):
        qp_setup(np.array([[1.0, 2.0], [2.0, 1.0]]), np.zeros((0, 2)), np.zeros(0))


def test_setup_rejects_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        qp_setup(np.eye(2), np.ones((3, 3)), np.ones(3))
    with pytest.raises(DimensionMismatch):
        qp_setup(np.eye(2), np.ones((3, 2)), np.ones(2))


def test_scalar_interior():
    # minimizer 2/4 = 0.5 is far from the bound x <= 10
    ws = qp_setup(np.array([[4.0]]), np.array([[1.0]]), np.array([10.0]))
    res = qp_solve(ws, np.array([-2.0]))
    np.testing.assert_allclose(res.y, [0.5])
    assert res.active_set == ()
    np.testing.assert_allclose(res.multipliers, [0.0])


def test_scalar_active_bound():
    # constraint x <= 0.25 binds; stationarity 4*0.25 - 2 + lam = 0 forces lam = 1
    ws = qp_setup(np.array([[4.0]]), np.array([[1.0]]), np.array([0.25]))
    res = qp_solve(ws, np.array([-2.0]))
    np.testing.assert_allclose(res.y, [0.25], atol=1e-12)
    assert res.active_set == (0,)
    np.testing.assert_allclose(res.multipliers, [1.0], atol=1e-10)


def test_unconstrained():
    hessian = np.array([[4.0, 2.0], [2.0, 3.0]])
    ws = qp_setup(hessian, np.zeros((0, 2)), np.zeros(0))
    res = qp_solve(ws, np.array([-2.0, -3.0]))
    np.testing.assert_allclose(res.y, [0.0, 1.0], atol=1e-12)
    assert res.active_set == ()


def test_matches_enumeration_oracle():
    for seed in range(20):
        hessian, linear, A, b = _random_instance(seed)
        ws = qp_setup(hessian, A, b)
        res = qp_solve(ws, linear)
        oracle = brute_force_solve(AviProblem(H=hessian, f=linear, A=A, b=b))
        assert np.max(np.abs(res.y - oracle.x)) <= 1e-8


def test_kkt_certificate():
    for seed in range(20):
        hessian, linear, A, b = _random_instance(seed, n=4, m=12)
        ws = qp_setup(hessian, A, b)
        res = qp_solve(ws, linear)
        stat = hessian @ res.y + linear + A.T @ res.multipliers
        assert np.max(np.abs(stat)) <= 1e-8 * (1.0 + np.max(np.abs(linear)))
        assert np.max(A @ res.y - b) <= 1e-8 * (1.0 + np.max(np.abs(b)))
        assert np.min(res.multipliers) >= -1e-10
        assert np.max(np.abs(res.multipliers * (b - A @ res.y))) <= 1e-8
        # multipliers vanish off the active set
        off = [i for i in range(len(b)) if i not in res.active_set]
        assert np.all(res.multipliers[off] == 0.0)


def test_warm_start_consistency():
    # warm and cold solves of the same QP agree on the minimizer
    for seed in range(20):
        hessian, linear, A, b = _random_instance(seed, n=3, m=10)
        ws = qp_setup(hessian, A, b)
        qp_solve(ws, np.zeros(3))  # leave some working set behind
        warm = qp_solve(ws, linear, warm_start=True)
        cold = qp_solve(qp_setup(hessian, A, b), linear, warm_start=False)
        assert np.max(np.abs(warm.y - cold.y)) <= 1e-8


def test_warm_repeat_is_free():
    # repeating the same linear term performs zero working-set changes
    for seed in range(10):
        hessian, linear, A, b = _random_instance(seed, n=3, m=10)
        ws = qp_setup(hessian, A, b)
        first = qp_solve(ws, linear)
        again = qp_solve(ws, linear, warm_start=True)
        assert again.inner_iterations == 0
        np.testing.assert_allclose(again.y, first.y, atol=1e-12)
        assert again.active_set == first.active_set


def test_parametric_continuity():
    # a tiny change of the linear term keeps the active set; warm-starting
    # from the previous result must then beat a cold solve
    wins = 0
    eligible = 0
    for seed in range(50):
        hessian, linear, A, b = _random_instance(seed, n=4, m=12)
        rng = np.random.default_rng(1000 + seed)
        perturbed = linear + 1e-7 * rng.standard_normal(4)
        cold1 = qp_solve(qp_setup(hessian, A, b), linear, warm_start=False)
        cold2 = qp_solve(qp_setup(hessian, A, b), perturbed, warm_start=False)
        if cold1.active_set != cold2.active_set or not cold1.active_set:
            continue  # set changed or nothing active: comparison is vacuous
        eligible += 1
        ws = qp_setup(hessian, A, b)
        qp_solve(ws, linear, warm_start=False)
        warm = qp_solve(ws, perturbed, warm_start=True)
        if warm.inner_iterations < cold2.inner_iterations:
            wins += 1
        assert np.max(np.abs(warm.y - cold2.y)) <= 1e-8
    assert eligible >= 10
    assert wins >= 0.9 * eligible


def test_workspace_counter_accumulates():
    hessian, linear, A, b = _random_instance(7, n=3, m=10)
    ws = qp_setup(hessian, A, b)
    r1 = qp_solve(ws, linear)
    r2 = qp_solve(ws, -linear)
    assert ws.total_inner_iterations == r1.inner_iterations + r2.inner_iterations


def test_infeasible():
    # x <= -1 and -x <= -1 cannot both hold
    ws = qp_setup(np.eye(1), np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]))
    with pytest.raises(Infeasible):
        qp_solve(ws, np.array([0.0]))


def test_linear_term_shape_check():
    ws = qp_setup(np.eye(2), np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(DimensionMismatch):
        qp_solve(ws, np.zeros(3))


def test_set_working_set_rejects_bad_index():
    hessian, linear, A, b = _random_instance(0)
    ws = qp_setup(hessian, A, b)
    with pytest.raises(DimensionMismatch):
        ws.set_working_set([99])


def test_set_working_set_skips_dependent_rows():
    # the duplicated row cannot enter the working set twice
    A = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    ws = qp_setup(np.eye(2), A, np.array([1.0, 1.0, 1.0]))
    ws.set_working_set([0, 1, 2])
    assert ws.working_set == (0, 2)
