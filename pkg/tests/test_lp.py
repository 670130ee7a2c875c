import numpy as np
import pytest

from fjvrp.lp import CutNotViolated, LpProblem, LpStatus, resolve_with_cut, solve_lp

from oracles import lp_vertex_min


def test_equality_pins_variable():
    sol = solve_lp(LpProblem(c=[1.0], A_eq=[[1.0]], b_eq=[1.0]))
    assert sol.status is LpStatus.OPTIMAL
    assert sol.objective == pytest.approx(1.0)


def test_symmetric_optimum_objective_only():
    sol = solve_lp(LpProblem(c=[-1.0, -1.0], A_ub=[[1.0, 1.0]], b_ub=[1.0]))
    assert sol.objective == pytest.approx(-1.0)
    assert sol.values.sum() == pytest.approx(1.0)


def test_no_constraints_uses_box():
    sol = solve_lp(LpProblem(c=[2.0, -3.0, 0.0]))
    assert sol.objective == pytest.approx(-3.0)
    np.testing.assert_allclose(sol.values[:2], [0.0, 1.0])


def test_infeasible_status():
    sol = solve_lp(LpProblem(c=[1.0, 1.0], A_eq=[[1.0, 1.0]], b_eq=[3.0]))
    assert sol.status is LpStatus.INFEASIBLE


def _random_lp(rng, n):
    c = rng.integers(-5, 6, n).astype(float)
    k_eq = rng.integers(0, 2)
    k_ub = rng.integers(1, 4)
    A_eq = rng.integers(-3, 4, (k_eq, n)).astype(float)
    x0 = rng.random(n)
    b_eq = A_eq @ x0  # keeps the equality system feasible most of the time
    A_ub = rng.integers(-4, 5, (k_ub, n)).astype(float)
    b_ub = rng.integers(-2, 6, k_ub).astype(float)
    return c, A_eq, b_eq, A_ub, b_ub


@pytest.mark.parametrize("seed", range(20))
def test_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    c, A_eq, b_eq, A_ub, b_ub = _random_lp(rng, n)
    sol = solve_lp(LpProblem(c, A_eq, b_eq, A_ub, b_ub))
    ref = lp_vertex_min(c, A_eq, b_eq, A_ub, b_ub)
    if ref is None:
        assert sol.status is LpStatus.INFEASIBLE
    else:
        assert sol.status is LpStatus.OPTIMAL
        assert sol.objective == pytest.approx(ref, abs=1e-7)
        assert sol.problem.feasible(sol.values)


def test_many_random_lps_against_oracle():
    rng = np.random.default_rng(1234)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        c, A_eq, b_eq, A_ub, b_ub = _random_lp(rng, n)
        lb = rng.integers(0, 2, n).astype(float) * (rng.random(n) < 0.2)
        p = LpProblem(c, A_eq, b_eq, A_ub, b_ub, lb=lb)
        sol = solve_lp(p)
        ref = lp_vertex_min(c, A_eq, b_eq, A_ub, b_ub, lb=lb)
        if ref is None:
            assert sol.status is LpStatus.INFEASIBLE
        else:
            assert sol.objective == pytest.approx(ref, abs=1e-7)


def test_tableau_basic_columns_are_identity():
    sol = solve_lp(LpProblem(c=[-5.0, -4.0, -3.0], A_ub=[[2.0, 3.0, 1.0], [4.0, 1.0, 2.0]], b_ub=[5.0, 11.0]))
    tab = sol.tableau
    np.testing.assert_allclose(tab.rows[:, tab.basis], np.eye(len(tab.basis)), atol=1e-12)


def _knapsack():
    # relaxation optimum is (1, 0, 0.5)
    return LpProblem(c=[-5.0, -4.0, -3.0], A_ub=[[2.0, 3.0, 2.0]], b_ub=[3.0])


def test_cut_raises_objective_and_matches_resolve():
    p = _knapsack()
    sol = solve_lp(p)
    assert np.any(np.abs(sol.values - np.round(sol.values)) > 1e-6)
    # any two items overweigh the knapsack, so a + b + c <= 1
    coef, rhs = np.array([1.0, 1.0, 1.0]), 1.0
    assert coef @ sol.values > rhs
    warm = resolve_with_cut(sol, (coef, rhs))
    cold = solve_lp(p.with_cut(coef, rhs))
    assert warm.objective > sol.objective
    assert warm.objective == pytest.approx(cold.objective, abs=1e-7)
    assert warm.problem.feasible(warm.values)


def test_random_cuts_warm_equals_cold():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(100):
        n = int(rng.integers(2, 6))
        c, A_eq, b_eq, A_ub, b_ub = _random_lp(rng, n)
        p = LpProblem(c, A_eq, b_eq, A_ub, b_ub)
        sol = solve_lp(p)
        if not sol.optimal:
            continue
        for _ in range(3):
            coef = rng.normal(size=n)
            rhs = coef @ sol.values - abs(rng.normal()) - 1e-3
            warm = resolve_with_cut(sol, (coef, rhs))
            cold = solve_lp(sol.problem.with_cut(coef, rhs))
            assert warm.status == cold.status
            if not warm.optimal:
                break
            assert warm.objective >= sol.objective - 1e-9
            assert warm.objective == pytest.approx(cold.objective, abs=1e-7)
            sol = warm
            checked += 1
    assert checked > 50


def test_cut_not_violated():
    sol = solve_lp(LpProblem(c=[1.0, 1.0], A_eq=[[1.0, 0.0]], b_eq=[1.0]))
    with pytest.raises(CutNotViolated):
        resolve_with_cut(sol, ([1.0, 1.0], 1.0))


def test_cut_making_infeasible():
    sol = solve_lp(LpProblem(c=[1.0], A_eq=[[1.0]], b_eq=[1.0]))
    out = resolve_with_cut(sol, ([1.0], 0.5))
    assert out.status is LpStatus.INFEASIBLE


def test_with_bounds_matches_cold_solve():
    rng = np.random.default_rng(99)
    for _ in range(100):
        n = int(rng.integers(2, 6))
        c, A_eq, b_eq, A_ub, b_ub = _random_lp(rng, n)
        p = LpProblem(c, A_eq, b_eq, A_ub, b_ub)
        sol = solve_lp(p)
        if not sol.optimal:
            continue
        j = int(rng.integers(n))
        v = float(rng.integers(2))
        child = sol.with_bounds({j: (v, v)})
        lb, ub = p.lb.copy(), p.ub.copy()
        lb[j] = ub[j] = v
        ref = lp_vertex_min(c, A_eq, b_eq, A_ub, b_ub, lb=lb, ub=ub)
        if ref is None:
            assert child.status is LpStatus.INFEASIBLE
        else:
            assert child.objective == pytest.approx(ref, abs=1e-7)
            assert child.objective >= sol.objective - 1e-9


def test_deterministic_basis():
    p = _knapsack()
    a, b = solve_lp(p), solve_lp(p)
    np.testing.assert_array_equal(a.tableau.basis, b.tableau.basis)
    np.testing.assert_array_equal(a.values, b.values)


def test_degenerate_problem_terminates():
    # many redundant constraints through the same vertex
    n = 6
    A_ub = np.vstack([np.ones(n), np.ones(n) * 2, np.eye(n), -np.eye(n)])
    b_ub = np.concatenate([[1.0, 2.0], np.ones(n), np.zeros(n)])
    sol = solve_lp(LpProblem(c=-np.arange(1, n + 1, dtype=float), A_ub=A_ub, b_ub=b_ub))
    assert sol.objective == pytest.approx(-n)
