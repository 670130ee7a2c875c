import numpy as np
import pytest

from fjvrp.bip import (
    BipParams,
    BipProblem,
    NoFractionalRow,
    gomory_cut_from,
    preprocess,
    rins,
    row_bounds,
    solve_bip,
)
from fjvrp.lp import SimplexTableau, resolve_with_cut, solve_lp

from gen import assignment_bip, general_bip
from oracles import binary_feasible, bip_enum_min


def _feasible_set(p: BipProblem):
    lp = p.lp
    X, ok = binary_feasible(lp.A_eq, lp.b_eq, lp.A_ub, lp.b_ub, p.var_count)
    ok &= np.all((X >= lp.lb) & (X <= lp.ub), axis=1)
    return X, ok


# -- preprocessing ------------------------------------------------------------

def test_row_bounds():
    rb = row_bounds([3.0, -2.0, 0.0, 5.0, -1.0])
    assert (rb.L_min, rb.L_max) == (-3.0, 8.0)


def test_fixing_both_to_zero():
    p = BipProblem.from_arrays([-1.0, -1.0], A_ub=[[2.0, 2.0]], b_ub=[1.0])
    reduced, fixings, status = preprocess(p)
    assert status == "feasible"
    assert fixings == {0: 0, 1: 0}


def test_redundant_row_dropped():
    p = BipProblem.from_arrays([1.0, 1.0], A_ub=[[1.0, 1.0]], b_ub=[3.0])
    reduced, fixings, status = preprocess(p)
    assert reduced.lp.A_ub.shape[0] == 0
    assert fixings == {}


def test_infeasible_row():
    p = BipProblem.from_arrays([1.0, 1.0], A_ub=[[1.0, 1.0]], b_ub=[-1.0])
    assert preprocess(p).status == "infeasible"


def test_fix_to_one_from_negative_coefficient():
    # -3x0 + x1 <= -2  forces x0 = 1
    p = BipProblem.from_arrays([1.0, 1.0], A_ub=[[-3.0, 1.0]], b_ub=[-2.0])
    _, fixings, status = preprocess(p)
    assert status == "feasible" and fixings[0] == 1


def test_coefficient_improvement_positive():
    # 5x0 + 2x1 + 2x2 <= 6: L_max - b = 3, so a_0 shrinks to 3 and b to 4
    p = BipProblem.from_arrays([0.0, 0.0, 0.0], A_ub=[[5.0, 2.0, 2.0]], b_ub=[6.0])
    reduced, _, _ = preprocess(p)
    np.testing.assert_allclose(reduced.lp.A_ub, [[3.0, 2.0, 2.0]])
    np.testing.assert_allclose(reduced.lp.b_ub, [4.0])


def test_coefficient_improvement_negative():
    # -5x0 + 2x1 + 2x2 <= 1: b - L_max = -3 > -5, so a_0 rises to -3
    p = BipProblem.from_arrays([0.0, 0.0, 0.0], A_ub=[[-5.0, 2.0, 2.0]], b_ub=[1.0])
    reduced, _, _ = preprocess(p)
    np.testing.assert_allclose(reduced.lp.A_ub, [[-3.0, 2.0, 2.0]])
    np.testing.assert_allclose(reduced.lp.b_ub, [1.0])


def test_uniform_row_becomes_cardinality():
    # 305.7 * (x0 + x1 + x2) <= 700 admits at most two ones
    p = BipProblem.from_arrays([0.0, 0.0, 0.0], A_ub=[[305.7, 305.7, 305.7]], b_ub=[700.0])
    reduced, _, _ = preprocess(p)
    np.testing.assert_array_equal(reduced.lp.A_ub, [[1.0, 1.0, 1.0]])
    np.testing.assert_array_equal(reduced.lp.b_ub, [2.0])


def test_tight_packing_solved_at_root():
    # 12 items, 3 bins of 4: the cardinality rewrite leaves a transportation polytope
    rng = np.random.default_rng(70)
    n, m = 12, 3
    c = rng.random(n * m)
    A_eq = np.kron(np.eye(n), np.ones(m))
    A_ub = np.kron(np.ones(n), np.eye(m)) * 305.7
    res = solve_bip(BipProblem.from_arrays(c, A_eq, np.ones(n), A_ub, np.full(m, 1500.0), shape=(n, m)))
    assert res.optimal and res.node_count == 0
    assert np.all(res.values.reshape(n, m).sum(axis=0) == 4)


def _preprocess_preserves(p):
    X, before = _feasible_set(p)
    reduced, fixings, status = preprocess(p)
    if status == "infeasible":
        return not before.any()
    _, after = _feasible_set(reduced)
    for j, v in fixings.items():
        after &= X[:, j] == v
    return np.array_equal(before, after)


def test_preprocess_random_four_var():
    rng = np.random.default_rng(11)
    for _ in range(100):
        p = general_bip(rng, n=4)
        assert _preprocess_preserves(p)


def test_preprocess_idempotent():
    rng = np.random.default_rng(12)
    for _ in range(100):
        p = general_bip(rng)
        once = preprocess(p)
        if once.status == "infeasible":
            continue
        twice = preprocess(once.problem)
        assert twice.fixings == once.fixings
        np.testing.assert_array_equal(twice.problem.lp.A_ub, once.problem.lp.A_ub)
        np.testing.assert_array_equal(twice.problem.lp.b_ub, once.problem.lp.b_ub)
        np.testing.assert_array_equal(twice.problem.lp.b_eq, once.problem.lp.b_eq)


# -- Gomory cuts ----------------------------------------------------------------

def test_hand_tableau_cut():
    # x1 + 0.5 x3 = 1.5 with x3 nonbasic
    tab = SimplexTableau(basis=[0], rows=[[1.0, 0.0, 0.5]], rhs=[1.5])
    cut = gomory_cut_from(tab)
    np.testing.assert_allclose(cut.coefficients, [0.0, 0.0, -0.5])
    assert cut.slack_rhs == pytest.approx(-0.5)
    assert cut.source_row == 0


def test_integral_tableau_raises():
    tab = SimplexTableau(basis=[0, 1], rows=[[1.0, 0.0, 0.3], [0.0, 1.0, 0.7]], rhs=[1.0, 0.0])
    with pytest.raises(NoFractionalRow):
        gomory_cut_from(tab)


def test_largest_fraction_row_chosen_with_low_index_tie():
    tab = SimplexTableau(basis=[0, 1, 2], rows=[[1, 0, 0, 0.5], [0, 1, 0, 0.25], [0, 0, 1, 0.5]],
                         rhs=[0.4, 0.7, 0.7])
    assert gomory_cut_from(tab).source_row == 1


def _fractional_root(rng):
    while True:
        p = general_bip(rng, n=int(rng.integers(3, 9)))
        sol = solve_lp(p.lp)
        if sol.optimal and np.max(np.abs(sol.values - np.round(sol.values))) > 1e-5:
            try:
                gomory_cut_from(sol.tableau)
            except NoFractionalRow:
                continue
            return p, sol


def test_random_cuts_valid_and_separating():
    rng = np.random.default_rng(21)
    for _ in range(40):
        p, sol = _fractional_root(rng)
        X, ok = _feasible_set(p)
        for _round in range(4):
            try:
                cut = gomory_cut_from(sol.tableau)
            except NoFractionalRow:
                break
            assert cut.violation(sol.values) > 1e-7
            assert np.all(X[ok] @ cut.coef <= cut.rhs + 1e-7)
            assert np.all((cut.g >= 0) & (cut.g < 1))
            assert 0 < cut.f < 1
            sol = resolve_with_cut(sol, cut, slack_integral=True)
            if not sol.optimal:
                assert not ok.any()
                break


# -- RINS -----------------------------------------------------------------------

def test_rins_integral_relaxation_returns_incumbent():
    p = BipProblem.from_arrays([1.0, 2.0], A_eq=[[1.0, 1.0]], b_eq=[1.0])
    sol = solve_lp(p.lp)
    inc = np.round(sol.values)
    np.testing.assert_array_equal(rins(p, inc, sol), inc)


def test_rins_never_worse_never_infeasible():
    rng = np.random.default_rng(31)
    tried = 0
    while tried < 30:
        p = general_bip(rng, n=8)
        X, ok = _feasible_set(p)
        if ok.sum() < 2:
            continue
        vals = X[ok] @ p.lp.c
        inc = X[ok][np.argmax(vals)]  # worst feasible point
        sol = solve_lp(p.lp)
        out = rins(p, inc, sol)
        assert p.feasible(out)
        assert p.objective(out) <= p.objective(inc) + 1e-12
        tried += 1


def test_rins_optimal_incumbent_unchanged_objective():
    rng = np.random.default_rng(32)
    p = general_bip(rng, n=6)
    X, ok = _feasible_set(p)
    best = X[ok][np.argmin(X[ok] @ p.lp.c)]
    out = rins(p, best, solve_lp(p.lp))
    assert p.objective(out) == pytest.approx(p.objective(best))


# -- full solver ----------------------------------------------------------------

def test_integral_root_no_branching():
    # assignment with distinct costs: LP optimum is integral
    c = np.array([1.0, 5.0, 4.0, 2.0])
    p = BipProblem.from_arrays(c, A_eq=[[1, 1, 0, 0], [0, 0, 1, 1]], b_eq=[1, 1], shape=(2, 2))
    res = solve_bip(p)
    assert res.optimal and res.node_count == 0 and res.cut_count == 0
    np.testing.assert_array_equal(res.values, [1, 0, 0, 1])


def test_single_variable_no_constraints():
    res = solve_bip(BipProblem.from_arrays([1.0]))
    assert res.optimal and res.values.tolist() == [0] and res.objective == 0


def test_infeasible_bip():
    p = BipProblem.from_arrays([1.0, 1.0], A_eq=[[2.0, 2.0]], b_eq=[1.0])
    assert solve_bip(p).status == "infeasible"


@pytest.mark.parametrize("seed", range(5))
def test_random_general_bips_match_enumeration(seed):
    rng = np.random.default_rng(100 + seed)
    for _ in range(20):
        p = general_bip(rng, n=int(rng.integers(2, 13)))
        ref = bip_enum_min(p.lp.c, p.lp.A_eq, p.lp.b_eq, p.lp.A_ub, p.lp.b_ub)
        res = solve_bip(p)
        assert res.optimal
        assert p.feasible(res.values)
        assert res.objective == pytest.approx(ref, abs=1e-7)
        assert res.lp_bound <= res.objective + 1e-7


@pytest.mark.parametrize("integer", [True, False])
def test_random_assignment_bips(integer):
    rng = np.random.default_rng(7 if integer else 8)
    for _ in range(40):
        p = assignment_bip(rng, integer=integer)
        ref = bip_enum_min(p.lp.c, p.lp.A_eq, p.lp.b_eq, p.lp.A_ub, p.lp.b_ub)
        res = solve_bip(p)
        if ref is None:
            assert res.status == "infeasible"
        else:
            assert res.objective == pytest.approx(ref, abs=1e-7)


@pytest.mark.parametrize("params", [BipParams(use_cuts=False), BipParams(use_rins=False),
                                    BipParams(use_cuts=False, use_rins=False)])
def test_stage_toggles_still_exact(params):
    rng = np.random.default_rng(55)
    for _ in range(20):
        p = general_bip(rng, n=10)
        ref = bip_enum_min(p.lp.c, p.lp.A_eq, p.lp.b_eq, p.lp.A_ub, p.lp.b_ub)
        assert solve_bip(p, params).objective == pytest.approx(ref, abs=1e-7)


def test_branch_children_partition_and_bound_monotone():
    rng = np.random.default_rng(61)
    for _ in range(30):
        p = general_bip(rng, n=6)
        sol = solve_lp(p.lp)
        if not sol.optimal:
            continue
        j = int(np.argmin(np.abs(sol.values - 0.5)))
        X, parent = _feasible_set(p)
        _, c0 = _feasible_set(p.fix({j: 0}))
        _, c1 = _feasible_set(p.fix({j: 1}))
        assert not np.any(c0 & c1)
        assert np.array_equal(parent, c0 | c1)
        for v in (0.0, 1.0):
            child = sol.with_bounds({j: (v, v)})
            if child.optimal:
                assert child.objective >= sol.objective - 1e-9


def test_node_trace_logging(caplog):
    import logging

    rng = np.random.default_rng(3)
    p = general_bip(rng, n=10)
    with caplog.at_level(logging.DEBUG, logger="fjvrp.bip"):
        solve_bip(p)
    assert any("root lp bound" in r.message for r in caplog.records)
