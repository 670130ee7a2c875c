"""Exact 0-1 integer programming: preprocessing, Gomory cuts, RINS, branch-and-bound.

``solve_bip`` runs the stages in order and stops at the first one that proves
optimality: row preprocessing, the root LP relaxation, rounds of Gomory fractional
cuts at the root, then best-bound branch-and-bound with a single RINS call once the
first incumbent is known.
"""

from __future__ import annotations

import heapq
import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .lp import CutNotViolated, LpProblem, LpSolution, SimplexTableau, resolve_with_cut, solve_lp

log = logging.getLogger(__name__)

INT_TOL = 1e-5
_ROW_TOL = 1e-9


class NoFractionalRow(ValueError):
    pass


@dataclass
class BipProblem:
    """A 0-1 program ``min c.x, A_eq x = b_eq, A_ub x <= b_ub``.

    ``shape=(n, m)`` records the flattening ``(i, k) -> i * m + k`` for assignment models.
    The LP's ``lb``/``ub`` carry any variable fixings (``lb == ub``).
    """

    lp: LpProblem
    shape: tuple[int, int] | None = None

    def __post_init__(self):
        if self.shape is not None and self.shape[0] * self.shape[1] != self.lp.var_count:
            raise ValueError(f"shape {self.shape} does not match {self.lp.var_count} variables")

    @classmethod
    def from_arrays(cls, c, A_eq=None, b_eq=None, A_ub=None, b_ub=None, shape=None) -> "BipProblem":
        return cls(LpProblem(c, A_eq, b_eq, A_ub, b_ub), shape)

    @property
    def var_count(self) -> int:
        return self.lp.var_count

    def index(self, i: int, k: int) -> int:
        if self.shape is None:
            raise ValueError("problem has no (i, k) shape")
        return i * self.shape[1] + k

    def objective(self, x) -> float:
        return float(self.lp.c @ np.asarray(x, dtype=float))

    def feasible(self, x, tol: float = _ROW_TOL) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x == 0) | (x == 1))) and self.lp.feasible(x, tol)

    def fix(self, fixes: dict[int, int]) -> "BipProblem":
        lb, ub = self.lp.lb.copy(), self.lp.ub.copy()
        for j, v in fixes.items():
            lb[j] = ub[j] = float(v)
        return replace(self, lp=replace(self.lp, lb=lb, ub=ub))


@dataclass(frozen=True)
class RowBounds:
    L_min: float  # sum of negative coefficients
    L_max: float  # sum of positive coefficients


def row_bounds(coef, free=None) -> RowBounds:
    coef = np.asarray(coef, dtype=float)
    if free is not None:
        coef = coef[free]
    return RowBounds(float(coef[coef < 0].sum()), float(coef[coef > 0].sum()))


class Preprocessed(NamedTuple):
    problem: BipProblem
    fixings: dict[int, int]
    status: str  # "feasible" | "infeasible"


def preprocess(p: BipProblem, tol: float = _ROW_TOL) -> Preprocessed:
    """Tighten the <=-rows to a fixpoint without changing the binary feasible set.

    Per row, with ``L_min``/``L_max`` over the still-free variables: infeasible if
    ``L_min > b``; dropped if ``L_max <= b``; ``x_k = 0`` when ``a_k > 0`` and
    ``L_min + a_k > b``; ``x_k = 1`` when ``a_k < 0`` and ``L_min - a_k > b``. Otherwise
    coefficients are improved: positive ``a_k > L_max - b`` shrink to ``L_max - b``
    (with ``b`` reduced by the same amount) and negative ``a_k < b - L_max`` rise to
    ``b - L_max``. A row whose nonzero coefficients all equal the same ``a > 0`` is a
    cardinality limit and is rewritten as ``sum x <= floor(b / a)``; the binary points
    are unchanged but the LP relaxation tightens and the slack becomes integral.
    Fixed variables are substituted out and kept as ``lb == ub`` bounds.
    """
    lp = p.lp
    A_eq, b_eq = lp.A_eq.copy(), lp.b_eq.copy()
    A_ub, b_ub = lp.A_ub.copy(), lp.b_ub.copy()
    lb, ub = lp.lb.copy(), lp.ub.copy()
    n = lp.var_count
    fixings: dict[int, int] = {}
    keep = np.ones(len(b_ub), dtype=bool)

    def apply(j: int, v: int):
        fixings[j] = v
        lb[j] = ub[j] = float(v)
        if v:
            b_eq[:] -= A_eq[:, j]
            b_ub[:] -= A_ub[:, j]
        A_eq[:, j] = 0.0
        A_ub[:, j] = 0.0

    def done(status):
        order = dict(sorted(fixings.items()))
        out = LpProblem(lp.c.copy(), A_eq, b_eq, A_ub[keep], b_ub[keep], lb, ub)
        return Preprocessed(replace(p, lp=out), order, status)

    for j in range(n):
        if lb[j] > ub[j]:
            return done("infeasible")
        if lb[j] == ub[j]:
            if lb[j] not in (0.0, 1.0):
                return done("infeasible")
            apply(j, int(lb[j]))

    changed = True
    while changed:
        changed = False
        for r in np.flatnonzero(keep):
            a, b = A_ub[r], b_ub[r]
            pos, neg = a > 0, a < 0
            L_min, L_max = a[neg].sum(), a[pos].sum()
            if L_min > b + tol:
                return done("infeasible")
            if L_max <= b + tol:
                keep[r] = False
                changed = True
                continue
            fix0 = np.flatnonzero(pos & (L_min + a > b + tol))
            fix1 = np.flatnonzero(neg & (L_min - a > b + tol))
            if fix0.size or fix1.size:
                for j in fix0:
                    apply(int(j), 0)
                for j in fix1:
                    apply(int(j), 1)
                changed = True
                continue
            slack = L_max - b  # > 0 here
            big = pos & (a > slack + tol)
            if big.any():
                b_ub[r] -= (a[big] - slack).sum()
                a[big] = slack
                changed = True
            low = neg & (a < -slack - tol)
            if low.any():
                a[low] = -slack
                changed = True
            if not neg.any():
                a0 = a[pos][0]
                if np.all(a[pos] == a0):
                    b = b_ub[r]
                    k = float(np.floor((b + tol) / a0))
                    if a0 != 1.0 or b != k:
                        a[pos] = 1.0
                        b_ub[r] = k
                        changed = True

    for r in range(len(b_eq)):
        if not A_eq[r].any() and abs(b_eq[r]) > tol:
            return done("infeasible")
    return done("feasible")


@dataclass
class GomoryCut:
    """Fractional cut ``sum_j -g_j y_j + u = -f`` from tableau row ``source_row``.

    ``y_j`` is column j measured from the bound it currently sits at (so ``y_j >= 0``),
    ``g`` holds the fractional parts of the row's coefficients and ``f`` that of the basic
    value. ``coef``/``rhs`` restate the cut as ``coef @ x <= rhs`` over the structural
    variables when the tableau carries column expressions.
    """

    g: np.ndarray
    f: float
    source_row: int
    coef: np.ndarray | None = None
    rhs: float | None = None

    @property
    def coefficients(self) -> np.ndarray:
        return -self.g

    @property
    def slack_rhs(self) -> float:
        return -self.f

    def violation(self, x) -> float:
        """Amount by which structural point ``x`` breaks the cut (positive = violated)."""
        if self.coef is None:
            raise ValueError("cut has no structural form")
        return float(self.coef @ np.asarray(x, dtype=float) - self.rhs)


def _shifted_rows(tab: SimplexTableau) -> np.ndarray:
    sign = np.where(tab.at_upper, -1.0, 1.0)
    t = tab.rows * sign
    t[:, tab.basis] = 0.0
    t[:, tab.ub - tab.lb <= 1e-12] = 0.0
    near = np.abs(t - np.round(t)) < 1e-9
    t[near] = np.round(t[near])
    return t


def gomory_cut_from(tab: SimplexTableau, int_tol: float = INT_TOL) -> GomoryCut:
    """Cut from the row whose basic value has the largest fractional part (ties: lowest row).

    Only rows whose basic variable and every column with a nonzero coefficient are
    integer-valued at integer points qualify; for the rest the rounding argument fails.
    """
    xb = np.asarray(tab.rhs, dtype=float)
    frac = xb - np.floor(xb)
    fractional = tab.integral[tab.basis] & (frac > int_tol) & (frac < 1 - int_tol)
    if not fractional.any():
        raise NoFractionalRow("all basic values are integral")
    t = _shifted_rows(tab)
    support_ok = ~np.any((t != 0) & ~tab.integral[None, :], axis=1)
    cand = np.flatnonzero(fractional & support_ok)
    if cand.size == 0:
        raise NoFractionalRow("no fractional row has an integer-valued support")
    r = int(cand[np.argmax(frac[cand])])
    g = t[r] - np.floor(t[r])
    f = float(frac[r])

    coef = rhs = None
    if tab.col_expr is not None:
        nz = np.flatnonzero(g)
        sign = np.where(tab.at_upper[nz], -1.0, 1.0)
        bound = np.where(tab.at_upper[nz], tab.ub[nz], tab.lb[nz])
        w = g[nz] * sign
        # sum_j g_j y_j >= f  with  y_j = sign_j * (col_const_j + col_expr_j @ x - bound_j)
        alpha = w @ tab.col_expr[nz]
        const = float(w @ (tab.col_const[nz] - bound))
        coef, rhs = -alpha, const - f
    return GomoryCut(g, f, r, coef, rhs)


@dataclass
class BipParams:
    int_tol: float = INT_TOL
    max_cut_rounds: int = 10
    cut_min_improvement: float = 1e-9
    use_cuts: bool = True
    use_rins: bool = True
    rins_node_budget: int = 500
    node_limit: int | None = None


@dataclass
class BipSolution:
    values: np.ndarray
    objective: float
    status: str  # "optimal" | "infeasible" | "node_limit"
    node_count: int = 0
    cut_count: int = 0
    lp_bound: float = -np.inf
    cuts: list[GomoryCut] = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _rounded(sol: LpSolution, p: BipProblem, tol: float) -> np.ndarray | None:
    x = sol.values
    r = np.round(x)
    if np.max(np.abs(x - r), initial=0.0) > tol:
        return None
    return r if p.lp.feasible(r, _ROW_TOL) else None


def _branch_var(sol: LpSolution) -> int:
    x = sol.values
    free = sol.problem.ub - sol.problem.lb > 0
    dist = np.where(free, np.abs(x - 0.5), np.inf)
    return int(np.argmin(dist))


def _prune_tol(best: float) -> float:
    return 1e-9 * (1.0 + abs(best)) if np.isfinite(best) else 0.0


def _solve(p: BipProblem, params: BipParams, cutoff: float = np.inf,
           node_limit: int | None = None, allow_rins: bool = True) -> BipSolution:
    n = p.var_count
    empty = np.zeros(n, dtype=int)
    reduced, _fixings, status = preprocess(p)
    if status == "infeasible":
        return BipSolution(empty, np.inf, "infeasible")

    sol = solve_lp(reduced.lp)
    if not sol.optimal:
        return BipSolution(empty, np.inf, "infeasible")
    lp_bound = sol.objective
    log.debug("root lp bound=%.10g", lp_bound)

    def finish(x, obj, status, nodes, cuts):
        return BipSolution(x.astype(int), obj, status, nodes, len(cuts), lp_bound, cuts)

    cuts: list[GomoryCut] = []
    x = _rounded(sol, p, params.int_tol)
    if x is not None:
        obj = p.objective(x)
        if obj < cutoff - _prune_tol(cutoff):
            return finish(x, obj, "optimal", 0, cuts)
        return BipSolution(empty, np.inf, "infeasible", lp_bound=lp_bound)

    if params.use_cuts:
        for _ in range(params.max_cut_rounds):
            try:
                cut = gomory_cut_from(sol.tableau, params.int_tol)
                nxt = resolve_with_cut(sol, cut, slack_integral=True)
            except (NoFractionalRow, CutNotViolated):
                break
            cuts.append(cut)
            if not nxt.optimal:
                return BipSolution(empty, np.inf, "infeasible", 0, len(cuts), lp_bound, cuts)
            gain = nxt.objective - sol.objective
            sol = nxt
            log.debug("cut %d from row %d f=%.6g bound=%.10g", len(cuts), cut.source_row, cut.f, sol.objective)
            x = _rounded(sol, p, params.int_tol)
            if x is not None:
                obj = p.objective(x)
                if obj < cutoff - _prune_tol(cutoff):
                    return finish(x, obj, "optimal", 0, cuts)
                return BipSolution(empty, np.inf, "infeasible", 0, len(cuts), lp_bound, cuts)
            if gain < params.cut_min_improvement:
                break

    best, incumbent = cutoff, None
    rins_pending = allow_rins and params.use_rins
    nodes = 0
    limit_hit = False
    counter = itertools.count()
    heap = [(sol.objective, next(counter), 0, sol)]
    while heap:
        bound, _, depth, node = heapq.heappop(heap)
        if bound >= best - _prune_tol(best):
            log.debug("depth=%d bound=%.10g action=prune", depth, bound)
            continue
        x = _rounded(node, p, params.int_tol)
        if x is not None:
            obj = p.objective(x)
            if obj < best:
                best, incumbent = obj, x
            log.debug("depth=%d bound=%.10g action=incumbent obj=%.10g", depth, bound, obj)
            continue
        if rins_pending and incumbent is not None:
            rins_pending = False
            better = rins(p, incumbent, node, params.rins_node_budget, params)
            if p.objective(better) < best - _prune_tol(best):
                best, incumbent = p.objective(better), better
                log.debug("rins improved incumbent to %.10g", best)
            if bound >= best - _prune_tol(best):
                continue
        if node_limit is not None and nodes >= node_limit:
            limit_hit = True
            break
        j = _branch_var(node)
        log.debug("depth=%d bound=%.10g action=branch var=%d value=%.6g", depth, bound, j, node.values[j])
        for v in (0.0, 1.0):
            child = node.with_bounds({j: (v, v)})
            nodes += 1
            if child.optimal and child.objective < best - _prune_tol(best):
                heapq.heappush(heap, (child.objective, next(counter), depth + 1, child))

    if incumbent is None:
        return BipSolution(empty, np.inf, "node_limit" if limit_hit else "infeasible", nodes, len(cuts), lp_bound, cuts)
    return finish(incumbent, best, "node_limit" if limit_hit else "optimal", nodes, cuts)


def rins(p: BipProblem, incumbent, relaxation: LpSolution, budget: int = 500,
         params: BipParams | None = None) -> np.ndarray:
    """Relaxation-induced neighbourhood search around a feasible incumbent.

    Variables on which the incumbent and the relaxation agree are fixed; the remaining
    sub-problem is searched under ``budget`` branch-and-bound nodes, keeping only
    solutions strictly better than the incumbent. Returns the incumbent if none is found.
    """
    params = params or BipParams()
    inc = np.asarray(incumbent, dtype=float)
    agree = np.abs(inc - relaxation.values) <= params.int_tol
    if agree.all():
        return inc.astype(int)
    sub = p.fix({int(j): int(inc[j]) for j in np.flatnonzero(agree)})
    res = _solve(sub, params, cutoff=p.objective(inc), node_limit=budget, allow_rins=False)
    if res.status in ("optimal", "node_limit") and np.isfinite(res.objective) and p.feasible(res.values):
        if res.objective < p.objective(inc):
            return res.values
    return inc.astype(int)


def solve_bip(p: BipProblem, params: BipParams | None = None) -> BipSolution:
    params = params or BipParams()
    return _solve(p, params, node_limit=params.node_limit)
