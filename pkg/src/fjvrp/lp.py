"""Bounded-variable simplex for LPs over boxes, with tableau access for cutting planes.

Problems are ``min c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  lb <= x <= ub`` with
``lb``/``ub`` defaulting to 0/1. The root problem is solved with a two-phase primal
simplex; cuts and bound changes are handled by a dual simplex restart from the
previous basis. Storage is a dense tableau, which suits the few-hundred-variable
assignment problems this package produces.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

EPS_FEAS = 1e-9
EPS_OPT = 1e-9
EPS_PIV = 1e-9
_REFACTOR_EVERY = 50
_PHASE1_TOL = 1e-8


class LpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class CutNotViolated(ValueError):
    pass


def _as_matrix(a, ncols: int) -> np.ndarray:
    if a is None:
        return np.zeros((0, ncols))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, ncols))
    return a


def _as_vector(v, n: int) -> np.ndarray:
    if v is None:
        return np.zeros(n)
    return np.asarray(v, dtype=float).reshape(-1)


@dataclass
class LpProblem:
    c: np.ndarray
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        n = self.c.size
        self.A_eq = _as_matrix(self.A_eq, n)
        self.A_ub = _as_matrix(self.A_ub, n)
        self.b_eq = _as_vector(self.b_eq, self.A_eq.shape[0])
        self.b_ub = _as_vector(self.b_ub, self.A_ub.shape[0])
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float).copy()
        self.ub = np.ones(n) if self.ub is None else np.asarray(self.ub, dtype=float).copy()
        for name, mat, rhs in (("eq", self.A_eq, self.b_eq), ("ub", self.A_ub, self.b_ub)):
            if mat.shape[1] != n:
                raise ValueError(f"{name} rows have {mat.shape[1]} coefficients, expected {n}")
            if rhs.shape != (mat.shape[0],):
                raise ValueError(f"{name} rhs has shape {rhs.shape}, expected ({mat.shape[0]},)")
            if not np.all(np.isfinite(rhs)):
                raise ValueError(f"{name} rhs must be finite")
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bounds must have one entry per variable")

    @property
    def var_count(self) -> int:
        return self.c.size

    def with_cut(self, coef, rhs: float) -> "LpProblem":
        return replace(
            self,
            A_ub=np.vstack([self.A_ub, np.asarray(coef, dtype=float).reshape(1, -1)]),
            b_ub=np.append(self.b_ub, float(rhs)),
        )

    def feasible(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lb - tol) or np.any(x > self.ub + tol):
            return False
        if self.A_eq.shape[0] and np.any(np.abs(self.A_eq @ x - self.b_eq) > tol * (1 + np.abs(self.b_eq))):
            return False
        if self.A_ub.shape[0] and np.any(self.A_ub @ x - self.b_ub > tol * (1 + np.abs(self.b_ub))):
            return False
        return True


@dataclass
class SimplexTableau:
    """Final simplex tableau: row i reads ``x[basis[i]] + sum_j rows[i, j] x_j = rhs[i]``.

    ``rhs`` holds the current basic values. Columns beyond the structural variables are
    slacks (and fixed-at-zero artificials). The optional metadata describes each column's
    bounds, whether it sits at its upper bound, whether it is integer-valued at every
    integer point, and its expression ``col_const + col_expr @ x_struct`` in terms of the
    structural variables. Hand-built tableaus may omit it; all nonbasic columns are then
    taken to sit at a lower bound of zero.
    """

    basis: np.ndarray
    rows: np.ndarray
    rhs: np.ndarray
    objective_value: float = 0.0
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    at_upper: np.ndarray | None = None
    integral: np.ndarray | None = None
    col_expr: np.ndarray | None = None
    col_const: np.ndarray | None = None
    n_struct: int | None = None

    def __post_init__(self):
        self.basis = np.asarray(self.basis, dtype=int)
        self.rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        self.rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        ncols = self.rows.shape[1]
        if self.lb is None:
            self.lb = np.zeros(ncols)
        if self.ub is None:
            self.ub = np.full(ncols, np.inf)
        if self.at_upper is None:
            self.at_upper = np.zeros(ncols, dtype=bool)
        if self.integral is None:
            self.integral = np.ones(ncols, dtype=bool)
        if self.n_struct is None:
            self.n_struct = ncols

    @property
    def ncols(self) -> int:
        return self.rows.shape[1]


@dataclass
class LpSolution:
    values: np.ndarray
    objective: float
    status: LpStatus
    problem: LpProblem
    _engine: "_Simplex | None" = field(default=None, repr=False)

    @property
    def tableau(self) -> SimplexTableau:
        if self._engine is None or self.status is not LpStatus.OPTIMAL:
            raise ValueError(f"no tableau for a {self.status.value} LP")
        return self._engine.tableau()

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def with_bounds(self, changes: dict[int, tuple[float, float]]) -> "LpSolution":
        """Re-solve after tightening variable bounds, warm-started from this basis."""
        if self._engine is None:
            raise ValueError("cannot warm-start from a solution without an engine")
        eng = self._engine.copy()
        lb, ub = self.problem.lb.copy(), self.problem.ub.copy()
        for j, (lo, hi) in changes.items():
            eng.set_bounds(j, lo, hi)
            lb[j], ub[j] = lo, hi
        status = eng.optimize(warm=True)
        return _solution(replace(self.problem, lb=lb, ub=ub), eng, status)


class _Simplex:
    """Dense bounded-variable simplex engine.

    Columns: structurals, then one slack per <=-row, then artificials. ``M``/``b`` hold
    the original constraint system so the tableau can be refactored.
    """

    def __init__(self, M, b, cost, lb, ub, integral, col_expr, col_const, n_struct):
        self.M = M
        self.b = b
        self.cost = cost
        self.lb = lb
        self.ub = ub
        self.integral = integral
        self.col_expr = col_expr
        self.col_const = col_const
        self.n_struct = n_struct
        self.x = lb.copy()
        self.at_upper = np.zeros(lb.size, dtype=bool)
        self.basis = np.zeros(0, dtype=int)
        self.T = np.zeros((0, lb.size))
        self.tr = np.zeros(0)
        self.pivots = 0

    @classmethod
    def from_problem(cls, p: LpProblem) -> "_Simplex":
        n = p.var_count
        n_eq, n_ub = p.A_eq.shape[0], p.A_ub.shape[0]
        rows = n_eq + n_ub
        A = np.vstack([p.A_eq, p.A_ub])
        rhs = np.concatenate([p.b_eq, p.b_ub])

        # structurals start at their lower bounds; rows not satisfied by a slack get an artificial
        resid = rhs - A @ p.lb
        art_rows = [i for i in range(rows) if i < n_eq or resid[i] < 0]
        ncols = n + n_ub + len(art_rows)
        M = np.zeros((rows, ncols))
        M[:, :n] = A
        M[n_eq:, n:n + n_ub] = np.eye(n_ub)
        basis = np.empty(rows, dtype=int)
        for i in range(n_eq, rows):
            basis[i] = n + (i - n_eq)
        for a, i in enumerate(art_rows):
            col = n + n_ub + a
            M[i, col] = 1.0 if resid[i] >= 0 else -1.0
            basis[i] = col

        lb = np.zeros(ncols)
        ub = np.full(ncols, np.inf)
        lb[:n], ub[:n] = p.lb, p.ub
        cost = np.zeros(ncols)
        cost[:n] = p.c

        integral = np.ones(ncols, dtype=bool)
        col_expr = np.zeros((ncols, n))
        col_const = np.zeros(ncols)
        col_expr[:n] = np.eye(n)
        for r in range(n_ub):
            col_expr[n + r] = -p.A_ub[r]
            col_const[n + r] = p.b_ub[r]
            integral[n + r] = _is_integer_row(p.A_ub[r], p.b_ub[r])

        eng = cls(M, rhs.copy(), cost, lb, ub, integral, col_expr, col_const, n)
        eng.basis = basis
        eng.x = np.zeros(ncols)
        eng.x[:n] = p.lb
        eng.n_art = len(art_rows)
        eng.art_start = n + n_ub
        eng.refactor()
        return eng

    def copy(self) -> "_Simplex":
        new = object.__new__(_Simplex)
        new.__dict__.update(self.__dict__)
        for name in ("M", "b", "cost", "lb", "ub", "integral", "col_expr", "col_const",
                     "x", "at_upper", "basis", "T", "tr"):
            setattr(new, name, getattr(self, name).copy())
        return new

    # -- linear algebra ---------------------------------------------------

    def refactor(self):
        B = self.M[:, self.basis]
        if B.shape[0]:
            self.T = np.linalg.solve(B, self.M)
            self.tr = np.linalg.solve(B, self.b)
            self.T[np.abs(self.T) < 1e-13] = 0.0
            self.T[np.arange(len(self.basis)), self.basis] = 1.0
        else:
            self.T = np.zeros((0, self.M.shape[1]))
            self.tr = np.zeros(0)

    def pivot(self, r: int, j: int):
        T, tr = self.T, self.tr
        piv = T[r, j]
        T[r] /= piv
        tr[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        tr -= col * tr[r]
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.basis[r] = j
        self.pivots += 1
        if self.pivots % _REFACTOR_EVERY == 0:
            self.refactor()

    def sync(self) -> np.ndarray:
        """Recompute basic values from the nonbasic ones; returns x_B."""
        xn = self.x.copy()
        xn[self.basis] = 0.0
        xb = self.tr - self.T @ xn
        self.x[self.basis] = xb
        return xb

    def nonbasic_mask(self) -> np.ndarray:
        mask = np.ones(self.x.size, dtype=bool)
        mask[self.basis] = False
        return mask

    def reduced_costs(self, cost) -> np.ndarray:
        return cost - cost[self.basis] @ self.T

    # -- bounds and rows ------------------------------------------------

    def set_bounds(self, j: int, lo: float, hi: float):
        self.lb[j], self.ub[j] = lo, hi
        if j not in self.basis:
            if self.at_upper[j] and np.isfinite(hi) and hi > lo:
                self.x[j] = hi
            else:
                self.at_upper[j] = False
                self.x[j] = lo

    def add_row(self, coef: np.ndarray, rhs: float, integral: bool):
        """Append ``coef @ x_struct <= rhs`` with a new basic slack."""
        rows, ncols = self.M.shape
        full = np.zeros(ncols + 1)
        full[:self.n_struct] = coef
        full[ncols] = 1.0
        self.M = np.vstack([np.hstack([self.M, np.zeros((rows, 1))]), full])
        self.b = np.append(self.b, rhs)
        newrow = full.copy()
        if rows:
            newrow[:ncols] -= full[self.basis] @ self.T
        newtr = rhs - (full[self.basis] @ self.tr if rows else 0.0)
        # newrow is zero on the old basic columns, so the new basis stays an identity
        self.T = np.vstack([np.hstack([self.T, np.zeros((rows, 1))]), newrow])
        self.tr = np.append(self.tr, newtr)
        self.basis = np.append(self.basis, ncols)
        self.cost = np.append(self.cost, 0.0)
        self.lb = np.append(self.lb, 0.0)
        self.ub = np.append(self.ub, np.inf)
        self.x = np.append(self.x, 0.0)
        self.at_upper = np.append(self.at_upper, False)
        self.integral = np.append(self.integral, integral)
        self.col_expr = np.vstack([self.col_expr, -np.asarray(coef, dtype=float)])
        self.col_const = np.append(self.col_const, rhs)

    # -- simplex loops ----------------------------------------------------

    def _iteration_cap(self) -> int:
        return 50 * (self.T.shape[0] + self.T.shape[1]) + 1000

    def primal(self, cost) -> LpStatus:
        degenerate = 0
        bland = False
        n_bland = 3 * max(self.n_struct, 1)
        for _ in range(self._iteration_cap()):
            xb = self.sync()
            d = self.reduced_costs(cost)
            free = self.nonbasic_mask() & (self.ub - self.lb > EPS_FEAS)
            inc = free & ~self.at_upper & (d < -EPS_OPT)
            dec = free & self.at_upper & (d > EPS_OPT)
            cand = np.flatnonzero(inc | dec)
            if cand.size == 0:
                return LpStatus.OPTIMAL
            j = cand[0] if bland else cand[np.argmax(np.abs(d[cand]))]
            s = 1.0 if inc[j] else -1.0
            alpha = s * self.T[:, j]
            lbB, ubB = self.lb[self.basis], self.ub[self.basis]
            t = np.full(alpha.size, np.inf)
            pos = alpha > EPS_PIV
            neg = (alpha < -EPS_PIV) & np.isfinite(ubB)
            t[pos] = (xb[pos] - lbB[pos]) / alpha[pos]
            t[neg] = (ubB[neg] - xb[neg]) / -alpha[neg]
            t = np.maximum(t, 0.0)
            t_flip = self.ub[j] - self.lb[j]
            t_min = t.min() if t.size else np.inf
            if t_flip <= t_min:
                if not np.isfinite(t_flip):
                    return LpStatus.UNBOUNDED
                self.at_upper[j] = not self.at_upper[j]
                self.x[j] = self.ub[j] if self.at_upper[j] else self.lb[j]
                degenerate = 0
                continue
            ties = np.flatnonzero(t <= t_min + 1e-12)
            if bland:
                r = ties[np.argmin(self.basis[ties])]
            else:
                r = ties[np.argmax(np.abs(alpha[ties]))]
            leaving = self.basis[r]
            to_upper = alpha[r] < 0
            self.pivot(r, j)
            self.at_upper[j] = False
            self.at_upper[leaving] = to_upper
            self.x[leaving] = self.ub[leaving] if to_upper else self.lb[leaving]
            if t_min < 1e-12:
                degenerate += 1
                if degenerate > n_bland:
                    bland = True
            else:
                degenerate = 0
        raise RuntimeError("primal simplex iteration limit reached")

    def dual(self, cost) -> LpStatus:
        degenerate = 0
        bland = False
        n_bland = 3 * max(self.n_struct, 1)
        for _ in range(self._iteration_cap()):
            xb = self.sync()
            lbB, ubB = self.lb[self.basis], self.ub[self.basis]
            below = lbB - xb
            above = xb - ubB
            viol = np.maximum(below, above)
            bad = np.flatnonzero(viol > EPS_FEAS * (1 + np.abs(self.tr)))
            if bad.size == 0:
                return LpStatus.OPTIMAL
            r = bad[np.argmin(self.basis[bad])] if bland else bad[np.argmax(viol[bad])]
            raise_it = below[r] > above[r]
            row = self.T[r]
            d = self.reduced_costs(cost)
            free = self.nonbasic_mask() & (self.ub - self.lb > EPS_FEAS)
            up = self.at_upper
            if raise_it:
                elig = free & ((~up & (row < -EPS_PIV)) | (up & (row > EPS_PIV)))
            else:
                elig = free & ((~up & (row > EPS_PIV)) | (up & (row < -EPS_PIV)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return LpStatus.INFEASIBLE
            dj = np.where(up[cand], np.maximum(-d[cand], 0.0), np.maximum(d[cand], 0.0))
            ratio = dj / np.abs(row[cand])
            rmin = ratio.min()
            ties = cand[ratio <= rmin + 1e-12]
            j = ties[0] if bland else ties[np.argmax(np.abs(row[ties]))]
            leaving = self.basis[r]
            self.pivot(r, j)
            self.at_upper[j] = False
            self.at_upper[leaving] = not raise_it
            self.x[leaving] = self.lb[leaving] if raise_it else self.ub[leaving]
            if rmin < 1e-12:
                degenerate += 1
                if degenerate > n_bland:
                    bland = True
            else:
                degenerate = 0
        raise RuntimeError("dual simplex iteration limit reached")

    def _phase1(self) -> LpStatus:
        if self.n_art == 0:
            return LpStatus.OPTIMAL
        art = slice(self.art_start, self.art_start + self.n_art)
        cost1 = np.zeros(self.x.size)
        cost1[art] = 1.0
        self.primal(cost1)
        self.sync()
        scale = 1.0 + np.abs(self.b).max(initial=0.0)
        if self.x[art].sum() > _PHASE1_TOL * scale:
            return LpStatus.INFEASIBLE
        # artificials are pinned at zero from here on
        self.lb[art] = 0.0
        self.ub[art] = 0.0
        return LpStatus.OPTIMAL

    def optimize(self, warm: bool = False) -> LpStatus:
        if not warm:
            if self._phase1() is LpStatus.INFEASIBLE:
                return LpStatus.INFEASIBLE
            status = self.primal(self.cost)
        else:
            status = self.dual(self.cost)
            if status is LpStatus.OPTIMAL:
                status = self.primal(self.cost)
        # refactor and re-verify both feasibilities to shed accumulated round-off
        for _ in range(3):
            if status is not LpStatus.OPTIMAL:
                return status
            self.refactor()
            if self._primal_ok() and self._dual_ok():
                return status
            status = self.dual(self.cost)
            if status is LpStatus.OPTIMAL:
                status = self.primal(self.cost)
        return status

    def _primal_ok(self) -> bool:
        xb = self.sync()
        lbB, ubB = self.lb[self.basis], self.ub[self.basis]
        tol = EPS_FEAS * (1 + np.abs(self.tr))
        return bool(np.all(xb >= lbB - tol) and np.all(xb <= ubB + tol))

    def _dual_ok(self) -> bool:
        d = self.reduced_costs(self.cost)
        free = self.nonbasic_mask() & (self.ub - self.lb > EPS_FEAS)
        bad = free & ((~self.at_upper & (d < -EPS_OPT)) | (self.at_upper & (d > EPS_OPT)))
        return not bad.any()

    # -- views ------------------------------------------------------------

    def structural_values(self) -> np.ndarray:
        n = self.n_struct
        return np.clip(self.x[:n], self.lb[:n], self.ub[:n])

    def tableau(self) -> SimplexTableau:
        self.sync()
        return SimplexTableau(
            basis=self.basis.copy(),
            rows=self.T.copy(),
            rhs=self.x[self.basis].copy(),
            objective_value=float(self.cost[:self.n_struct] @ self.structural_values()),
            lb=self.lb.copy(),
            ub=self.ub.copy(),
            at_upper=self.at_upper.copy(),
            integral=self.integral.copy(),
            col_expr=self.col_expr.copy(),
            col_const=self.col_const.copy(),
            n_struct=self.n_struct,
        )


def _is_integer_row(coef, rhs) -> bool:
    vals = np.append(coef, rhs)
    return bool(np.all(np.abs(vals - np.round(vals)) <= 1e-12))


def _solution(problem: LpProblem, eng: _Simplex, status: LpStatus) -> LpSolution:
    if status is LpStatus.OPTIMAL:
        x = eng.structural_values()
        return LpSolution(x, float(problem.c @ x), status, problem, eng)
    n = problem.var_count
    inf = np.inf if status is LpStatus.INFEASIBLE else -np.inf
    return LpSolution(np.full(n, np.nan), inf, status, problem, None)


def solve_lp(p: LpProblem) -> LpSolution:
    if np.any(p.lb > p.ub + EPS_FEAS):
        return _solution(p, None, LpStatus.INFEASIBLE)
    eng = _Simplex.from_problem(p)
    status = eng.optimize(warm=False)
    return _solution(p, eng, status)


def resolve_with_cut(sol: LpSolution, cut, slack_integral: bool | None = None) -> LpSolution:
    """Add the inequality ``coef @ x <= rhs`` to a solved LP and re-optimize by dual simplex.

    ``cut`` is a ``(coef, rhs)`` pair or any object with ``coef``/``rhs`` attributes.
    ``slack_integral`` declares whether the new row's slack is integer at integer points;
    by default that is inferred from the row's data being integral.
    """
    coef, rhs = (cut.coef, cut.rhs) if hasattr(cut, "coef") else cut
    coef = np.asarray(coef, dtype=float).reshape(-1)
    rhs = float(rhs)
    if not sol.optimal or sol._engine is None:
        raise ValueError("resolve_with_cut needs an optimal solution")
    if coef @ sol.values <= rhs + EPS_FEAS * (1 + abs(rhs)):
        raise CutNotViolated(f"cut holds at the current point ({coef @ sol.values:.12g} <= {rhs:.12g})")
    if slack_integral is None:
        slack_integral = _is_integer_row(coef, rhs)
    eng = sol._engine.copy()
    eng.add_row(coef, rhs, slack_integral)
    status = eng.optimize(warm=True)
    return _solution(sol.problem.with_cut(coef, rhs), eng, status)
