"""Small dense linear programming kernel.

Two-phase tableau simplex with Bland's anti-cycling rule. Instances in this
package are tiny (tens of rows), so the solver favours determinism and an
auditable primal/dual certificate over speed.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import Infeasible, NumericalBreakdown

PIVOT_TOL = 1e-12
COST_TOL = 1e-11
PHASE1_TOL = 1e-9

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = {LE, EQ, GE}


class LPStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LPProblem:
    """maximize ``objective @ x`` subject to ``rows`` and per-variable bounds.

    ``rows`` holds ``(coeffs, relation, rhs)`` triples with relation one of
    ``"<="``, ``"="``, ``">="``. ``bounds`` defaults to ``(0, inf)`` for every
    variable; use ``-np.inf``/``np.inf`` for free directions.
    """

    objective: np.ndarray
    rows: list = field(default_factory=list)
    bounds: list | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        n = self.objective.shape[0]
        rows = []
        for coeffs, rel, rhs in self.rows:
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.shape != (n,):
                raise ValueError(f"constraint has {coeffs.shape} coefficients, expected {n}")
            if rel not in _RELATIONS:
                raise ValueError(f"unknown relation {rel!r}")
            if not np.isfinite(rhs):
                raise ValueError("constraint right-hand sides must be finite")
            rows.append((coeffs, rel, float(rhs)))
        self.rows = rows
        if self.bounds is None:
            self.bounds = [(0.0, np.inf)] * n
        if len(self.bounds) != n:
            raise ValueError("one (lower, upper) pair per variable is required")
        self.bounds = [(float(lo), float(hi)) for lo, hi in self.bounds]

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @classmethod
    def from_matrices(cls, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
                      A_ge=None, b_ge=None, bounds=None) -> "LPProblem":
        rows = []
        for A, b, rel in ((A_ub, b_ub, LE), (A_eq, b_eq, EQ), (A_ge, b_ge, GE)):
            if A is None:
                continue
            for a_i, b_i in zip(np.atleast_2d(A), np.atleast_1d(b)):
                rows.append((a_i, rel, b_i))
        return cls(np.asarray(c, dtype=float), rows, bounds)


@dataclass
class LPSolution:
    status: LPStatus
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float | None = None
    reduced_costs: np.ndarray | None = None
    dual_objective: float | None = None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


class _Standardized:
    """Rewrite of an LPProblem as ``max c.y, A y (rel) b, y >= 0``.

    Original variables are recovered as ``x = offset + T @ y``.
    """

    def __init__(self, prob: LPProblem):
        n = prob.n_vars
        cols = []      # (original var, sign)
        offset = np.zeros(n)
        extra_rows = []
        for j, (lo, hi) in enumerate(prob.bounds):
            if np.isfinite(lo):
                offset[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    if hi < lo:
                        raise ValueError(f"variable {j} has empty bounds")
                    extra_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                offset[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        ny = len(cols)
        T = np.zeros((n, ny))
        for k, (j, s) in enumerate(cols):
            T[j, k] = s
        self.T = T
        self.offset = offset
        self.c = prob.objective @ T
        self.c0 = float(prob.objective @ offset)

        A, b, rel = [], [], []
        for coeffs, r, rhs in prob.rows:
            A.append(coeffs @ T)
            b.append(rhs - coeffs @ offset)
            rel.append(r)
        self.n_user_rows = len(A)
        for k, ub in extra_rows:
            row = np.zeros(ny)
            row[k] = 1.0
            A.append(row)
            b.append(ub)
            rel.append(LE)
        self.A = np.array(A, dtype=float).reshape(len(A), ny)
        self.b = np.array(b, dtype=float)
        self.rel = rel


def _pivot(tab: np.ndarray, row: int, col: int) -> None:
    p = tab[row, col]
    if abs(p) < PIVOT_TOL:
        raise NumericalBreakdown(f"pivot {p:.3e} below {PIVOT_TOL}")
    tab[row] /= p
    colv = tab[:, col].copy()
    colv[row] = 0.0
    tab -= np.outer(colv, tab[row])


def _run_simplex(tab, basis, allowed, max_pivots):
    """Bland-rule iterations on ``tab`` whose last row holds negated reduced costs."""
    m = tab.shape[0] - 1
    pivots = 0
    while True:
        cost = tab[-1, :-1]
        entering = -1
        for j in np.flatnonzero(cost < -COST_TOL):
            if allowed[j]:
                entering = int(j)
                break
        if entering < 0:
            return "optimal", pivots
        colv = tab[:m, entering]
        cand = np.flatnonzero(colv > PIVOT_TOL)
        if cand.size == 0:
            return "unbounded", pivots
        ratios = tab[cand, -1] / colv[cand]
        best = ratios.min()
        ties = cand[ratios <= best + 1e-12 * max(1.0, abs(best))]
        leave = int(min(ties, key=lambda i: basis[i]))
        _pivot(tab, leave, entering)
        basis[leave] = entering
        pivots += 1
        if pivots > max_pivots:
            raise NumericalBreakdown("simplex pivot limit exceeded")


def solve_lp(prob: LPProblem) -> LPSolution:
    """Solve ``prob`` with a two-phase dense simplex (Bland's rule).

    On an optimal return the solution carries primal values, one dual value per
    user constraint row, reduced costs of the original variables and the dual
    objective. Raises NumericalBreakdown when the final basis is singular.
    """
    std = _Standardized(prob)
    A, b = std.A.copy(), std.b.copy()
    m, ny = A.shape
    rel = list(std.rel)
    flip = np.ones(m)
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1
            b[i] *= -1
            flip[i] = -1.0
            rel[i] = {LE: GE, GE: LE, EQ: EQ}[rel[i]]

    n_slack = sum(r != EQ for r in rel)
    n_art = sum(r != LE for r in rel)
    ncols = ny + n_slack + n_art
    full = np.zeros((m, ncols))
    full[:, :ny] = A
    basis = [-1] * m
    art_cols = []
    s = ny
    a = ny + n_slack
    for i, r in enumerate(rel):
        if r == LE:
            full[i, s] = 1.0
            basis[i] = s
            s += 1
        elif r == GE:
            full[i, s] = -1.0
            s += 1
            full[i, a] = 1.0
            basis[i] = a
            art_cols.append(a)
            a += 1
        else:
            full[i, a] = 1.0
            basis[i] = a
            art_cols.append(a)
            a += 1
    is_art = np.zeros(ncols, dtype=bool)
    is_art[art_cols] = True

    tab = np.zeros((m + 1, ncols + 1))
    tab[:m, :ncols] = full
    tab[:m, -1] = b
    max_pivots = 50 * (m + ncols) + 1000
    pivots = 0

    if art_cols:
        # phase 1: maximize -sum(artificials); reduced-cost row in canonical form
        tab[-1, :] = 0.0
        tab[-1, art_cols] = 1.0
        for i in range(m):
            if is_art[basis[i]]:
                tab[-1] -= tab[i]
        _, k = _run_simplex(tab, basis, np.ones(ncols, dtype=bool), max_pivots)
        pivots += k
        if -tab[-1, -1] > PHASE1_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            return LPSolution(LPStatus.INFEASIBLE, pivots=pivots)
        # drive remaining artificials out of the basis
        keep = []
        for i in range(m):
            if is_art[basis[i]]:
                row = tab[i, :ncols]
                cand = [j for j in np.flatnonzero(np.abs(row) > 1e-9) if not is_art[j]]
                if cand:
                    _pivot(tab, i, int(cand[0]))
                    basis[i] = int(cand[0])
                    keep.append(i)
            else:
                keep.append(i)
        if len(keep) < m:
            rows = keep + [m]
            tab = tab[rows]
            basis = [basis[i] for i in keep]
            kept_rows = np.array(keep, dtype=int)
        else:
            kept_rows = np.arange(m)
    else:
        kept_rows = np.arange(m)

    # phase 2
    cost = np.zeros(ncols)
    cost[:ny] = std.c
    mk = len(basis)
    tab[-1, :] = 0.0
    tab[-1, :ncols] = -cost
    for i in range(mk):
        cb = cost[basis[i]]
        if cb != 0.0:
            tab[-1] += cb * tab[i]
    status, k = _run_simplex(tab, basis, ~is_art, max_pivots)
    pivots += k
    if status == "unbounded":
        return LPSolution(LPStatus.UNBOUNDED, pivots=pivots)

    # refine from the final basis: x_B = B^-1 b, y = B^-T c_B
    Bmat = full[kept_rows][:, basis]
    try:
        cond = np.linalg.cond(Bmat) if mk else 1.0
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e13:
        raise NumericalBreakdown(f"final basis is singular (cond={cond:.2e})")
    yfull = np.zeros(ncols)
    if mk:
        xb = np.linalg.solve(Bmat, b[kept_rows])
        yfull[basis] = np.maximum(xb, 0.0) if xb.min() > -1e-9 else xb
        ydual_kept = np.linalg.solve(Bmat.T, cost[basis])
    else:
        ydual_kept = np.zeros(0)
    ydual = np.zeros(m)
    ydual[kept_rows] = ydual_kept
    ydual *= flip

    x = std.offset + std.T @ yfull[:ny]
    obj = float(prob.objective @ x)
    duals = ydual[: std.n_user_rows]
    if prob.rows:
        Auser = np.array([r[0] for r in prob.rows])
        buser = np.array([r[2] for r in prob.rows])
        rc = prob.objective - Auser.T @ duals
        dual_obj = float(duals @ buser + rc @ x)
    else:
        rc = prob.objective.copy()
        dual_obj = float(rc @ x)
    return LPSolution(LPStatus.OPTIMAL, x=x, duals=duals, objective=obj,
                      reduced_costs=rc, dual_objective=dual_obj, pivots=pivots)


def lex_min_point(P) -> np.ndarray:
    """Lexicographically smallest point of a nonempty bounded polytope.

    Minimizes the coordinates one at a time, pinning each optimum with an
    equality before moving to the next coordinate.
    """
    A, b = P.A, P.b
    d = A.shape[1]
    free = [(-np.inf, np.inf)] * d
    pins: list = []
    x = None
    for k in range(d):
        c = np.zeros(d)
        c[k] = -1.0
        rows = [(a_i, LE, b_i) for a_i, b_i in zip(A, b)] + pins
        sol = solve_lp(LPProblem(c, rows, free))
        if sol.status is LPStatus.INFEASIBLE and pins:
            # relax the last pin slightly when round-off made it infeasible
            e, _, val = pins[-1]
            pins[-1] = (e, LE, val + 1e-10 * (1.0 + abs(val)))
            rows = [(a_i, LE, b_i) for a_i, b_i in zip(A, b)] + pins
            sol = solve_lp(LPProblem(c, rows, free))
        if not sol.optimal:
            raise Infeasible(f"lex-min LP for coordinate {k} is {sol.status.value}")
        x = sol.x
        e = np.zeros(d)
        e[k] = 1.0
        pins.append((e, EQ, float(x[k])))
    return np.asarray(x, dtype=float)
