"""Two-phase primal simplex with general variable bounds.

Dense numpy implementation sized for desk-scale programs. Nonbasic variables
rest at either bound; entering uses Dantzig's rule with a permanent switch to
Bland's rule after a degenerate streak, which guarantees termination. The
basis is refactorized every iteration (simplicity over speed).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .model import EQ, FEAS_TOL, GE, LE, OPT_TOL, LinearProgram, LpError, LpSolution

_PIVOT_TOL = 1e-9
_DEGEN_RUN = 60


def solve_lp(
    lp: LinearProgram,
    lb_override: np.ndarray | None = None,
    ub_override: np.ndarray | None = None,
    max_pivots: int | None = None,
) -> LpSolution:
    """Solve min c'x s.t. rows, lb <= x <= ub. Returns duals and reduced costs."""
    n = lp.n_vars
    m = lp.n_rows
    lb = np.array([v.lb for v in lp.variables], dtype=float)
    ub = np.array([v.ub for v in lp.variables], dtype=float)
    if lb_override is not None:
        lb = np.asarray(lb_override, dtype=float).copy()
    if ub_override is not None:
        ub = np.asarray(ub_override, dtype=float).copy()
    if np.any(lb > ub + 1e-12):
        return LpSolution(status="infeasible", message="empty variable box")
    lb = np.minimum(lb, ub)  # remove float dust on fixed vars
    c_struct = np.array([v.obj for v in lp.variables], dtype=float)

    if m == 0:
        x = np.where(c_struct >= 0, lb, ub)
        if np.any(np.isinf(x)):
            return LpSolution(status="unbounded", message="no rows, free improving var")
        return LpSolution(
            status="optimal",
            x=x.tolist(),
            objective=float(c_struct @ x),
            duals=[],
            reduced_costs=c_struct.tolist(),
        )

    # structural + slack columns; every row becomes an equality
    slack_of_row = {}
    n_slack = sum(1 for r in lp.rows if r.relation != EQ)
    total = n + n_slack
    A = np.zeros((m, total))
    b = np.zeros(m)
    L = np.concatenate([lb, np.zeros(n_slack)])
    U = np.concatenate([ub, np.full(n_slack, math.inf)])
    s = n
    for i, row in enumerate(lp.rows):
        for j, a in row.coeffs:
            A[i, j] += a
        b[i] = row.rhs
        if row.relation == LE:
            A[i, s] = 1.0
            slack_of_row[i] = s
            s += 1
        elif row.relation == GE:
            A[i, s] = -1.0
            slack_of_row[i] = s
            s += 1

    # phase 1: artificial basis
    x0 = np.where(np.isfinite(L), L, 0.0)
    r = b - A @ x0
    sign = np.where(r >= 0, 1.0, -1.0)
    A1 = np.hstack([A, np.diag(sign)])
    L1 = np.concatenate([L, np.zeros(m)])
    U1 = np.concatenate([U, np.full(m, math.inf)])
    c1 = np.concatenate([np.zeros(total), np.ones(m)])
    basis = list(range(total, total + m))
    at_upper = np.zeros(total + m, dtype=bool)
    budget = max_pivots or (10000 + 50 * (m + total))

    st, basis, at_upper, x, _, _ = _core(A1, b, c1, L1, U1, basis, at_upper, budget)
    if st == "stalled":
        return LpSolution(status="stalled", message="pivot budget exhausted in phase 1")
    if st == "unbounded":  # cannot happen: phase-1 objective is bounded below by 0
        return LpSolution(status="stalled", message="phase 1 reported unbounded")
    if float(c1 @ x) > FEAS_TOL * (1.0 + float(np.abs(b).sum())):
        worst = int(np.argmax(x[total:]))
        return LpSolution(
            status="infeasible",
            message=f"infeasible; artificial remains in row {lp.rows[worst].name!r}",
        )

    # phase 2: pin artificials to zero, restore true costs
    U1[total:] = 0.0
    L1[total:] = 0.0
    c2 = np.concatenate([c_struct, np.zeros(n_slack), np.zeros(m)])
    st, basis, at_upper, x, y, d = _core(A1, b, c2, L1, U1, basis, at_upper, budget)
    if st == "stalled":
        return LpSolution(status="stalled", message="pivot budget exhausted in phase 2")
    if st == "unbounded":
        return LpSolution(status="unbounded", message="objective unbounded below")
    xs = x[:n]
    return LpSolution(
        status="optimal",
        x=xs.tolist(),
        objective=float(c_struct @ xs),
        duals=y.tolist(),
        reduced_costs=(c_struct - A[:, :n].T @ y).tolist(),
    )


def _core(A, b, c, L, U, basis, at_upper, budget):
    """Bounded-variable simplex loop. Returns (status, basis, at_upper, x, y, d)."""
    m, N = A.shape
    basis = list(basis)
    bland = False
    degen = 0
    x = y = d = None
    for _ in range(budget):
        in_basis = np.zeros(N, dtype=bool)
        in_basis[basis] = True
        x = np.where(at_upper, U, L)
        x[basis] = 0.0
        try:
            factor = lu_factor(A[:, basis])
        except Exception:
            return "stalled", basis, at_upper, np.where(at_upper, U, L), None, None
        xB = lu_solve(factor, b - A @ x)
        if not np.all(np.isfinite(xB)):
            return "stalled", basis, at_upper, np.where(at_upper, U, L), None, None
        x[basis] = xB
        y = lu_solve(factor, c[basis], trans=1)
        d = c - A.T @ y

        # effective violation: negative means the column improves the objective
        eff = np.where(at_upper, -d, d)
        eff[in_basis] = math.inf
        eff[L == U] = math.inf
        if bland:
            viol = np.nonzero(eff < -OPT_TOL)[0]
            enter = int(viol[0]) if viol.size else -1
        else:
            enter = int(np.argmin(eff))
            if eff[enter] >= -OPT_TOL:
                enter = -1
        if enter < 0:
            return "optimal", basis, at_upper, x, y, d

        sigma = -1.0 if at_upper[enter] else 1.0
        w = lu_solve(factor, A[:, enter])

        # ratio test: smallest step that drives a basic variable (or the
        # entering variable itself) to a bound
        t_enter = U[enter] - L[enter]
        t_best = t_enter
        leave_pos = -1
        leave_to_upper = False
        for pos in range(m):
            wk = sigma * w[pos]
            k = basis[pos]
            if wk > _PIVOT_TOL:
                t = (xB[pos] - L[k]) / wk
                hits_upper = False
            elif wk < -_PIVOT_TOL:
                if math.isinf(U[k]):
                    continue
                t = (U[k] - xB[pos]) / (-wk)
                hits_upper = True
            else:
                continue
            t = max(t, 0.0)
            better = t < t_best - 1e-12
            tie = abs(t - t_best) <= 1e-12 and leave_pos >= 0 and k < basis[leave_pos]
            if better or tie:
                t_best = t
                leave_pos = pos
                leave_to_upper = hits_upper
        if math.isinf(t_best):
            return "unbounded", basis, at_upper, x, y, d

        if leave_pos < 0:
            at_upper[enter] = not at_upper[enter]  # bound flip, basis unchanged
            degen = 0
            continue
        out = basis[leave_pos]
        basis[leave_pos] = enter
        at_upper[out] = leave_to_upper
        at_upper[enter] = False
        if t_best < 1e-10:
            degen += 1
            if degen > _DEGEN_RUN + m:
                bland = True
        else:
            degen = 0
    return "stalled", basis, at_upper, x if x is not None else np.where(at_upper, U, L), y, d
