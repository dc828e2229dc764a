"""Best-first branch and bound for mixed-binary programs.

Nodes are LP relaxations with tightened variable bounds, explored in
best-bound order; branching picks the most fractional integer variable.
Any LP solver with the solve_lp(lp, lb_override, ub_override) signature can
serve as the node solver.
"""

from __future__ import annotations

import heapq
import math
import time

import numpy as np

from .model import INT_TOL, LinearProgram, LpError, LpSolution, MipSolution


def solve_mip(
    lp: LinearProgram,
    node_solver,
    time_limit: float | None = None,
    gap_tol: float = 1e-9,
) -> MipSolution:
    """Minimize over the integer-marked variables of `lp`."""
    int_idx = lp.integer_indices()
    t0 = time.monotonic()

    def out_of_time() -> bool:
        return time_limit is not None and time.monotonic() - t0 > time_limit

    lb0 = np.array([v.lb for v in lp.variables], dtype=float)
    ub0 = np.array([v.ub for v in lp.variables], dtype=float)
    root = node_solver(lp, lb0, ub0)
    if root.status == "infeasible":
        return MipSolution(status="infeasible", message=root.message)
    if root.status == "unbounded":
        return MipSolution(status="unbounded", message=root.message)
    if root.status != "optimal":
        return MipSolution(status="stalled", message=root.message)
    if not int_idx:
        return MipSolution(
            status="optimal", x=root.x, objective=root.objective,
            bound=root.objective, gap=0.0,
        )

    counter = 0
    heap: list[tuple[float, int, LpSolution, np.ndarray, np.ndarray]] = []
    heapq.heappush(heap, (root.objective, counter, root, lb0, ub0))
    incumbent: LpSolution | None = None
    inc_obj = math.inf
    branched = 0
    timed_out = False

    while heap:
        bound, _, sol, lb, ub = heapq.heappop(heap)
        if bound >= inc_obj - gap_tol * max(1.0, abs(inc_obj)):
            heap = []  # best-first: every open node is at least as bad
            break
        if out_of_time():
            heapq.heappush(heap, (bound, -1, sol, lb, ub))
            timed_out = True
            break
        frac_j = _most_fractional(sol.x, int_idx)
        if frac_j < 0:
            if sol.objective < inc_obj:
                incumbent, inc_obj = sol, sol.objective
            continue
        branched += 1
        value = sol.x[frac_j]
        for lo, hi in ((lb[frac_j], math.floor(value)), (math.ceil(value), ub[frac_j])):
            child_lb = lb.copy()
            child_ub = ub.copy()
            child_lb[frac_j] = lo
            child_ub[frac_j] = hi
            if lo > hi:
                continue
            child = node_solver(lp, child_lb, child_ub)
            if child.status != "optimal":
                continue  # infeasible child is pruned; stalled treated alike
            if child.objective >= inc_obj - gap_tol * max(1.0, abs(inc_obj)):
                continue
            counter += 1
            heapq.heappush(heap, (child.objective, counter, child, child_lb, child_ub))

    open_bound = min((entry[0] for entry in heap), default=inc_obj)
    if incumbent is None:
        if timed_out:
            return MipSolution(
                status="stalled", nodes=branched, message="time limit before any incumbent"
            )
        return MipSolution(status="infeasible", nodes=branched)
    bound_val = min(open_bound, inc_obj)
    gap = (inc_obj - bound_val) / max(1.0, abs(inc_obj))
    status = "optimal" if not timed_out and gap <= 1e-6 else "feasible"
    int_set = set(int_idx)
    x = [
        float(round(v)) if j in int_set and abs(v - round(v)) < 1e-5 else v
        for j, v in enumerate(incumbent.x)
    ]
    return MipSolution(
        status=status, x=x, objective=inc_obj, bound=bound_val, gap=gap, nodes=branched,
    )


def _most_fractional(x: list[float], int_idx: list[int]) -> int:
    """Index of the integer variable farthest from integrality, or -1."""
    best = -1
    best_dist = math.inf
    for j in int_idx:
        frac = abs(x[j] - round(x[j]))
        if frac <= INT_TOL:
            continue
        dist_to_half = abs(frac - 0.5)
        if dist_to_half < best_dist - 1e-15:
            best = j
            best_dist = dist_to_half
    return best
