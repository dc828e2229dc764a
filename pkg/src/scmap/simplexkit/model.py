"""Linear/mixed-binary program container shared by all solver backends."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

LE = "<="
EQ = "="
GE = ">="

FEAS_TOL = 1e-7
OPT_TOL = 1e-6
INT_TOL = 1e-6


class LpError(ValueError):
    """Malformed program or solver misuse."""


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = math.inf
    obj: float = 0.0
    integer: bool = False


@dataclass
class Row:
    name: str
    coeffs: list[tuple[int, float]]
    relation: str
    rhs: float


class LinearProgram:
    """Minimization program with bounded variables and sparse rows.

    Columns may be appended after rows exist (`add_coefficient`), which is how
    the master problem grows during column generation.
    """

    def __init__(self, name: str = "lp"):
        self.name = name
        self.variables: list[Variable] = []
        self.rows: list[Row] = []

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def add_variable(
        self,
        name: str,
        lb: float = 0.0,
        ub: float = math.inf,
        obj: float = 0.0,
        integer: bool = False,
    ) -> int:
        if math.isnan(lb) or math.isinf(lb):
            raise LpError(f"variable {name!r}: lower bound must be finite")
        if math.isnan(ub) or ub < lb:
            raise LpError(f"variable {name!r}: bad bounds [{lb}, {ub}]")
        if not math.isfinite(obj):
            raise LpError(f"variable {name!r}: objective must be finite")
        self.variables.append(Variable(name, lb, ub, obj, integer))
        return len(self.variables) - 1

    def add_constraint(
        self, coeffs: list[tuple[int, float]], relation: str, rhs: float, name: str = ""
    ) -> int:
        if relation not in (LE, EQ, GE):
            raise LpError(f"bad relation {relation!r}")
        if not math.isfinite(rhs):
            raise LpError(f"row {name!r}: rhs must be finite")
        for j, a in coeffs:
            if not 0 <= j < len(self.variables):
                raise LpError(f"row {name!r}: variable index {j} out of range")
            if not math.isfinite(a):
                raise LpError(f"row {name!r}: non-finite coefficient")
        self.rows.append(Row(name or f"r{len(self.rows)}", list(coeffs), relation, rhs))
        return len(self.rows) - 1

    def add_coefficient(self, row: int, var: int, coef: float) -> None:
        if not 0 <= row < len(self.rows):
            raise LpError(f"row index {row} out of range")
        if not 0 <= var < len(self.variables):
            raise LpError(f"variable index {var} out of range")
        if not math.isfinite(coef):
            raise LpError("non-finite coefficient")
        self.rows[row].coeffs.append((var, coef))

    def integer_indices(self) -> list[int]:
        return [j for j, v in enumerate(self.variables) if v.integer]

    def clone(self, integer_all: bool = False) -> "LinearProgram":
        out = LinearProgram(self.name)
        for v in self.variables:
            out.variables.append(
                Variable(v.name, v.lb, v.ub, v.obj, True if integer_all else v.integer)
            )
        for r in self.rows:
            out.rows.append(Row(r.name, list(r.coeffs), r.relation, r.rhs))
        return out

    def row_activity(self, row: int, x: list[float]) -> float:
        return sum(a * x[j] for j, a in self.rows[row].coeffs)

    def objective_value(self, x: list[float]) -> float:
        return sum(v.obj * x[j] for j, v in enumerate(self.variables))


@dataclass
class LpSolution:
    status: str  # optimal | infeasible | unbounded | stalled
    x: list[float] = field(default_factory=list)
    objective: float = math.nan
    duals: list[float] = field(default_factory=list)
    reduced_costs: list[float] = field(default_factory=list)
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class MipSolution:
    status: str  # optimal | feasible | infeasible | unbounded | stalled
    x: list[float] = field(default_factory=list)
    objective: float = math.nan
    bound: float = math.nan
    gap: float = math.nan
    nodes: int = 0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def dual_objective(lp: LinearProgram, sol: LpSolution) -> float:
    """Dual value implied by sol's multipliers: y'b plus bound contributions.

    Equals the primal objective at an optimum (strong duality); tests assert
    the gap stays below 1e-6 * (1 + |objective|).
    """
    val = sum(y * r.rhs for y, r in zip(sol.duals, lp.rows))
    for j, v in enumerate(lp.variables):
        d = sol.reduced_costs[j]
        if d > 0:
            val += d * v.lb
        elif d < 0:
            if math.isinf(v.ub):
                continue  # a tiny negative rc on an unbounded var is noise
            val += d * v.ub
    return val
