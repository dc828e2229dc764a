"""Write a program in CPLEX LP text format for eyeball debugging."""

from __future__ import annotations

import math
import re

from .model import EQ, GE, LE, LinearProgram

_REL = {LE: "<=", EQ: "=", GE: ">="}


def _clean(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.]", "_", name) or "x"


def write_lp_text(lp: LinearProgram, fh) -> None:
    names = [f"{_clean(v.name)}_{j}" for j, v in enumerate(lp.variables)]
    fh.write(f"\\ {lp.name}\nMinimize\n obj:")
    for j, v in enumerate(lp.variables):
        if v.obj:
            fh.write(f" {'+' if v.obj >= 0 else '-'} {abs(v.obj):.12g} {names[j]}")
    fh.write("\nSubject To\n")
    for i, row in enumerate(lp.rows):
        fh.write(f" {_clean(row.name)}_{i}:")
        for j, a in row.coeffs:
            fh.write(f" {'+' if a >= 0 else '-'} {abs(a):.12g} {names[j]}")
        fh.write(f" {_REL[row.relation]} {row.rhs:.12g}\n")
    fh.write("Bounds\n")
    for j, v in enumerate(lp.variables):
        hi = "+inf" if math.isinf(v.ub) else f"{v.ub:.12g}"
        fh.write(f" {v.lb:.12g} <= {names[j]} <= {hi}\n")
    integers = [names[j] for j in lp.integer_indices()]
    if integers:
        fh.write("Generals\n " + " ".join(integers) + "\n")
    fh.write("End\n")
