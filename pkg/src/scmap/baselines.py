"""Closed-form reference values: routing lower bound and placement extremes.

Everything here comes from hop counts and direct summation over demand
records, never from the LP stack, so these numbers stand as independent
checks on the solver. The one exception is the per-pair value's fallback
when its preconditions fail; that run is flagged as such in the report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .netmodel import ProblemInstance
from .pathcore import PathTable, all_pairs_hops

log = logging.getLogger(__name__)

CAP_TOL = 1e-9


@dataclass(frozen=True)
class BaselineReport:
    shortest_path_lb: float
    single_node: tuple  # (node id, objective)
    per_pair_instance: float
    per_pair_from_engine: bool


def shortest_path_lb(instance: ProblemInstance, paths: Optional[PathTable] = None) -> float:
    """Bandwidth if every record could ride its shortest path untouched."""
    if paths is None:
        paths = all_pairs_hops(instance.topology)
    return float(
        sum(r.gbps * paths.distance(r.src, r.dst) for r in instance.demands.records)
    )


def _chain_core_rate(instance: ProblemInstance, chain: str) -> float:
    return sum(instance.chain_cores_per_gbps(chain))


def _fits(instance, loads, cores) -> bool:
    topo = instance.topology
    for arc, load in loads.items():
        if load > topo.capacity(arc) + CAP_TOL:
            return False
    for v, used in cores.items():
        if used > topo.node_by_id[v].cores + CAP_TOL:
            return False
    return True


def _single_node_usage(instance: ProblemInstance, v: str, paths: PathTable):
    loads: dict = {}
    cores = 0.0
    for r in instance.demands.records:
        for arc in paths.path_arcs(r.src, v):
            loads[arc] = loads.get(arc, 0.0) + r.gbps
        for arc in paths.path_arcs(v, r.dst):
            loads[arc] = loads.get(arc, 0.0) + r.gbps
        cores += r.gbps * _chain_core_rate(instance, r.chain)
    return loads, {v: cores}


def single_node_oracle(
    instance: ProblemInstance, paths: Optional[PathTable] = None
) -> tuple:
    """(node, objective) for hosting everything at one co-located site.

    The objective is the detour sum over all records; ties break to the
    lexicographically smallest node id. When the winner's implied loads
    exceed a capacity, the next candidate in (objective, id) order that
    fits is returned instead.
    """
    if paths is None:
        paths = all_pairs_hops(instance.topology)
    ranked = sorted(
        (
            float(
                sum(
                    r.gbps * (paths.distance(r.src, v) + paths.distance(v, r.dst))
                    for r in instance.demands.records
                )
            ),
            v,
        )
        for v in instance.topology.nfv_nodes
    )
    for value, v in ranked:
        loads, cores = _single_node_usage(instance, v, paths)
        if _fits(instance, loads, cores):
            if (value, v) != ranked[0]:
                log.warning(
                    "single-node oracle: %s (%.6g) is capacity-infeasible, "
                    "reporting %s (%.6g)",
                    ranked[0][1],
                    ranked[0][0],
                    v,
                    value,
                )
            return v, value
    log.warning(
        "single-node oracle: no node fits the capacities; reporting the "
        "unconstrained argmin %s",
        ranked[0][1],
    )
    return ranked[0][1], ranked[0][0]


def _per_pair_applicable(instance: ProblemInstance, paths: PathTable) -> bool:
    """True when hosting each pair's chain at its own source verifiably fits."""
    topo = instance.topology
    if set(topo.nfv_nodes) != set(topo.node_ids):
        return False
    loads: dict = {}
    cores: dict = {}
    for r in instance.demands.records:
        for arc in paths.path_arcs(r.src, r.dst):
            loads[arc] = loads.get(arc, 0.0) + r.gbps
        cores[r.src] = cores.get(r.src, 0.0) + r.gbps * _chain_core_rate(
            instance, r.chain
        )
    return _fits(instance, loads, cores)


def per_pair_instance_ub(
    instance: ProblemInstance, paths: Optional[PathTable] = None
) -> float:
    value, _ = _per_pair(instance, paths)
    return value


def _per_pair(instance: ProblemInstance, paths: Optional[PathTable]) -> tuple:
    if paths is None:
        paths = all_pairs_hops(instance.topology)
    if _per_pair_applicable(instance, paths):
        return shortest_path_lb(instance, paths), False
    log.warning(
        "per-pair construction is infeasible here; solving for the value instead"
    )
    from . import engine  # deliberate late import: keeps the formulas solver-free
    from .netmodel import ProblemInstance as PI

    relaxed = PI(
        instance.topology,
        instance.vnfs,
        instance.chains,
        instance.demands,
        k=len(instance.topology.nfv_nodes),
        nc={
            c: len(instance.pairs_for_chain(c)) for c in instance.chains_with_demand()
        },
    )
    result = engine.solve(relaxed, paths=paths)
    return result.plan.objective_gbps_hops, True


def baseline_report(
    instance: ProblemInstance, paths: Optional[PathTable] = None
) -> BaselineReport:
    if paths is None:
        paths = all_pairs_hops(instance.topology)
    per_pair, flagged = _per_pair(instance, paths)
    return BaselineReport(
        shortest_path_lb=shortest_path_lb(instance, paths),
        single_node=single_node_oracle(instance, paths),
        per_pair_instance=per_pair,
        per_pair_from_engine=flagged,
    )
