"""Pipeline orchestration: grouping, column generation, integer solve.

The flow is seed -> iterate (relax, price, extend) -> integer selection ->
decode -> independent validation. The hosting budget row never binds the
relaxation (the hosting flags can sit at their linking minimum, which totals
well under 1), so one converged model serves every k of a sweep; only the
integer stage re-reads the budget.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

from .master import (
    MODE_FAST,
    MODE_FULL,
    ChainInstance,
    Configuration,
    MasterError,
    MasterInfeasible,
    RmpModel,
    add_column,
    build_final_ilp,
    build_rmp,
    chain_instances,
    make_configuration,
    solve_relaxation,
)
from .netmodel import ProblemInstance
from .pathcore import PathError, PathTable, all_pairs_hops, path_nodes
from .pricer import price_chain_instance, segment_cost_table
from .sptg import ChainPartition, partition_all

log = logging.getLogger(__name__)

EPS = 1e-6

Arc = tuple[str, str]


class EngineError(RuntimeError):
    """Unsolvable stage or a decoded plan that fails its own checks."""


class Infeasible(EngineError):
    """No assignment satisfies the budget and resource rows."""


@dataclass(frozen=True)
class CgIteration:
    iteration: int
    objective: float
    columns_added: int
    best_reduced_cost: float
    wall_ms: float


@dataclass
class CgTrace:
    iterations: list = field(default_factory=list)
    converged: bool = False


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.detail}"


@dataclass(frozen=True)
class PairRoute:
    src: str
    dst: str
    first_arcs: tuple
    last_arcs: tuple


@dataclass(frozen=True)
class InstanceAssignment:
    chain: str
    group_index: int
    locations: tuple
    segment_paths: tuple
    routes: tuple


@dataclass
class MappingPlan:
    assignments: tuple
    arc_loads: dict
    node_cores: dict
    hosting: tuple
    objective_gbps_hops: float
    lp_bound: float
    gap: float


@dataclass
class SolveResult:
    plan: MappingPlan
    trace: CgTrace
    model: RmpModel
    partitions: list


def _colocated(ci: ChainInstance, node: str) -> Configuration:
    n = len(ci.vnfs)
    return make_configuration(ci, (node,) * n, ((),) * (n - 1))


def seed_pool(
    instance: ProblemInstance,
    partitions: Iterable[ChainPartition],
    paths: Optional[PathTable] = None,
) -> list[Configuration]:
    """One co-located configuration per chain instance at the group 1-median.

    The 1-median minimizes the unweighted sum of dist(s, v) + dist(v, d) over
    the group's pairs; ties go to the lexicographically smallest node.
    """
    if paths is None:
        paths = all_pairs_hops(instance.topology)
    out = []
    for ci in chain_instances(instance, partitions):
        best = None
        pick = None
        for v in instance.topology.nfv_nodes:
            score = sum(paths.distance(s, v) + paths.distance(v, d) for s, d in ci.pairs)
            if best is None or score < best:
                best = score
                pick = v
        out.append(_colocated(ci, pick))
    return out


def diagnose_infeasibility(instance: ProblemInstance) -> list:
    """Cheap necessary-condition cuts that name what cannot fit.

    Any demand pair s != d pushes its gbps out of s and into d no matter
    where the chain sits, so a node cut below those sums is a certificate.
    """
    hints = []
    topo = instance.topology
    out_need: dict = {}
    in_need: dict = {}
    for r in instance.demands.records:
        if r.src == r.dst:
            continue
        out_need[r.src] = out_need.get(r.src, 0.0) + r.gbps
        in_need[r.dst] = in_need.get(r.dst, 0.0) + r.gbps
    for v, need in sorted(out_need.items()):
        arcs = topo.out_arcs[v]
        have = sum(topo.capacity(a) for a in arcs)
        if need > have + 1e-9:
            hints.append(
                f"demand leaving {v} totals {need:g} Gbps but its outgoing arcs "
                f"{[f'{a}->{b}' for a, b in arcs]} provide {have:g}"
            )
    for v, need in sorted(in_need.items()):
        arcs = topo.in_arcs[v]
        have = sum(topo.capacity(a) for a in arcs)
        if need > have + 1e-9:
            hints.append(
                f"demand entering {v} totals {need:g} Gbps but its incoming arcs "
                f"{[f'{a}->{b}' for a, b in arcs]} provide {have:g}"
            )
    needed = sum(
        r.gbps * sum(instance.chain_cores_per_gbps(r.chain))
        for r in instance.demands.records
    )
    have = sum(topo.node_by_id[v].cores for v in topo.nfv_nodes)
    if needed > have + 1e-9:
        hints.append(
            f"placements require {needed:g} cores but NFV nodes provide {have:g}"
        )
    return hints


def run_column_generation(
    instance: ProblemInstance,
    partitions: Iterable[ChainPartition],
    *,
    max_iters: int = 200,
    time_limit: Optional[float] = None,
    backend=None,
    paths: Optional[PathTable] = None,
) -> tuple[RmpModel, CgTrace]:
    """Iterate relax/price/extend until a full pricing round adds nothing."""
    if paths is None:
        paths = all_pairs_hops(instance.topology)
    partitions = list(partitions)
    seeds = seed_pool(instance, partitions, paths)
    model = build_rmp(instance, partitions, seeds, paths=paths, backend=backend)
    # fallback columns: a co-located configuration at every NFV node keeps the
    # integer stage feasible at any hosting budget the capacities allow
    for ci in model.chain_instances:
        for v in instance.topology.nfv_nodes:
            add_column(model, _colocated(ci, v))

    trace = CgTrace()
    started = time.perf_counter()
    pool_dirty = True
    for it in range(1, max_iters + 1):
        if time_limit is not None and time.perf_counter() - started > time_limit:
            log.warning("column generation stopped by time limit after %d iterations", it - 1)
            break
        tick = time.perf_counter()
        try:
            sol, duals = solve_relaxation(model)
        except MasterInfeasible as exc:
            hints = diagnose_infeasibility(instance)
            detail = "; ".join(hints) if hints else "no single-cut certificate found"
            raise Infeasible(f"{exc} [{detail}]") from exc
        pool_dirty = False
        seg = segment_cost_table(instance, duals)
        added = 0
        best_rc = 0.0
        for ci in model.chain_instances:
            priced = price_chain_instance(instance, ci, duals, seg_table=seg)
            if priced is None:
                continue
            config, breakdown = priced
            best_rc = min(best_rc, breakdown.total)
            before = len(model.pool)
            add_column(model, config)
            if len(model.pool) > before:
                added += 1
                pool_dirty = True
        trace.iterations.append(
            CgIteration(it, sol.objective, added, best_rc, (time.perf_counter() - tick) * 1e3)
        )
        if added == 0:
            trace.converged = True
            break
    if pool_dirty:
        # truncated mid-round: refresh the bound so it covers the whole pool
        solve_relaxation(model)
    if not trace.converged:
        log.warning(
            "column generation truncated (%d iterations, %d columns)",
            len(trace.iterations),
            len(model.pool),
        )
    return model, trace


def write_trace_csv(trace: CgTrace, fh: IO[str]) -> None:
    fh.write("iter,objective,columns_added,best_rc,wall_ms\n")
    for row in trace.iterations:
        fh.write(
            f"{row.iteration},{row.objective:.6f},{row.columns_added},"
            f"{row.best_reduced_cost:.6f},{row.wall_ms:.1f}\n"
        )


def _ordered_route(arcs: list, start: str, end: str, label: str) -> list:
    """Order a set of unit-flow arcs into the start->end walk.

    Cost-free cycles cannot survive the objective, but a truncated incumbent
    may carry one; arcs not on the walk are dropped.
    """
    if start == end:
        return []
    by_src: dict = {}
    for arc in arcs:
        by_src.setdefault(arc[0], []).append(arc)
    route = []
    cur = start
    while cur != end:
        options = sorted(by_src.get(cur, []))
        if not options:
            raise EngineError(f"{label}: route from {start} to {end} breaks at {cur}")
        arc = options[0]
        by_src[cur].remove(arc)
        route.append(arc)
        cur = arc[1]
        if len(route) > len(arcs):
            raise EngineError(f"{label}: route from {start} to {end} loops")
    return route


def _aggregate(instance: ProblemInstance, assignments) -> tuple[dict, dict, tuple]:
    """Recompute arc loads, node core use, and hosting set from raw routes."""
    loads: dict = {}
    cores: dict = {}
    hosting = set()

    def put(arc: Arc, gbps: float) -> None:
        loads[arc] = loads.get(arc, 0.0) + gbps

    for asg in assignments:
        per_gbps = instance.chain_cores_per_gbps(asg.chain)
        dgroup = sum(
            instance.demand_gbps(asg.chain, r.src, r.dst) for r in asg.routes
        )
        for seg in asg.segment_paths:
            for arc in seg:
                put(arc, dgroup)
        for route in asg.routes:
            gbps = instance.demand_gbps(asg.chain, route.src, route.dst)
            for arc in route.first_arcs:
                put(arc, gbps)
            for arc in route.last_arcs:
                put(arc, gbps)
        for pos, v in enumerate(asg.locations):
            cores[v] = cores.get(v, 0.0) + dgroup * per_gbps[pos]
            hosting.add(v)
    return loads, cores, tuple(sorted(hosting))


def _decode(
    instance: ProblemInstance, model: RmpModel, final, mip
) -> MappingPlan:
    x = mip.x
    zvar_of = {pos: var for var, pos in final.zmap.items()}
    assignments = []
    for ci in model.chain_instances:
        chosen = [
            p for p in model.pool_by_instance[ci.key] if x[zvar_of[p]] > 0.5
        ]
        if len(chosen) != 1:
            raise EngineError(
                f"instance {ci.label}: {len(chosen)} configurations selected"
            )
        config = model.pool[chosen[0]]
        routes = []
        for s, d in ci.pairs:
            if final.mode == MODE_FAST:
                first = model.paths.path_arcs(s, config.locations[0])
                last = model.paths.path_arcs(config.locations[-1], d)
            else:
                farcs = [
                    arc
                    for arc in instance.topology.arc_index
                    if x[model.yfvar[(ci.key, (s, d), arc)]] > 0.5
                ]
                larcs = [
                    arc
                    for arc in instance.topology.arc_index
                    if x[model.ylvar[(ci.key, (s, d), arc)]] > 0.5
                ]
                first = _ordered_route(
                    farcs, s, config.locations[0], f"{ci.label} {s}->{d} lead-in"
                )
                last = _ordered_route(
                    larcs, config.locations[-1], d, f"{ci.label} {s}->{d} lead-out"
                )
            routes.append(PairRoute(s, d, tuple(first), tuple(last)))
        assignments.append(
            InstanceAssignment(
                chain=ci.chain,
                group_index=ci.group_index,
                locations=config.locations,
                segment_paths=config.segment_paths,
                routes=tuple(routes),
            )
        )
    loads, cores, hosting = _aggregate(instance, assignments)
    objective = sum(loads.values())
    lp_bound = model.last_relaxation.objective
    gap = max(0.0, (objective - lp_bound) / max(1.0, abs(objective)))
    return MappingPlan(
        assignments=tuple(assignments),
        arc_loads=loads,
        node_cores=cores,
        hosting=hosting,
        objective_gbps_hops=objective,
        lp_bound=lp_bound,
        gap=gap,
    )


def _extract(
    instance: ProblemInstance, model: RmpModel, mode: str, time_limit: Optional[float]
) -> MappingPlan:
    final = build_final_ilp(model, mode)
    # the budget may differ from the one the model was relaxed with; the
    # relaxation bound is budget-independent so only this row needs the update
    final.lp.rows[final.kbudget_row].rhs = float(instance.k)
    mip = model.backend.solve_mip(final.lp, time_limit=time_limit)
    if mip.status == "infeasible":
        raise Infeasible(
            f"final selection infeasible at k={instance.k}: no pooled assignment "
            f"fits the hosting budget and resource rows"
        )
    if mip.status not in ("optimal", "feasible"):
        raise EngineError(f"final selection failed: {mip.status} ({mip.message})")
    plan = _decode(instance, model, final, mip)
    violations = validate_plan(instance, plan)
    if violations:
        raise EngineError(
            "extracted plan failed validation: "
            + "; ".join(str(v) for v in violations[:3])
        )
    return plan


def extract_plan(
    instance: ProblemInstance,
    model: RmpModel,
    mode: str = "auto",
    time_limit: Optional[float] = None,
) -> MappingPlan:
    """Integer selection over the pooled columns, decoded and validated.

    mode "auto" tries the fast reduction (end segments folded into the z
    objective) and falls back to the full binary program when the reduction
    is refused or its plan fails validation.
    """
    if model.last_relaxation is None:
        solve_relaxation(model)
    if mode == "auto":
        try:
            return _extract(instance, model, MODE_FAST, time_limit)
        except (MasterError, EngineError) as exc:
            log.info("fast selection unavailable (%s); solving the full program", exc)
            return _extract(instance, model, MODE_FULL, time_limit)
    if mode == "fast":
        mode = MODE_FAST
    if mode not in (MODE_FULL, MODE_FAST):
        raise EngineError(f"unknown mode {mode!r}")
    return _extract(instance, model, mode, time_limit)


def solve(
    instance: ProblemInstance,
    *,
    max_iters: int = 200,
    time_limit: Optional[float] = None,
    mode: str = "auto",
    backend=None,
    paths: Optional[PathTable] = None,
    partitions=None,
) -> SolveResult:
    """Full pipeline on one instance: partition, generate columns, select."""
    if paths is None:
        paths = all_pairs_hops(instance.topology)
    if partitions is None:
        partitions = partition_all(instance, paths)
    model, trace = run_column_generation(
        instance,
        partitions,
        max_iters=max_iters,
        time_limit=time_limit,
        backend=backend,
        paths=paths,
    )
    plan = extract_plan(instance, model, mode=mode, time_limit=time_limit)
    return SolveResult(plan=plan, trace=trace, model=model, partitions=partitions)


# -- independent feasibility checking ----------------------------------------


def _check_route(
    violations: list,
    instance: ProblemInstance,
    arcs,
    start: str,
    end: str,
    label: str,
) -> None:
    if not arcs:
        if start != end:
            violations.append(
                Violation("contiguity", f"{label}: empty route but {start} != {end}")
            )
        return
    if start == end:
        violations.append(
            Violation("contiguity", f"{label}: nonempty route on co-located endpoints")
        )
        return
    for arc in arcs:
        if tuple(arc) not in instance.topology.arc_index:
            violations.append(Violation("contiguity", f"{label}: unknown arc {arc}"))
            return
    try:
        nodes = path_nodes(list(arcs))
    except PathError:
        violations.append(Violation("contiguity", f"{label}: arcs do not chain"))
        return
    if nodes[0] != start or nodes[-1] != end:
        violations.append(
            Violation(
                "contiguity",
                f"{label}: route runs {nodes[0]}->{nodes[-1]}, expected {start}->{end}",
            )
        )


def validate_plan(instance: ProblemInstance, plan: MappingPlan) -> list:
    """Re-derive every invariant from raw routes; stored aggregates are only
    cross-checked, never trusted."""
    violations: list = []
    topo = instance.topology
    nfv = set(topo.nfv_nodes)
    covered: dict = {}

    for asg in plan.assignments:
        label = f"{asg.chain}/{asg.group_index}"
        if asg.chain not in instance.chains:
            violations.append(Violation("coverage", f"{label}: unknown chain"))
            continue
        vnfs = instance.chains[asg.chain].vnfs
        if len(asg.locations) != len(vnfs):
            violations.append(
                Violation(
                    "contiguity",
                    f"{label}: {len(asg.locations)} locations for a "
                    f"{len(vnfs)}-position chain",
                )
            )
            continue
        for v in asg.locations:
            if v not in topo.node_by_id:
                violations.append(Violation("location_not_nfv", f"{label}: unknown node {v}"))
            elif v not in nfv:
                violations.append(
                    Violation("location_not_nfv", f"{label}: {v} is not an NFV node")
                )
        if len(asg.segment_paths) != len(vnfs) - 1:
            violations.append(
                Violation(
                    "contiguity",
                    f"{label}: {len(asg.segment_paths)} segments for a "
                    f"{len(vnfs)}-position chain",
                )
            )
            continue
        for i, seg in enumerate(asg.segment_paths):
            _check_route(
                violations,
                instance,
                seg,
                asg.locations[i],
                asg.locations[i + 1],
                f"{label} segment {i}",
            )
        for route in asg.routes:
            pair_label = f"{label} {route.src}->{route.dst}"
            try:
                instance.demand_gbps(asg.chain, route.src, route.dst)
            except KeyError:
                violations.append(
                    Violation("coverage", f"{pair_label}: no such demand record")
                )
                continue
            covered.setdefault(asg.chain, []).append((route.src, route.dst))
            _check_route(
                violations,
                instance,
                route.first_arcs,
                route.src,
                asg.locations[0],
                f"{pair_label} lead-in",
            )
            _check_route(
                violations,
                instance,
                route.last_arcs,
                asg.locations[-1],
                route.dst,
                f"{pair_label} lead-out",
            )

    for chain in instance.chains_with_demand():
        want = instance.pairs_for_chain(chain)
        got = sorted(covered.get(chain, []))
        if got != want:
            missing = sorted(set(want) - set(got))
            extra = [p for p in got if got.count(p) > 1] + sorted(set(got) - set(want))
            violations.append(
                Violation(
                    "coverage",
                    f"chain {chain}: demand pairs not covered exactly once "
                    f"(missing {missing[:3]}, surplus {sorted(set(extra))[:3]})",
                )
            )

    safe = [
        asg
        for asg in plan.assignments
        if asg.chain in instance.chains
        and len(asg.locations) == len(instance.chains[asg.chain].vnfs)
        and all(v in topo.node_by_id for v in asg.locations)
        and all(
            (r.src, r.dst) in {(q.src, q.dst) for q in instance.demands.records if q.chain == asg.chain}
            for r in asg.routes
        )
    ]
    loads, cores, hosting = _aggregate(instance, safe)
    for arc, load in sorted(loads.items()):
        if tuple(arc) not in topo.arc_index:
            continue  # already reported as contiguity
        cap = topo.capacity(tuple(arc))
        if load > cap + 1e-6:
            violations.append(
                Violation("capacity", f"arc {arc[0]}->{arc[1]} carries {load} > {cap}")
            )
    for arc, load in sorted(plan.arc_loads.items()):
        key = tuple(arc)
        if key not in topo.arc_index:
            violations.append(
                Violation("arc_load_mismatch", f"stored load names unknown arc {arc}")
            )
            continue
        cap = topo.capacity(key)
        if load > cap + 1e-6:
            violations.append(
                Violation(
                    "capacity", f"stored load {load} on arc {arc[0]}->{arc[1]} > {cap}"
                )
            )
        if abs(load - loads.get(key, 0.0)) > 1e-6:
            violations.append(
                Violation(
                    "arc_load_mismatch",
                    f"arc {arc[0]}->{arc[1]}: stored {load}, recomputed "
                    f"{loads.get(key, 0.0)}",
                )
            )
    for key, load in sorted(loads.items()):
        if tuple(key) in topo.arc_index and key not in plan.arc_loads and load > 1e-6:
            violations.append(
                Violation(
                    "arc_load_mismatch", f"arc {key[0]}->{key[1]} loaded but not stored"
                )
            )
    for v, used in sorted(cores.items()):
        avail = topo.node_by_id[v].cores if v in topo.node_by_id else 0.0
        if used > avail + 1e-6:
            violations.append(
                Violation("cores", f"node {v} uses {used} cores of {avail}")
            )
    if len(hosting) > instance.k:
        violations.append(
            Violation(
                "k_exceeded",
                f"{len(hosting)} hosting nodes {list(hosting)} exceed k={instance.k}",
            )
        )
    recomputed = sum(loads.values())
    if abs(plan.objective_gbps_hops - recomputed) > 1e-6 * max(
        1.0, abs(recomputed)
    ):
        violations.append(
            Violation(
                "objective_mismatch",
                f"stored {plan.objective_gbps_hops}, recomputed {recomputed}",
            )
        )
    return violations


# -- plan serialization -------------------------------------------------------


def _nodes_to_arcs(nodes: list, where: str, known: dict) -> tuple:
    for v in nodes:
        if v not in known:
            raise EngineError(f"{where}: unknown node {v!r}")
    return tuple(zip(nodes, nodes[1:]))


def plan_to_json(plan: MappingPlan) -> str:
    doc = {
        "objective_gbps_hops": plan.objective_gbps_hops,
        "lp_bound": plan.lp_bound,
        "gap": plan.gap,
        "instances": [
            {
                "chain": a.chain,
                "group_index": a.group_index,
                "locations": list(a.locations),
                "segments": [path_nodes(list(seg)) for seg in a.segment_paths],
                "pairs": [
                    {
                        "src": r.src,
                        "dst": r.dst,
                        "first_route": path_nodes(list(r.first_arcs)),
                        "last_route": path_nodes(list(r.last_arcs)),
                    }
                    for r in a.routes
                ],
            }
            for a in plan.assignments
        ],
        "arc_loads": {
            f"{u}>{w}": load for (u, w), load in sorted(plan.arc_loads.items())
        },
        "nodes": {
            v: {
                "cores_used": plan.node_cores.get(v, 0.0),
                "hosts_vnfs": v in set(plan.hosting),
            }
            for v in sorted(set(plan.node_cores) | set(plan.hosting))
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def plan_from_json(text: str, instance: ProblemInstance) -> MappingPlan:
    """Parse a plan document; unresolvable references are errors, anything
    merely inconsistent is left for validate_plan to report."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EngineError(f"plan is not valid JSON: {exc}") from None
    known = instance.topology.node_by_id
    try:
        assignments = []
        for entry in doc["instances"]:
            label = f"{entry['chain']}/{entry['group_index']}"
            locations = tuple(entry["locations"])
            for v in locations:
                if v not in known:
                    raise EngineError(f"{label}: unknown location node {v!r}")
            segments = tuple(
                _nodes_to_arcs(seg, f"{label} segment {i}", known)
                for i, seg in enumerate(entry["segments"])
            )
            routes = tuple(
                PairRoute(
                    src=p["src"],
                    dst=p["dst"],
                    first_arcs=_nodes_to_arcs(
                        p["first_route"], f"{label} {p['src']}->{p['dst']} lead-in", known
                    ),
                    last_arcs=_nodes_to_arcs(
                        p["last_route"], f"{label} {p['src']}->{p['dst']} lead-out", known
                    ),
                )
                for p in entry["pairs"]
            )
            for r in routes:
                for v in (r.src, r.dst):
                    if v not in known:
                        raise EngineError(f"{label}: unknown demand node {v!r}")
            assignments.append(
                InstanceAssignment(
                    chain=entry["chain"],
                    group_index=int(entry["group_index"]),
                    locations=locations,
                    segment_paths=segments,
                    routes=routes,
                )
            )
        arc_loads = {}
        for name, load in doc["arc_loads"].items():
            u, _, w = name.partition(">")
            for v in (u, w):
                if v not in known:
                    raise EngineError(f"arc_loads: unknown node {v!r}")
            arc_loads[(u, w)] = float(load)
        node_cores = {}
        hosting = []
        for v, info in doc["nodes"].items():
            if v not in known:
                raise EngineError(f"nodes: unknown node {v!r}")
            node_cores[v] = float(info["cores_used"])
            if info["hosts_vnfs"]:
                hosting.append(v)
        return MappingPlan(
            assignments=tuple(assignments),
            arc_loads=arc_loads,
            node_cores=node_cores,
            hosting=tuple(sorted(hosting)),
            objective_gbps_hops=float(doc["objective_gbps_hops"]),
            lp_bound=float(doc["lp_bound"]),
            gap=float(doc["gap"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise EngineError(f"malformed plan document: {exc!r}") from None
