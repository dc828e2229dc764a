"""Exact pricing: the minimum-reduced-cost configuration per chain instance.

The reduced cost decomposes additively: each position i at node v pays
-(core_dual_v * D * cores_per_gbps(f_i)) - consistency_dual, and each segment
pays a shortest path under arc weight D * (1 - capacity_dual). A layered
sweep over positions is therefore exact, which the brute-force enumeration
tests confirm rather than assume.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .master import ChainInstance, Configuration, DualPrices, make_configuration
from .netmodel import ProblemInstance
from .pathcore import shortest_path_weighted

EPS = 1e-6

Arc = tuple[str, str]


class PricerError(ValueError):
    """Size guard or malformed pricing input."""


@dataclass(frozen=True)
class ReducedCostBreakdown:
    """total = raw_cost - convexity_term - node_terms - arc_terms."""

    raw_cost: float
    convexity_term: float
    node_terms: float
    arc_terms: float
    total: float


@dataclass(frozen=True)
class SegmentCostTable:
    """Cheapest inter-location segments under 1-per-Gbps arc weights.

    `cost[(u, w)]` is the weighted hop cost for one Gbps; a chain instance
    scales it by its group demand, which leaves the argmin paths unchanged,
    so one table serves every instance under the same duals.
    """

    cost: dict
    path: dict


def segment_cost_table(instance: ProblemInstance, duals: DualPrices) -> SegmentCostTable:
    topo = instance.topology
    weights = {}
    for arc in topo.arc_index:
        mu = duals.capacity.get(arc, 0.0)
        if mu > EPS:
            raise PricerError(f"capacity dual for {arc} is positive ({mu})")
        weights[arc] = 1.0 - min(mu, 0.0)
    cost: dict = {}
    path: dict = {}
    for u in topo.nfv_nodes:
        for w in topo.nfv_nodes:
            if u == w:
                cost[(u, w)] = 0.0
                path[(u, w)] = ()
            else:
                c, arcs = shortest_path_weighted(topo, weights, u, w)
                cost[(u, w)] = c
                path[(u, w)] = tuple(arcs)
    return SegmentCostTable(cost=cost, path=path)


def best_configuration(
    instance: ProblemInstance,
    chain_instance: ChainInstance,
    duals: DualPrices,
    seg_table: Optional[SegmentCostTable] = None,
) -> tuple[Configuration, ReducedCostBreakdown]:
    """Exact reduced-cost minimizer for one chain instance.

    Ties break toward the lexicographically smallest node at every layer, so
    repeated calls under equal duals return the same configuration.
    """
    if seg_table is None:
        seg_table = segment_cost_table(instance, duals)
    ci = chain_instance
    nfv = instance.topology.nfv_nodes
    per_gbps = instance.chain_cores_per_gbps(ci.chain)
    n = len(ci.vnfs)
    dgroup = ci.total_gbps

    def node_cost(pos: int, v: str) -> float:
        pi = duals.core.get(v, 0.0)
        lam = duals.consistency.get((ci.key, pos, v), 0.0)
        return -pi * dgroup * per_gbps[pos] - lam

    dp = {v: node_cost(0, v) for v in nfv}
    parents: list[dict] = []
    for pos in range(1, n):
        nxt: dict = {}
        par: dict = {}
        for w in nfv:
            best = None
            pick = None
            for v in nfv:
                cand = dp[v] + dgroup * seg_table.cost[(v, w)]
                if best is None or cand < best - 1e-12:
                    best = cand
                    pick = v
            nxt[w] = best + node_cost(pos, w)
            par[w] = pick
        dp = nxt
        parents.append(par)

    end = None
    best = None
    for v in nfv:
        if best is None or dp[v] < best - 1e-12:
            best = dp[v]
            end = v
    locations = [end]
    for par in reversed(parents):
        locations.append(par[locations[-1]])
    locations.reverse()
    segments = tuple(
        seg_table.path[(locations[i], locations[i + 1])] for i in range(n - 1)
    )
    config = make_configuration(ci, tuple(locations), segments)

    node_terms = sum(
        duals.core.get(v, 0.0) * dgroup * per_gbps[pos]
        + duals.consistency.get((ci.key, pos, v), 0.0)
        for pos, v in enumerate(config.locations)
    )
    arc_terms = sum(
        duals.capacity.get(arc, 0.0) * dgroup
        for seg in config.segment_paths
        for arc in seg
    )
    conv = duals.convexity.get(ci.key, 0.0)
    breakdown = ReducedCostBreakdown(
        raw_cost=config.cost,
        convexity_term=conv,
        node_terms=node_terms,
        arc_terms=arc_terms,
        total=config.cost - conv - node_terms - arc_terms,
    )
    return config, breakdown


def price_chain_instance(
    instance: ProblemInstance,
    chain_instance: ChainInstance,
    duals: DualPrices,
    seg_table: Optional[SegmentCostTable] = None,
) -> Optional[tuple[Configuration, ReducedCostBreakdown]]:
    """Return an improving configuration, or None when none prices out."""
    config, breakdown = best_configuration(instance, chain_instance, duals, seg_table)
    if breakdown.total >= -EPS:
        return None
    return config, breakdown


def _simple_paths(instance: ProblemInstance, src: str, dst: str) -> list[tuple[Arc, ...]]:
    topo = instance.topology
    out: list[tuple[Arc, ...]] = []
    stack: list[tuple[str, tuple[Arc, ...], frozenset]] = [(src, (), frozenset([src]))]
    while stack:
        node, arcs, seen = stack.pop()
        if node == dst:
            out.append(arcs)
            continue
        for arc in reversed(topo.out_arcs[node]):
            w = arc[1]
            if w not in seen:
                stack.append((w, arcs + (arc,), seen | {w}))
    out.sort(key=lambda p: (len(p), p))
    return out


def enumerate_all_configs(
    instance: ProblemInstance, chain_instance: ChainInstance, max_nodes: int = 7
) -> list[Configuration]:
    """Brute-force oracle: every configuration with simple segment paths."""
    topo = instance.topology
    n = len(chain_instance.vnfs)
    if len(topo.nodes) > max_nodes or max_nodes > 7:
        raise PricerError(
            f"enumeration limited to 7 nodes, got {len(topo.nodes)} (cap {max_nodes})"
        )
    if n > 3:
        raise PricerError(f"enumeration limited to 3 positions, got {n}")

    paths_between: dict = {}
    for u in topo.nfv_nodes:
        for w in topo.nfv_nodes:
            paths_between[(u, w)] = [()] if u == w else _simple_paths(instance, u, w)

    def expand(locations: tuple[str, ...], segments: tuple) -> list[Configuration]:
        if len(locations) == n:
            return [make_configuration(chain_instance, locations, segments)]
        out = []
        for v in topo.nfv_nodes:
            if not locations:
                out.extend(expand((v,), ()))
            else:
                for seg in paths_between[(locations[-1], v)]:
                    out.extend(expand(locations + (v,), segments + (seg,)))
        return out

    return expand((), ())
