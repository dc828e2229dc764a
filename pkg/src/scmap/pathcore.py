"""Shortest-path machinery: hop-count all-pairs table and weighted Dijkstra.

Hop distances drive the traffic grouping and the end-segment costs; the
weighted variant serves the pricing subproblem, where arcs carry dual-adjusted
prices. Both pick a canonical path deterministically: among all shortest
paths, the one whose node sequence is lexicographically smallest.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field

from .netmodel import Topology


class PathError(ValueError):
    """Disconnected query or non-contiguous arc list."""


@dataclass
class PathTable:
    """All-pairs hop distances with canonical next hops.

    next_hop[(u, w)] is the first node after u on the canonical shortest
    u->w path: the smallest-id out-neighbor that still lies on some
    shortest path.
    """

    dist: dict[tuple[str, str], int]
    next_hop: dict[tuple[str, str], str]

    def distance(self, u: str, w: str) -> int:
        return self.dist[(u, w)]

    def path_arcs(self, u: str, w: str) -> list[tuple[str, str]]:
        """Arc list of the canonical shortest path (empty when u == w)."""
        arcs = []
        while u != w:
            v = self.next_hop[(u, w)]
            arcs.append((u, v))
            u = v
        return arcs

    def path_node_seq(self, u: str, w: str) -> list[str]:
        """Node sequence of the canonical shortest path, endpoints included."""
        seq = [u]
        while u != w:
            u = self.next_hop[(u, w)]
            seq.append(u)
        return seq


def all_pairs_hops(topology: Topology) -> PathTable:
    """BFS-based all-pairs hop table over the directed arcs."""
    dist: dict[tuple[str, str], int] = {}
    next_hop: dict[tuple[str, str], str] = {}
    for target in topology.node_ids:
        # reverse BFS gives distance-to-target from every node
        d = {target: 0}
        queue = deque([target])
        while queue:
            v = queue.popleft()
            for (u, _) in topology.in_arcs[v]:
                if u not in d:
                    d[u] = d[v] + 1
                    queue.append(u)
        if len(d) != len(topology.node_ids):
            missing = sorted(set(topology.node_ids) - set(d))[:3]
            raise PathError(f"no path to {target!r} from {missing}")
        for u, du in d.items():
            dist[(u, target)] = du
            if u == target:
                continue
            # smallest next hop that stays on a shortest path
            next_hop[(u, target)] = min(
                v for (_, v) in topology.out_arcs[u] if d[v] == du - 1
            )
    return PathTable(dist=dist, next_hop=next_hop)


def shortest_path_weighted(
    topology: Topology,
    weights: dict[tuple[str, str], float],
    src: str,
    dst: str,
) -> tuple[float, list[tuple[str, str]]]:
    """Min-cost src->dst path under nonnegative arc weights.

    Returns (cost, arc list). Ties resolve to the lexicographically smallest
    node sequence. Raises PathError on negative weights or missing arcs.
    """
    for arc in topology.arc_index:
        w = weights.get(arc)
        if w is None:
            raise PathError(f"missing weight for arc {arc!r}")
        if w < 0 or math.isnan(w):
            raise PathError(f"negative or NaN weight on arc {arc!r}")
    # Dijkstra toward dst on the reverse graph: cost-to-go from every node.
    togo = {dst: 0.0}
    done: set[str] = set()
    heap: list[tuple[float, str]] = [(0.0, dst)]
    while heap:
        c, v = heapq.heappop(heap)
        if v in done:
            continue
        done.add(v)
        for (u, _) in topology.in_arcs[v]:
            cand = c + weights[(u, v)]
            if cand < togo.get(u, math.inf) - 1e-15:
                togo[u] = cand
                heapq.heappush(heap, (cand, u))
    if src not in togo:
        raise PathError(f"no path {src!r} -> {dst!r}")
    # Greedy forward walk picking the smallest next node still on an optimal path.
    arcs: list[tuple[str, str]] = []
    u = src
    guard = 0
    while u != dst:
        best = None
        for (_, v) in topology.out_arcs[u]:
            if v in togo and _close(weights[(u, v)] + togo[v], togo[u]):
                best = v if best is None else min(best, v)
        if best is None:  # numerical safety net; cannot happen on exact ties
            raise PathError(f"path reconstruction failed at {u!r}")
        arcs.append((u, best))
        u = best
        guard += 1
        if guard > len(topology.node_ids):
            raise PathError("path reconstruction cycled")
    return togo[src], arcs


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-9 * (1.0 + abs(a) + abs(b))


def path_nodes(arcs: list[tuple[str, str]]) -> list[str]:
    """Node sequence of a contiguous arc list; [] for an empty path."""
    if not arcs:
        return []
    seq = [arcs[0][0]]
    for (u, v) in arcs:
        if u != seq[-1]:
            raise PathError(f"arc list not contiguous at {u!r}")
        seq.append(v)
    return seq
