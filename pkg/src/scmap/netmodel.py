"""Network, VNF catalog, and demand model plus file ingestion.

A problem instance couples four ingredients: a topology whose undirected
links are expanded into directed arcs, a catalog of VNF types with per-Gbps
core requirements, the service chains built from those types, and a set of
demand records (src, dst, chain, gbps). Everything downstream (grouping,
master problem, baselines) works off the types defined here.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger("scmap")


class ParseError(ValueError):
    """Malformed input file (bad JSON, missing field, wrong type)."""


class ValidationError(ValueError):
    """Structurally valid input that violates a model rule."""


@dataclass(frozen=True)
class NodeSpec:
    id: str
    nfv: bool
    cores: int


@dataclass(frozen=True)
class ArcSpec:
    src: str
    dst: str
    capacity_gbps: float


@dataclass(frozen=True)
class VnfSpec:
    id: str
    cores_per_gbps: float


@dataclass(frozen=True)
class ChainSpec:
    id: str
    vnfs: tuple[str, ...]  # ordered VNF ids, length >= 1


@dataclass(frozen=True)
class DemandRecord:
    src: str
    dst: str
    chain: str
    gbps: float


@dataclass
class Topology:
    """Directed-arc view of an undirected topology file.

    Each undirected link {a, b} becomes the two arcs (a, b) and (b, a), each
    carrying the full link capacity. Derived adjacency is precomputed; treat
    instances as immutable after construction.
    """

    name: str
    nodes: list[NodeSpec]
    arcs: list[ArcSpec]
    node_by_id: dict[str, NodeSpec] = field(init=False, repr=False)
    arc_index: dict[tuple[str, str], int] = field(init=False, repr=False)
    out_arcs: dict[str, list[tuple[str, str]]] = field(init=False, repr=False)
    in_arcs: dict[str, list[tuple[str, str]]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.node_by_id = {}
        for n in self.nodes:
            if n.id in self.node_by_id:
                raise ValidationError(f"duplicate node id {n.id!r}")
            if n.cores < 0:
                raise ValidationError(f"node {n.id!r} has negative cores")
            self.node_by_id[n.id] = n
        self.arc_index = {}
        self.out_arcs = {n.id: [] for n in self.nodes}
        self.in_arcs = {n.id: [] for n in self.nodes}
        for i, a in enumerate(self.arcs):
            if a.src not in self.node_by_id or a.dst not in self.node_by_id:
                raise ValidationError(f"arc ({a.src!r}, {a.dst!r}) references unknown node")
            if a.src == a.dst:
                raise ValidationError(f"self-loop arc at {a.src!r}")
            if not a.capacity_gbps > 0:
                raise ValidationError(f"arc ({a.src!r}, {a.dst!r}) capacity must be positive")
            key = (a.src, a.dst)
            if key in self.arc_index:
                raise ValidationError(f"duplicate arc {key!r}")
            self.arc_index[key] = i
            self.out_arcs[a.src].append(key)
            self.in_arcs[a.dst].append(key)
        # deterministic neighbor order for traversals
        for adj in (self.out_arcs, self.in_arcs):
            for v in adj:
                adj[v].sort()
        self._check_connected()

    def _check_connected(self) -> None:
        if not self.nodes:
            raise ValidationError("topology has no nodes")
        for adj, label in ((self.out_arcs, "forward"), (self.in_arcs, "reverse")):
            seen = {self.nodes[0].id}
            stack = [self.nodes[0].id]
            while stack:
                u = stack.pop()
                for key in adj[u]:
                    w = key[1] if adj is self.out_arcs else key[0]
                    if w not in seen:
                        seen.add(w)
                        stack.append(w)
            if len(seen) != len(self.nodes):
                missing = sorted(set(self.node_by_id) - seen)[:3]
                raise ValidationError(
                    f"topology not strongly connected ({label} reach misses {missing})"
                )

    @property
    def node_ids(self) -> list[str]:
        return [n.id for n in self.nodes]

    @property
    def nfv_nodes(self) -> list[str]:
        """Sorted ids of NFV-capable nodes."""
        return sorted(n.id for n in self.nodes if n.nfv)

    def capacity(self, arc: tuple[str, str]) -> float:
        return self.arcs[self.arc_index[arc]].capacity_gbps


@dataclass
class DemandSet:
    records: list[DemandRecord]

    def __post_init__(self) -> None:
        seen: set[tuple[str, str, str]] = set()
        for r in self.records:
            if r.src == r.dst:
                raise ValidationError(f"self-demand {r.src!r} -> {r.dst!r} not allowed")
            if not r.gbps > 0:
                raise ValidationError(f"demand {r.src!r}->{r.dst!r} gbps must be positive")
            key = (r.src, r.dst, r.chain)
            if key in seen:
                raise ValidationError(f"duplicate demand record {key!r}")
            seen.add(key)

    @property
    def chains(self) -> list[str]:
        return sorted({r.chain for r in self.records})


@dataclass
class ProblemInstance:
    """Immutable-by-convention container for one solvable problem."""

    topology: Topology
    vnfs: dict[str, VnfSpec]
    chains: dict[str, ChainSpec]
    demands: DemandSet
    k: int
    nc: dict[str, int]  # requested instance count per chain id

    def __post_init__(self) -> None:
        nfv = self.topology.nfv_nodes
        if not nfv:
            raise ValidationError("no NFV-capable node in topology")
        if not 1 <= self.k <= len(nfv):
            raise ValidationError(f"k={self.k} outside [1, |V^NFV|={len(nfv)}]")
        for c in self.chains.values():
            if not c.vnfs:
                raise ValidationError(f"chain {c.id!r} is empty")
            for f in c.vnfs:
                if f not in self.vnfs:
                    raise ValidationError(f"chain {c.id!r} references unknown VNF {f!r}")
        for f in self.vnfs.values():
            if f.cores_per_gbps < 0:
                raise ValidationError(f"vnf {f.id!r} cores_per_gbps must be >= 0")
        for r in self.demands.records:
            for v in (r.src, r.dst):
                if v not in self.topology.node_by_id:
                    raise ValidationError(f"demand references unknown node {v!r}")
            if r.chain not in self.chains:
                raise ValidationError(f"demand references unknown chain {r.chain!r}")
        clamped = {}
        for chain, n in self.nc.items():
            if chain not in self.chains:
                raise ValidationError(f"nc given for unknown chain {chain!r}")
            if n < 1:
                raise ValidationError(f"nc for chain {chain!r} must be >= 1")
            npairs = len(self.pairs_for_chain(chain))
            if npairs and n > npairs:
                log.warning("nc=%d for chain %s clamped to %d demand pairs", n, chain, npairs)
                n = npairs
            clamped[chain] = n
        self.nc = clamped

    def pairs_for_chain(self, chain: str) -> list[tuple[str, str]]:
        """Demand pairs requesting `chain`, in lexicographic order."""
        return sorted((r.src, r.dst) for r in self.demands.records if r.chain == chain)

    def demand_gbps(self, chain: str, src: str, dst: str) -> float:
        for r in self.demands.records:
            if r.chain == chain and r.src == src and r.dst == dst:
                return r.gbps
        raise KeyError((chain, src, dst))

    def chains_with_demand(self) -> list[str]:
        return self.demands.chains

    def chain_cores_per_gbps(self, chain: str) -> list[float]:
        """Per-position cores/Gbps for the chain's VNF sequence."""
        return [self.vnfs[f].cores_per_gbps for f in self.chains[chain].vnfs]


def total_demand(instance: ProblemInstance, chain: str, pairs=None) -> float:
    """Sum of gbps over the chain's demand records, optionally restricted to `pairs`."""
    if chain not in instance.chains:
        raise ValidationError(f"unknown chain {chain!r}")
    wanted = None if pairs is None else set(pairs)
    total = 0.0
    for r in instance.demands.records:
        if r.chain != chain:
            continue
        if wanted is None or (r.src, r.dst) in wanted:
            total += r.gbps
    return total


# -- file ingestion ----------------------------------------------------------


def _need(obj: dict, key: str, where: str):
    if key not in obj:
        raise ParseError(f"{where}: missing field {key!r}")
    return obj[key]


def _load_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise ParseError(f"{path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}:{e.lineno}: {e.msg}") from e
    if not isinstance(data, dict):
        raise ParseError(f"{path}: top level must be an object")
    return data


def load_topology(path: str | Path) -> Topology:
    data = _load_json(path)
    where = str(path)
    nodes = []
    for i, n in enumerate(_need(data, "nodes", where)):
        spot = f"{where} nodes[{i}]"
        nodes.append(
            NodeSpec(
                id=str(_need(n, "id", spot)),
                nfv=bool(_need(n, "nfv", spot)),
                cores=int(n.get("cores", 0)),
            )
        )
    arcs = []
    for i, l in enumerate(_need(data, "links", where)):
        spot = f"{where} links[{i}]"
        a = str(_need(l, "a", spot))
        b = str(_need(l, "b", spot))
        try:
            cap = float(_need(l, "capacity_gbps", spot))
        except (TypeError, ValueError) as e:
            raise ParseError(f"{spot}: capacity_gbps not a number") from e
        arcs.append(ArcSpec(a, b, cap))
        arcs.append(ArcSpec(b, a, cap))
    return Topology(name=str(data.get("name", Path(path).stem)), nodes=nodes, arcs=arcs)


def load_chains(path: str | Path) -> tuple[dict[str, VnfSpec], dict[str, ChainSpec]]:
    data = _load_json(path)
    where = str(path)
    vnfs: dict[str, VnfSpec] = {}
    for i, v in enumerate(_need(data, "vnfs", where)):
        spot = f"{where} vnfs[{i}]"
        vid = str(_need(v, "id", spot))
        if vid in vnfs:
            raise ValidationError(f"{spot}: duplicate vnf id {vid!r}")
        vnfs[vid] = VnfSpec(vid, float(_need(v, "cores_per_gbps", spot)))
    chains: dict[str, ChainSpec] = {}
    for i, c in enumerate(_need(data, "chains", where)):
        spot = f"{where} chains[{i}]"
        cid = str(_need(c, "id", spot))
        if cid in chains:
            raise ValidationError(f"{spot}: duplicate chain id {cid!r}")
        seq = _need(c, "vnfs", spot)
        if not isinstance(seq, list) or not seq:
            raise ParseError(f"{spot}: vnfs must be a nonempty list")
        chains[cid] = ChainSpec(cid, tuple(str(f) for f in seq))
    return vnfs, chains


def load_demands(path: str | Path) -> DemandSet:
    path = Path(path)
    records = []
    try:
        fh = open(path, newline="")
    except OSError as e:
        raise ParseError(f"{path}: {e}") from e
    with fh:
        reader = csv.DictReader(fh)
        expected = ["src", "dst", "chain", "gbps"]
        if reader.fieldnames != expected:
            raise ParseError(f"{path}: header must be {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            try:
                gbps = float(row["gbps"])
            except (TypeError, ValueError) as e:
                raise ParseError(f"{path}:{lineno}: gbps not a number") from e
            if row["src"] is None or row["dst"] is None or row["chain"] is None:
                raise ParseError(f"{path}:{lineno}: short row")
            records.append(DemandRecord(row["src"], row["dst"], row["chain"], gbps))
    return DemandSet(records)


def load_instance(
    topology_path: str | Path,
    chains_path: str | Path,
    demands_path: str | Path,
    k: int,
    nc: int | dict[str, int] = 1,
) -> ProblemInstance:
    """Load the three input files and assemble a validated ProblemInstance.

    `nc` may be a single int (applied to every chain with demand) or a map
    from chain id to instance count.
    """
    topo = load_topology(topology_path)
    vnfs, chains = load_chains(chains_path)
    demands = load_demands(demands_path)
    if isinstance(nc, int):
        nc_map = {c: nc for c in demands.chains}
    else:
        nc_map = dict(nc)
    return ProblemInstance(topo, vnfs, chains, demands, k=k, nc=nc_map)


def save_instance(instance: ProblemInstance, directory: str | Path) -> dict[str, Path]:
    """Write the instance back out as topology/chains/demands files.

    Returns the paths written. Round-trips: loading the emitted files yields
    an instance equal to the original (same nodes, arcs, records, order).
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    topo = instance.topology
    links = []
    for i in range(0, len(topo.arcs), 2):
        a = topo.arcs[i]
        links.append({"a": a.src, "b": a.dst, "capacity_gbps": a.capacity_gbps})
    paths = {
        "topology": directory / "topology.json",
        "chains": directory / "chains.json",
        "demands": directory / "demands.csv",
    }
    with open(paths["topology"], "w") as fh:
        json.dump(
            {
                "name": topo.name,
                "nodes": [{"id": n.id, "nfv": n.nfv, "cores": n.cores} for n in topo.nodes],
                "links": links,
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    with open(paths["chains"], "w") as fh:
        json.dump(
            {
                "vnfs": [
                    {"id": v.id, "cores_per_gbps": v.cores_per_gbps}
                    for v in sorted(instance.vnfs.values(), key=lambda v: v.id)
                ],
                "chains": [
                    {"id": c.id, "vnfs": list(c.vnfs)}
                    for c in sorted(instance.chains.values(), key=lambda c: c.id)
                ],
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    with open(paths["demands"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "chain", "gbps"])
        for r in instance.demands.records:
            writer.writerow([r.src, r.dst, r.chain, repr(r.gbps)])
    return paths
