import random

import pytest

from scmap.fixturedata import cost239_files, nsfnet_files, triangle_files
from scmap.netmodel import (
    ArcSpec,
    ChainSpec,
    DemandRecord,
    DemandSet,
    NodeSpec,
    ProblemInstance,
    Topology,
    VnfSpec,
    load_instance,
)
from scmap.pathcore import all_pairs_hops


def build_instance(
    nodes,
    links,
    demands,
    k=None,
    nc=1,
    chain_vnfs=("fw",),
    capacity=1000.0,
    cores=100000,
    nfv=None,
    cores_per_gbps=1.0,
):
    """Assemble a small instance inline. `nodes` is an id list, `links` a list
    of (a, b) pairs, `demands` a list of (src, dst) or (src, dst, gbps)."""
    nfv = set(nodes) if nfv is None else set(nfv)
    node_specs = [NodeSpec(v, v in nfv, cores) for v in nodes]
    arcs = []
    for a, b in links:
        arcs.append(ArcSpec(a, b, capacity))
        arcs.append(ArcSpec(b, a, capacity))
    topo = Topology("inline", node_specs, arcs)
    vnfs = {f: VnfSpec(f, cores_per_gbps) for f in chain_vnfs}
    chains = {"c": ChainSpec("c", tuple(chain_vnfs))}
    records = []
    for dem in demands:
        s, d = dem[0], dem[1]
        gbps = dem[2] if len(dem) > 2 else 1.0
        records.append(DemandRecord(s, d, "c", gbps))
    if k is None:
        k = len(nfv)
    return ProblemInstance(topo, vnfs, chains, DemandSet(records), k=k, nc={"c": nc})


def random_connected_instance(rng: random.Random, max_nodes=6, **kwargs):
    """Random connected topology with a random demand subset."""
    n = rng.randint(3, max_nodes)
    nodes = [f"n{i}" for i in range(n)]
    links = {(nodes[i - 1], nodes[i]) for i in range(1, n)}  # spine keeps it connected
    extra = rng.randint(0, n)
    for _ in range(extra):
        a, b = rng.sample(nodes, 2)
        links.add((min(a, b), max(a, b)))
    all_pairs = [(s, d) for s in nodes for d in nodes if s != d]
    rng.shuffle(all_pairs)
    n_dem = rng.randint(1, min(len(all_pairs), kwargs.pop("max_pairs", 8)))
    demands = [(s, d, rng.choice([0.5, 1.0, 2.0])) for s, d in all_pairs[:n_dem]]
    return build_instance(nodes, sorted(links), demands, **kwargs)


@pytest.fixture(scope="session")
def triangle_instance():
    return load_instance(*triangle_files(), k=3, nc=1)


@pytest.fixture(scope="session")
def nsfnet_instance():
    return load_instance(*nsfnet_files(), k=14, nc=1)


@pytest.fixture(scope="session")
def cost239_instance():
    return load_instance(*cost239_files(), k=11, nc=1)


@pytest.fixture(scope="session")
def triangle_paths(triangle_instance):
    return all_pairs_hops(triangle_instance.topology)


@pytest.fixture(scope="session")
def nsfnet_paths(nsfnet_instance):
    return all_pairs_hops(nsfnet_instance.topology)
