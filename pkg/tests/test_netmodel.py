import random

import pytest

from scmap.fixturedata import fixture_path, triangle_files
from scmap.netmodel import (
    ArcSpec,
    DemandRecord,
    DemandSet,
    NodeSpec,
    ParseError,
    Topology,
    ValidationError,
    load_demands,
    load_instance,
    load_topology,
    save_instance,
    total_demand,
)

from conftest import build_instance


def test_triangle_counts(triangle_instance):
    assert len(triangle_instance.topology.arcs) == 6
    assert len(triangle_instance.demands.records) == 6
    assert triangle_instance.topology.nfv_nodes == ["a", "b", "c"]
    assert triangle_instance.pairs_for_chain("c1") == [
        ("a", "b"), ("a", "c"), ("b", "a"), ("b", "c"), ("c", "a"), ("c", "b"),
    ]


def test_nsfnet_counts(nsfnet_instance):
    topo = nsfnet_instance.topology
    assert len(topo.nodes) == 14
    assert len(topo.arcs) == 42  # 21 undirected links
    assert len(nsfnet_instance.demands.records) == 182
    assert all(r.gbps == 1.0 for r in nsfnet_instance.demands.records)


def test_cost239_counts(cost239_instance):
    assert len(cost239_instance.topology.nodes) == 11
    assert len(cost239_instance.demands.records) == 110


def test_arcs_carry_full_capacity(triangle_instance):
    topo = triangle_instance.topology
    assert topo.capacity(("a", "b")) == topo.capacity(("b", "a")) == 1000.0


def test_total_demand(nsfnet_instance):
    assert total_demand(nsfnet_instance, "sc3") == 182.0
    assert total_demand(nsfnet_instance, "sc3", pairs=[]) == 0.0
    assert total_demand(nsfnet_instance, "sc3", pairs=[("01", "02"), ("02", "01")]) == 2.0
    with pytest.raises(ValidationError):
        total_demand(nsfnet_instance, "nope")


def test_total_demand_additive_over_partition(nsfnet_instance):
    rng = random.Random(7)
    pairs = nsfnet_instance.pairs_for_chain("sc3")
    rng.shuffle(pairs)
    cut = rng.randint(1, len(pairs) - 1)
    a, b = pairs[:cut], pairs[cut:]
    assert total_demand(nsfnet_instance, "sc3", a) + total_demand(
        nsfnet_instance, "sc3", b
    ) == pytest.approx(total_demand(nsfnet_instance, "sc3"))


def test_self_demand_rejected():
    with pytest.raises(ValidationError, match="self-demand"):
        DemandSet([DemandRecord("a", "a", "c", 1.0)])


def test_duplicate_demand_rejected():
    recs = [DemandRecord("a", "b", "c", 1.0), DemandRecord("a", "b", "c", 2.0)]
    with pytest.raises(ValidationError, match="duplicate"):
        DemandSet(recs)


def test_unknown_ids_rejected():
    with pytest.raises(ValidationError, match="unknown node"):
        build_instance(["a", "b"], [("a", "b")], [("a", "zz")])


def test_disconnected_topology_rejected():
    nodes = [NodeSpec(v, True, 1) for v in "abcd"]
    arcs = [ArcSpec("a", "b", 1.0), ArcSpec("b", "a", 1.0),
            ArcSpec("c", "d", 1.0), ArcSpec("d", "c", 1.0)]
    with pytest.raises(ValidationError, match="connected"):
        Topology("t", nodes, arcs)


def test_nonpositive_capacity_rejected():
    nodes = [NodeSpec(v, True, 1) for v in "ab"]
    with pytest.raises(ValidationError, match="capacity"):
        Topology("t", nodes, [ArcSpec("a", "b", 0.0), ArcSpec("b", "a", 1.0)])


def test_k_out_of_range():
    with pytest.raises(ValidationError, match="k="):
        build_instance(["a", "b"], [("a", "b")], [("a", "b")], k=3)


def test_nc_clamped_to_pair_count(caplog):
    inst = build_instance(["a", "b"], [("a", "b")], [("a", "b"), ("b", "a")], nc=9)
    assert inst.nc["c"] == 2


def test_parse_error_reports_location(tmp_path):
    bad = tmp_path / "demands.csv"
    bad.write_text("src,dst,chain,gbps\na,b,c1,notanumber\n")
    with pytest.raises(ParseError, match="demands.csv:2"):
        load_demands(bad)
    bad2 = tmp_path / "t.json"
    bad2.write_text("{ nope")
    with pytest.raises(ParseError, match="t.json:1"):
        load_topology(bad2)


def test_demands_header_enforced(tmp_path):
    bad = tmp_path / "d.csv"
    bad.write_text("source,dst,chain,gbps\na,b,c1,1\n")
    with pytest.raises(ParseError, match="header"):
        load_demands(bad)


def test_missing_field_named(tmp_path):
    bad = tmp_path / "topo.json"
    bad.write_text('{"name": "x", "nodes": [{"nfv": true}], "links": []}')
    with pytest.raises(ParseError, match="missing field 'id'"):
        load_topology(bad)


def test_roundtrip(tmp_path, nsfnet_instance):
    paths = save_instance(nsfnet_instance, tmp_path)
    again = load_instance(
        paths["topology"], paths["chains"], paths["demands"], k=14, nc=1
    )
    assert again.topology.nodes == nsfnet_instance.topology.nodes
    assert again.topology.arcs == nsfnet_instance.topology.arcs
    assert again.demands.records == nsfnet_instance.demands.records
    assert again.vnfs == nsfnet_instance.vnfs
    assert again.chains == nsfnet_instance.chains


def test_chain_core_lookup(triangle_instance):
    assert triangle_instance.chain_cores_per_gbps("c2") == [1.0, 2.0]


def test_fixture_paths_exist():
    for name in ("nsfnet.topology.json", "chain3.chains.json", "nsfnet_mesh.demands.csv"):
        assert fixture_path(name).exists()
    with pytest.raises(FileNotFoundError):
        fixture_path("never.json")
