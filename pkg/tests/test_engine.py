import io
import json
import random

import pytest
from conftest import build_instance, random_connected_instance

from scmap import baselines, engine
from scmap.master import chain_instances
from scmap.netmodel import ProblemInstance
from scmap.pathcore import all_pairs_hops
from scmap.pricer import enumerate_all_configs, price_chain_instance
from scmap.sptg import partition_all


def separable_optimum(instance):
    """Exhaustive optimum for the given partition on all-NFV uncapacitated
    instances: per chain instance, best configuration plus shortest end runs."""
    paths = all_pairs_hops(instance.topology)
    total = 0.0
    for ci in chain_instances(instance, partition_all(instance)):
        best = None
        for config in enumerate_all_configs(instance, ci):
            ends = sum(
                instance.demand_gbps(ci.chain, s, d)
                * (
                    paths.distance(s, config.locations[0])
                    + paths.distance(config.locations[-1], d)
                )
                for s, d in ci.pairs
            )
            cand = config.cost + ends
            if best is None or cand < best:
                best = cand
        total += best
    return total


class TestSeedPool:
    def test_triangle_lexicographic_tie(self, triangle_instance):
        seeds = engine.seed_pool(
            triangle_instance, partition_all(triangle_instance)
        )
        assert len(seeds) == 1
        assert set(seeds[0].locations) == {"a"}
        assert seeds[0].segment_paths == ()

    def test_star_hub_only_nfv(self):
        inst = build_instance(
            ["hub", "l1", "l2", "l3", "l4"],
            [("hub", "l1"), ("hub", "l2"), ("hub", "l3"), ("hub", "l4")],
            [("l1", "l2"), ("l2", "l3"), ("l3", "l4")],
            nfv=["hub"],
        )
        seeds = engine.seed_pool(inst, partition_all(inst))
        assert all(set(s.locations) == {"hub"} for s in seeds)

    def test_path_graph_median_pick(self):
        inst = build_instance(
            ["a", "b", "c", "d", "e"],
            [("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")],
            [("a", "e")],
        )
        (seed,) = engine.seed_pool(inst, partition_all(inst))
        # every node on the path scores dist(a,v)+dist(v,e) = 4; tie goes to a
        assert seed.locations == ("a",)


class TestColumnGeneration:
    def test_single_pair_converges_to_shortest_path(self):
        inst = build_instance(
            ["a", "b", "c", "d", "e"],
            [("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")],
            [("a", "e", 2.0)],
        )
        model, trace = engine.run_column_generation(inst, partition_all(inst))
        assert trace.converged
        assert model.last_relaxation.objective == pytest.approx(8.0, abs=1e-8)

    def test_converged_duals_are_a_fixed_point(self, triangle_instance):
        model, trace = engine.run_column_generation(
            triangle_instance, partition_all(triangle_instance)
        )
        assert trace.converged
        for ci in model.chain_instances:
            assert (
                price_chain_instance(triangle_instance, ci, model.last_duals) is None
            )

    def test_trace_objective_monotone(self):
        rng = random.Random(5)
        for _ in range(10):
            inst = random_connected_instance(rng, chain_vnfs=("fw", "nat"))
            model, trace = engine.run_column_generation(inst, partition_all(inst))
            objs = [it.objective for it in trace.iterations]
            assert all(b <= a + 1e-8 for a, b in zip(objs, objs[1:]))
            assert trace.converged

    def test_bound_no_worse_than_single_node(self, nsfnet_instance):
        model, trace = engine.run_column_generation(
            nsfnet_instance, partition_all(nsfnet_instance)
        )
        _, oracle = baselines.single_node_oracle(nsfnet_instance)
        assert model.last_relaxation.objective <= oracle + 1e-6

    def test_trace_csv_format(self, triangle_instance):
        _, trace = engine.run_column_generation(
            triangle_instance, partition_all(triangle_instance)
        )
        buf = io.StringIO()
        engine.write_trace_csv(trace, buf)
        lines = buf.getvalue().strip().splitlines()
        assert lines[0] == "iter,objective,columns_added,best_rc,wall_ms"
        assert len(lines) == 1 + len(trace.iterations)


class TestExtractPlan:
    def test_k1_equals_single_node_oracle(self):
        inst = build_instance(
            ["a", "b", "c", "d"],
            [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")],
            [("a", "c"), ("b", "d"), ("c", "a", 2.0)],
            k=1,
            nc=2,
        )
        result = engine.solve(inst)
        _, oracle = baselines.single_node_oracle(inst)
        assert result.plan.objective_gbps_hops == pytest.approx(oracle, abs=1e-6)
        assert len(result.plan.hosting) == 1

    def test_per_pair_attains_lower_bound(self):
        inst = build_instance(
            ["a", "b", "c", "d"],
            [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")],
            [("a", "c"), ("b", "d"), ("d", "b", 0.5)],
            nc=3,
        )
        result = engine.solve(inst)
        lb = baselines.shortest_path_lb(inst)
        assert result.plan.objective_gbps_hops == pytest.approx(lb, abs=1e-6)

    def test_budget_override_reuses_converged_model(self):
        inst_k2 = build_instance(
            ["a", "b", "c", "d"],
            [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")],
            [("a", "c"), ("b", "d")],
            k=2,
            nc=2,
        )
        model, _ = engine.run_column_generation(inst_k2, partition_all(inst_k2))
        inst_k1 = ProblemInstance(
            inst_k2.topology,
            inst_k2.vnfs,
            inst_k2.chains,
            inst_k2.demands,
            k=1,
            nc=dict(inst_k2.nc),
        )
        patched = engine.extract_plan(inst_k1, model)
        fresh = engine.solve(inst_k1)
        assert patched.objective_gbps_hops == pytest.approx(
            fresh.plan.objective_gbps_hops, abs=1e-9
        )
        assert len(patched.hosting) <= 1
        assert not engine.validate_plan(inst_k1, patched)

    def test_tight_capacity_reports_the_cut(self):
        inst = build_instance(
            ["a", "b", "c"], [("a", "b"), ("b", "c")], [("a", "c", 1.0)], capacity=0.5
        )
        with pytest.raises(engine.Infeasible) as err:
            engine.solve(inst)
        assert "a->b" in str(err.value) or "b->c" in str(err.value)

    def test_modes_agree_when_uncapacitated(self, triangle_instance):
        model, _ = engine.run_column_generation(
            triangle_instance, partition_all(triangle_instance)
        )
        full = engine.extract_plan(triangle_instance, model, mode="full")
        fast = engine.extract_plan(triangle_instance, model, mode="fast")
        assert full.objective_gbps_hops == pytest.approx(
            fast.objective_gbps_hops, abs=1e-6
        )

    def test_unknown_mode_rejected(self, triangle_instance):
        model, _ = engine.run_column_generation(
            triangle_instance, partition_all(triangle_instance)
        )
        with pytest.raises(engine.EngineError):
            engine.extract_plan(triangle_instance, model, mode="simulated_annealing")

    def test_gap_nonnegative_and_bound_consistent(self):
        rng = random.Random(11)
        for _ in range(5):
            inst = random_connected_instance(rng)
            result = engine.solve(inst)
            assert result.plan.gap >= 0.0
            assert (
                result.plan.objective_gbps_hops
                >= result.plan.lp_bound - 1e-6
            )


def solved_square():
    inst = build_instance(
        ["a", "b", "c", "d"],
        [("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")],
        [("a", "c"), ("b", "d"), ("c", "a", 2.0)],
        k=2,
        nc=2,
        chain_vnfs=("fw", "nat"),
    )
    return inst, engine.solve(inst).plan


class TestValidatePlan:
    def test_emitted_plan_is_clean(self):
        inst, plan = solved_square()
        assert engine.validate_plan(inst, plan) == []

    def test_capacity_violation_names_the_arc(self):
        inst, plan = solved_square()
        arc = next(iter(plan.arc_loads))
        plan.arc_loads[arc] = inst.topology.capacity(arc) + 7.0
        kinds = {v.kind for v in engine.validate_plan(inst, plan)}
        assert "capacity" in kinds
        assert any(
            f"{arc[0]}->{arc[1]}" in v.detail
            for v in engine.validate_plan(inst, plan)
            if v.kind == "capacity"
        )

    def test_stored_load_drift_detected(self):
        inst, plan = solved_square()
        arc = next(iter(plan.arc_loads))
        plan.arc_loads[arc] += 0.25
        kinds = {v.kind for v in engine.validate_plan(inst, plan)}
        assert "arc_load_mismatch" in kinds

    def test_k_exceeded(self):
        inst, plan = solved_square()
        one_host = ProblemInstance(
            inst.topology, inst.vnfs, inst.chains, inst.demands, k=1, nc=dict(inst.nc)
        )
        if len(plan.hosting) <= 1:
            pytest.skip("plan landed on a single node; nothing to exceed")
        kinds = {v.kind for v in engine.validate_plan(one_host, plan)}
        assert "k_exceeded" in kinds

    def test_contiguity_break(self):
        inst, plan = solved_square()
        doc = json.loads(engine.plan_to_json(plan))
        for entry in doc["instances"]:
            for pair in entry["pairs"]:
                if len(pair["first_route"]) >= 2:
                    pair["first_route"][-1] = (
                        "a" if pair["first_route"][-1] != "a" else "c"
                    )
                    broken = engine.plan_from_json(json.dumps(doc), inst)
                    kinds = {v.kind for v in engine.validate_plan(inst, broken)}
                    assert "contiguity" in kinds
                    return
        pytest.fail("no multi-hop first route to corrupt")

    def test_coverage_gap_detected(self):
        inst, plan = solved_square()
        doc = json.loads(engine.plan_to_json(plan))
        removed = None
        for entry in doc["instances"]:
            if entry["pairs"]:
                removed = entry["pairs"].pop()
                break
        assert removed is not None
        broken = engine.plan_from_json(json.dumps(doc), inst)
        kinds = {v.kind for v in engine.validate_plan(inst, broken)}
        assert "coverage" in kinds

    def test_non_nfv_location_flagged(self):
        inst = build_instance(
            ["a", "b", "c"],
            [("a", "b"), ("b", "c"), ("a", "c")],
            [("a", "b"), ("b", "c")],
            nfv=["a", "b"],
        )
        plan = engine.solve(inst).plan
        doc = json.loads(engine.plan_to_json(plan))
        doc["instances"][0]["locations"] = ["c"] * len(
            doc["instances"][0]["locations"]
        )
        broken = engine.plan_from_json(json.dumps(doc), inst)
        kinds = {v.kind for v in engine.validate_plan(inst, broken)}
        assert "location_not_nfv" in kinds

    def test_objective_drift_detected(self):
        inst, plan = solved_square()
        plan.objective_gbps_hops += 1.0
        kinds = {v.kind for v in engine.validate_plan(inst, plan)}
        assert "objective_mismatch" in kinds


class TestPlanJson:
    def test_roundtrip_preserves_everything(self):
        inst, plan = solved_square()
        back = engine.plan_from_json(engine.plan_to_json(plan), inst)
        assert back.assignments == plan.assignments
        assert back.arc_loads == pytest.approx(plan.arc_loads)
        assert back.objective_gbps_hops == plan.objective_gbps_hops
        assert engine.validate_plan(inst, back) == []

    def test_unknown_node_is_an_input_error(self):
        inst, plan = solved_square()
        doc = json.loads(engine.plan_to_json(plan))
        doc["instances"][0]["locations"][0] = "mars"
        with pytest.raises(engine.EngineError):
            engine.plan_from_json(json.dumps(doc), inst)

    def test_garbage_rejected(self, triangle_instance):
        with pytest.raises(engine.EngineError):
            engine.plan_from_json("{not json", triangle_instance)
        with pytest.raises(engine.EngineError):
            engine.plan_from_json('{"instances": 3}', triangle_instance)


class TestEndToEndOracle:
    def test_matches_exhaustive_on_random_instances(self):
        rng = random.Random(424242)
        done = 0
        while done < 25:
            inst = random_connected_instance(
                rng,
                max_nodes=5,
                max_pairs=4,
                chain_vnfs=("fw", "nat")[: rng.randint(1, 2)],
                nc=rng.randint(1, 4),
            )
            result = engine.solve(inst)
            want = separable_optimum(inst)
            assert result.plan.objective_gbps_hops == pytest.approx(want, abs=1e-6)
            assert engine.validate_plan(inst, result.plan) == []
            done += 1
