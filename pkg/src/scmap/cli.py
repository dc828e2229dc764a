"""Command-line front end: solve one instance, sweep (nc, k) grids, validate
plans, print reference bounds.

Exit codes: 0 ok, 1 input error, 2 infeasible, 3 validation failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional

from . import baselines, engine
from .netmodel import (
    ParseError,
    ProblemInstance,
    ValidationError,
    load_instance,
    load_topology,
)
from .pathcore import all_pairs_hops
from .sptg import partition_all

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_INVALID = 3

SWEEP_HEADER = (
    "nc,k,status,objective,lp_bound,gap,nfv_nodes_used,"
    "iterations,columns_generated,wall_ms,lb,single_node"
)


class CliError(Exception):
    """Bad flags or unreadable inputs; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on flag errors by default, which this tool
    # reserves for infeasibility
    def error(self, message):
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def parse_nc(text: str):
    """Accept a bare count or per-chain overrides like web=4,voip=2."""
    try:
        return int(text)
    except ValueError:
        pass
    out = {}
    for part in text.split(","):
        chain, eq, count = part.partition("=")
        if not eq or not chain:
            raise CliError(
                f"--nc must be an integer or chain=int[,chain=int...], got {text!r}"
            )
        try:
            out[chain] = int(count)
        except ValueError:
            raise CliError(f"--nc: {count!r} is not an integer (in {part!r})") from None
    return out


def _add_instance_flags(p: argparse.ArgumentParser, *, need_k: bool) -> None:
    p.add_argument("--topology", required=True, help="topology JSON file")
    p.add_argument("--chains", required=True, help="VNF/chain JSON file")
    p.add_argument("--demands", required=True, help="demand CSV file")
    p.add_argument("--nc", default="1", help="instance count: int or chain=int,...")
    p.add_argument(
        "--k",
        type=int,
        required=need_k,
        default=None,
        help="max number of VNF-hosting nodes"
        + ("" if need_k else " (default: all of them)"),
    )


def _load(args) -> ProblemInstance:
    k = args.k
    if k is None:
        k = len(load_topology(args.topology).nfv_nodes)
    return load_instance(
        args.topology, args.chains, args.demands, k=k, nc=parse_nc(args.nc)
    )


def cmd_solve(args) -> int:
    instance = _load(args)
    result = engine.solve(
        instance,
        max_iters=args.max_iters,
        time_limit=args.time_limit,
        mode=args.mode,
    )
    plan = result.plan
    with open(args.out, "w") as fh:
        fh.write(engine.plan_to_json(plan))
    if args.trace:
        with open(args.trace, "w") as fh:
            engine.write_trace_csv(result.trace, fh)
    print(
        f"objective={plan.objective_gbps_hops:.6f} gap={plan.gap:.6f} "
        f"nfv_nodes_used={len(plan.hosting)}"
    )
    return EXIT_OK


@dataclass
class _Cell:
    status: str = "error"
    objective: Optional[float] = None
    lp_bound: Optional[float] = None
    gap: Optional[float] = None
    nfv_nodes_used: Optional[int] = None
    iterations: Optional[int] = None
    columns: Optional[int] = None
    wall_ms: Optional[int] = None


def _sweep_group(instance_parts, nc: int, k_values, args) -> list:
    """All cells for one nc: one column-generation run shared across k."""
    topo, vnfs, chains, demands = instance_parts
    cells = []
    tick = time.perf_counter()
    try:
        base = ProblemInstance(
            topo, vnfs, chains, demands, k=k_values[0], nc={c: nc for c in demands.chains}
        )
        model, trace = engine.run_column_generation(
            base,
            partition_all(base),
            max_iters=args.max_iters,
            time_limit=args.time_limit,
        )
    except Exception as exc:  # noqa: BLE001 - a failed group must not kill the sweep
        log.error("nc=%d: column generation failed: %s", nc, exc)
        return [_Cell() for _ in k_values]
    cg_ms = int((time.perf_counter() - tick) * 1e3)
    iters = len(trace.iterations)
    cols = len(model.pool)
    for pos, k in enumerate(k_values):
        tick = time.perf_counter()
        cell = _Cell(
            lp_bound=model.last_relaxation.objective,
            iterations=iters,
            columns=cols,
        )
        try:
            inst = ProblemInstance(
                topo, vnfs, chains, demands, k=k, nc={c: nc for c in demands.chains}
            )
            plan = engine.extract_plan(
                inst, model, mode=args.mode, time_limit=args.time_limit
            )
            cell.status = "ok"
            cell.objective = plan.objective_gbps_hops
            cell.gap = plan.gap
            cell.nfv_nodes_used = len(plan.hosting)
        except engine.Infeasible as exc:
            log.error("nc=%d k=%d: %s", nc, k, exc)
            cell.status = "infeasible"
        except Exception as exc:  # noqa: BLE001
            log.error("nc=%d k=%d: %s", nc, k, exc)
            cell.status = "error"
        cell.wall_ms = int((time.perf_counter() - tick) * 1e3) + (
            cg_ms if pos == 0 else 0
        )
        cells.append(cell)
    return cells


def _fmt(value, spec: str) -> str:
    return "" if value is None else format(value, spec)


def _parse_int_list(text: str, flag: str) -> list:
    try:
        values = [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise CliError(f"{flag} must be a comma-separated integer list") from None
    if not values:
        raise CliError(f"{flag} must not be empty")
    return values


def _thread_cap() -> int:
    raw = os.environ.get("SCMAP_THREADS", "")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer SCMAP_THREADS=%r", raw)
    return max(1, os.cpu_count() or 1)


def cmd_sweep(args) -> int:
    nc_values = _parse_int_list(args.nc_list, "--nc-list")
    k_values = _parse_int_list(args.k_list, "--k-list")
    probe = load_instance(
        args.topology, args.chains, args.demands, k=1, nc=1
    )
    nfv_count = len(probe.topology.nfv_nodes)
    for k in k_values:
        if not 1 <= k <= nfv_count:
            raise CliError(f"--k-list value {k} outside [1, {nfv_count}]")
    for nc in nc_values:
        if nc < 1:
            raise CliError(f"--nc-list value {nc} must be >= 1")
    parts = (probe.topology, probe.vnfs, probe.chains, probe.demands)
    report = baselines.baseline_report(probe)
    lb = report.shortest_path_lb
    single = report.single_node[1]

    with concurrent.futures.ThreadPoolExecutor(max_workers=_thread_cap()) as pool:
        futures = [
            pool.submit(_sweep_group, parts, nc, k_values, args) for nc in nc_values
        ]
        groups = [f.result() for f in futures]

    with open(args.out, "w") as fh:
        fh.write(SWEEP_HEADER + "\n")
        for nc, cells in zip(nc_values, groups):
            for k, cell in zip(k_values, cells):
                fh.write(
                    ",".join(
                        [
                            str(nc),
                            str(k),
                            cell.status,
                            _fmt(cell.objective, ".6f"),
                            _fmt(cell.lp_bound, ".6f"),
                            _fmt(cell.gap, ".6f"),
                            _fmt(cell.nfv_nodes_used, "d"),
                            _fmt(cell.iterations, "d"),
                            _fmt(cell.columns, "d"),
                            _fmt(cell.wall_ms, "d"),
                            format(lb, ".6f"),
                            format(single, ".6f"),
                        ]
                    )
                    + "\n"
                )
    bad = sum(1 for cells in groups for c in cells if c.status != "ok")
    print(
        f"sweep: {len(nc_values) * len(k_values)} cells, {bad} failed, "
        f"report {args.out}"
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    instance = _load(args)
    try:
        with open(args.plan) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read plan: {exc}") from None
    plan = engine.plan_from_json(text, instance)
    violations = engine.validate_plan(instance, plan)
    if not violations:
        print(f"plan ok: objective={plan.objective_gbps_hops:.6f}")
        return EXIT_OK
    for v in violations:
        print(v)
    return EXIT_INVALID


def cmd_lowerbound(args) -> int:
    instance = _load(args)
    report = baselines.baseline_report(instance)
    node, value = report.single_node
    print(f"shortest_path_lb {report.shortest_path_lb:.6f}")
    print(f"single_node {node} {value:.6f}")
    suffix = " engine" if report.per_pair_from_engine else ""
    print(f"per_pair {report.per_pair_instance:.6f}{suffix}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="scmap", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance, write the plan JSON")
    _add_instance_flags(p, need_k=True)
    p.add_argument("--mode", choices=["auto", "full", "fast"], default="auto")
    p.add_argument("--time-limit", type=float, default=None, help="seconds")
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--out", required=True, help="plan JSON output path")
    p.add_argument("--trace", default=None, help="iteration trace CSV path")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="run an (nc, k) grid, write a CSV report")
    p.add_argument("--topology", required=True)
    p.add_argument("--chains", required=True)
    p.add_argument("--demands", required=True)
    p.add_argument("--nc-list", required=True, help="comma-separated counts")
    p.add_argument("--k-list", required=True, help="comma-separated budgets")
    p.add_argument("--mode", choices=["auto", "full", "fast"], default="auto")
    p.add_argument("--time-limit", type=float, default=None)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--out", required=True, help="report CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a plan against an instance")
    _add_instance_flags(p, need_k=True)
    p.add_argument("--plan", required=True, help="plan JSON to check")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("lowerbound", help="print reference bounds")
    _add_instance_flags(p, need_k=False)
    p.set_defaults(func=cmd_lowerbound)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except engine.Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CliError, ParseError, ValidationError, engine.EngineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
