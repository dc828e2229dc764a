"""Restricted master problem over a growing configuration pool.

The relaxation selects one configuration per chain instance, routes the two
end segments (demand source to first VNF location, last VNF location to
demand destination) per demand pair, and ties placements to the budget of
hosting nodes. Columns arrive from the pricer; rows never change shape after
`build_rmp`, so duals keep stable meaning across iterations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

from .netmodel import ProblemInstance
from .pathcore import PathTable, all_pairs_hops, path_nodes
from .simplexkit import EQ, GE, LE, LinearProgram, LpSolution, default_backend, write_lp_text
from .sptg import ChainPartition

log = logging.getLogger(__name__)

Arc = tuple[str, str]
Pair = tuple[str, str]

# a >= row's dual in our minimization convention is >= 0, a <= row's <= 0;
# anything past this much on the wrong side means a backend defect
DUAL_SIGN_TOL = 1e-5

MODE_FULL = "full"
MODE_FAST = "uncapacitated_fast"


class MasterError(RuntimeError):
    """Structural misuse: bad configuration, missing seed, infeasible RMP."""


class MasterInfeasible(MasterError):
    """The relaxation itself has no feasible point (capacities or cores)."""


@dataclass(frozen=True)
class Configuration:
    """One candidate mapping for a chain instance.

    `locations[i]` hosts position i of the chain; `segment_paths[i]` is the
    arc path from locations[i] to locations[i+1], empty iff co-located.
    `cost` is the group's total demand times the summed segment hop count.
    """

    chain: str
    group_index: int
    locations: tuple[str, ...]
    segment_paths: tuple[tuple[Arc, ...], ...]
    cost: float

    @property
    def key(self) -> tuple:
        return (self.chain, self.group_index, self.locations, self.segment_paths)

    @property
    def hop_count(self) -> int:
        return sum(len(p) for p in self.segment_paths)


@dataclass(frozen=True)
class ChainInstance:
    """A chain plus one demand group from the phase-1 partition."""

    chain: str
    group_index: int
    vnfs: tuple[str, ...]
    pairs: tuple[Pair, ...]
    demand: dict  # pair -> gbps
    total_gbps: float

    @property
    def key(self) -> tuple[str, int]:
        return (self.chain, self.group_index)

    @property
    def label(self) -> str:
        return f"{self.chain}/{self.group_index}"


@dataclass(frozen=True)
class DualPrices:
    """Relaxation duals keyed the way the pricer consumes them.

    Convexity rows are equalities (free sign); core and capacity rows are
    <=-rows of a minimization, so their duals are <= 0 and tiny positive
    noise is clamped to zero before pricing.
    """

    convexity: dict  # (chain, group_index) -> float
    core: dict  # node -> float
    capacity: dict  # arc -> float
    consistency: dict  # ((chain, group_index), position, node) -> float


@dataclass(frozen=True)
class FinalIlp:
    """Integer selection problem plus the decode map for its z columns."""

    lp: LinearProgram
    mode: str
    zmap: dict  # variable index -> pool position
    kbudget_row: int  # row bounding the number of hosting nodes


@dataclass
class RmpModel:
    instance: ProblemInstance
    chain_instances: tuple[ChainInstance, ...]
    paths: PathTable
    backend: object
    lp: LinearProgram
    bigm: float
    pool: list = field(default_factory=list)
    zvar: list = field(default_factory=list)  # pool position -> LP variable
    pool_by_instance: dict = field(default_factory=dict)  # key -> pool positions
    config_index: dict = field(default_factory=dict)  # Configuration.key -> LP variable
    xvar: dict = field(default_factory=dict)  # (key, position, node) -> var
    xfvar: dict = field(default_factory=dict)  # (node, vnf) -> var
    hvar: dict = field(default_factory=dict)  # node -> var
    yfvar: dict = field(default_factory=dict)  # (key, pair, arc) -> var
    ylvar: dict = field(default_factory=dict)
    conv_row: dict = field(default_factory=dict)  # key -> row
    core_row: dict = field(default_factory=dict)  # node -> row
    cap_row: dict = field(default_factory=dict)  # arc -> row
    cons_row: dict = field(default_factory=dict)  # (key, position, node) -> row
    kbudget_row: int = -1
    last_relaxation: Optional[LpSolution] = None
    last_duals: Optional[DualPrices] = None

    def instance_of(self, key: tuple[str, int]) -> ChainInstance:
        try:
            return self._by_key[key]
        except AttributeError:
            object.__setattr__(self, "_by_key", {ci.key: ci for ci in self.chain_instances})
            return self._by_key[key]


def chain_instances(
    instance: ProblemInstance, partitions: Iterable[ChainPartition]
) -> tuple[ChainInstance, ...]:
    """Flatten partitions into the deterministic chain-instance list."""
    out = []
    for part in sorted(partitions, key=lambda p: p.chain):
        spec = instance.chains[part.chain]
        gbps = {
            (r.src, r.dst): r.gbps
            for r in instance.demands.records
            if r.chain == part.chain
        }
        for gi, group in enumerate(part.groups):
            demand = {pair: gbps[pair] for pair in group.members}
            out.append(
                ChainInstance(
                    chain=part.chain,
                    group_index=gi,
                    vnfs=tuple(spec.vnfs),
                    pairs=tuple(group.members),
                    demand=demand,
                    total_gbps=sum(demand.values()),
                )
            )
    return tuple(out)


def make_configuration(
    chain_instance: ChainInstance,
    locations: tuple[str, ...],
    segment_paths: tuple[tuple[Arc, ...], ...],
) -> Configuration:
    """Build a Configuration with its cost derived, not caller-supplied."""
    hops = sum(len(p) for p in segment_paths)
    return Configuration(
        chain=chain_instance.chain,
        group_index=chain_instance.group_index,
        locations=tuple(locations),
        segment_paths=tuple(tuple(p) for p in segment_paths),
        cost=chain_instance.total_gbps * hops,
    )


def validate_configuration(
    instance: ProblemInstance, chain_instance: ChainInstance, config: Configuration
) -> None:
    if (config.chain, config.group_index) != chain_instance.key:
        raise MasterError(
            f"configuration for {config.chain}/{config.group_index} offered to "
            f"chain instance {chain_instance.label}"
        )
    n = len(chain_instance.vnfs)
    if len(config.locations) != n:
        raise MasterError(
            f"{chain_instance.label}: {len(config.locations)} locations for a "
            f"{n}-position chain"
        )
    nfv = set(instance.topology.nfv_nodes)
    for v in config.locations:
        if v not in nfv:
            raise MasterError(f"{chain_instance.label}: location {v!r} is not an NFV node")
    if len(config.segment_paths) != n - 1:
        raise MasterError(
            f"{chain_instance.label}: expected {n - 1} segment paths, "
            f"got {len(config.segment_paths)}"
        )
    for i, seg in enumerate(config.segment_paths):
        a, b = config.locations[i], config.locations[i + 1]
        if not seg:
            if a != b:
                raise MasterError(
                    f"{chain_instance.label}: empty segment {i} between distinct "
                    f"locations {a!r} and {b!r}"
                )
            continue
        if a == b:
            raise MasterError(
                f"{chain_instance.label}: nonempty segment {i} between co-located "
                f"positions at {a!r}"
            )
        for arc in seg:
            if arc not in instance.topology.arc_index:
                raise MasterError(f"{chain_instance.label}: unknown arc {arc!r} in segment {i}")
        nodes = path_nodes(list(seg))
        if not nodes or nodes[0] != a or nodes[-1] != b:
            raise MasterError(
                f"{chain_instance.label}: segment {i} does not run {a!r} -> {b!r}"
            )
    want = chain_instance.total_gbps * config.hop_count
    if abs(config.cost - want) > 1e-9 * max(1.0, abs(want)):
        raise MasterError(
            f"{chain_instance.label}: stored cost {config.cost} != recomputed {want}"
        )


def build_rmp(
    instance: ProblemInstance,
    partitions: Iterable[ChainPartition],
    seed_pool: Iterable[Configuration],
    *,
    paths: Optional[PathTable] = None,
    backend=None,
) -> RmpModel:
    """Assemble rows and static columns, then seed the configuration pool."""
    topo = instance.topology
    if paths is None:
        paths = all_pairs_hops(topo)
    if backend is None:
        backend = default_backend()
    cis = chain_instances(instance, partitions)
    nfv = topo.nfv_nodes
    arcs = [(a.src, a.dst) for a in topo.arcs]
    vnf_ids = sorted({f for ci in cis for f in ci.vnfs})
    bigm = float(sum(len(ci.vnfs) for ci in cis))

    lp = LinearProgram("rmp")
    model = RmpModel(
        instance=instance,
        chain_instances=cis,
        paths=paths,
        backend=backend,
        lp=lp,
        bigm=bigm,
    )

    for ci in cis:
        for pos in range(len(ci.vnfs)):
            for v in nfv:
                model.xvar[(ci.key, pos, v)] = lp.add_variable(
                    f"x[{ci.label}/{pos}/{v}]", 0.0, 1.0
                )
    for v in nfv:
        for f in vnf_ids:
            model.xfvar[(v, f)] = lp.add_variable(f"xf[{v}/{f}]", 0.0, 1.0)
    for v in nfv:
        model.hvar[v] = lp.add_variable(f"h[{v}]", 0.0, 1.0)
    for ci in cis:
        for pair in ci.pairs:
            gbps = ci.demand[pair]
            for arc in arcs:
                model.yfvar[(ci.key, pair, arc)] = lp.add_variable(
                    f"yf[{ci.label}/{pair[0]}-{pair[1]}/{arc[0]}>{arc[1]}]",
                    0.0,
                    1.0,
                    obj=gbps,
                )
                model.ylvar[(ci.key, pair, arc)] = lp.add_variable(
                    f"yl[{ci.label}/{pair[0]}-{pair[1]}/{arc[0]}>{arc[1]}]",
                    0.0,
                    1.0,
                    obj=gbps,
                )

    # configuration choice and resource rows; z columns arrive via add_column
    for ci in cis:
        model.conv_row[ci.key] = lp.add_constraint([], EQ, 1.0, name=f"conv[{ci.label}]")
    for v in nfv:
        model.core_row[v] = lp.add_constraint(
            [], LE, float(topo.node_by_id[v].cores), name=f"core[{v}]"
        )
    for arc in arcs:
        coeffs = []
        for ci in cis:
            for pair in ci.pairs:
                gbps = ci.demand[pair]
                coeffs.append((model.yfvar[(ci.key, pair, arc)], gbps))
                coeffs.append((model.ylvar[(ci.key, pair, arc)], gbps))
        model.cap_row[arc] = lp.add_constraint(
            coeffs, LE, topo.capacity(arc), name=f"cap[{arc[0]}>{arc[1]}]"
        )
    for ci in cis:
        for pos in range(len(ci.vnfs)):
            for v in nfv:
                model.cons_row[(ci.key, pos, v)] = lp.add_constraint(
                    [(model.xvar[(ci.key, pos, v)], -1.0)],
                    EQ,
                    0.0,
                    name=f"cons[{ci.label}/{pos}/{v}]",
                )

    # replica tracking: placements at v switch xf on, xf forces a placement
    for v in nfv:
        for f in vnf_ids:
            terms = [
                (model.xvar[(ci.key, pos, v)], 1.0)
                for ci in cis
                for pos in range(len(ci.vnfs))
                if ci.vnfs[pos] == f
            ]
            lp.add_constraint(
                terms + [(model.xfvar[(v, f)], -bigm)], LE, 0.0, name=f"vnfcap[{v}/{f}]"
            )
            lp.add_constraint(
                [(model.xfvar[(v, f)], 1.0)] + [(j, -a) for j, a in terms],
                LE,
                0.0,
                name=f"vnfuse[{v}/{f}]",
            )
    # hosting flags and the budget on hosting nodes
    for v in nfv:
        fterms = [(model.xfvar[(v, f)], 1.0) for f in vnf_ids]
        lp.add_constraint(
            fterms + [(model.hvar[v], -bigm)], LE, 0.0, name=f"hostcap[{v}]"
        )
        lp.add_constraint(
            [(model.hvar[v], 1.0)] + [(j, -a) for j, a in fterms],
            LE,
            0.0,
            name=f"hostuse[{v}]",
        )
    model.kbudget_row = lp.add_constraint(
        [(model.hvar[v], 1.0) for v in nfv], LE, float(instance.k), name="kbudget"
    )

    nfv_set = set(nfv)
    for ci in cis:
        first, last = 0, len(ci.vnfs) - 1
        for s, d in ci.pairs:
            pk = (ci.key, (s, d))
            tag = f"{ci.label}/{s}-{d}"
            # source emits one unit unless position 1 sits on the source
            coeffs = [(model.yfvar[(ci.key, (s, d), arc)], 1.0) for arc in topo.out_arcs[s]]
            if s in nfv_set:
                coeffs.append((model.xvar[(ci.key, first, s)], 1.0))
            lp.add_constraint(coeffs, EQ, 1.0, name=f"fsrc[{tag}]")
            for v in topo.node_ids:
                if v == s:
                    continue
                inflow = [
                    (model.yfvar[(ci.key, (s, d), arc)], 1.0) for arc in topo.in_arcs[v]
                ]
                outflow = [
                    (model.yfvar[(ci.key, (s, d), arc)], 1.0) for arc in topo.out_arcs[v]
                ]
                if v in nfv_set:
                    xj = model.xvar[(ci.key, first, v)]
                    lp.add_constraint(
                        inflow + [(xj, -1.0)], GE, 0.0, name=f"freach[{tag}/{v}]"
                    )
                    lp.add_constraint(
                        outflow + [(j, -a) for j, a in inflow] + [(xj, 1.0)],
                        EQ,
                        0.0,
                        name=f"fbal[{tag}/{v}]",
                    )
                else:
                    lp.add_constraint(
                        outflow + [(j, -a) for j, a in inflow],
                        EQ,
                        0.0,
                        name=f"fbal[{tag}/{v}]",
                    )
            # destination absorbs one unit unless the last position sits on it
            coeffs = [(model.ylvar[(ci.key, (s, d), arc)], 1.0) for arc in topo.in_arcs[d]]
            if d in nfv_set:
                coeffs.append((model.xvar[(ci.key, last, d)], 1.0))
            lp.add_constraint(coeffs, EQ, 1.0, name=f"ldst[{tag}]")
            for v in topo.node_ids:
                if v == d:
                    continue
                inflow = [
                    (model.ylvar[(ci.key, (s, d), arc)], 1.0) for arc in topo.in_arcs[v]
                ]
                outflow = [
                    (model.ylvar[(ci.key, (s, d), arc)], 1.0) for arc in topo.out_arcs[v]
                ]
                if v in nfv_set:
                    xj = model.xvar[(ci.key, last, v)]
                    lp.add_constraint(
                        outflow + [(xj, -1.0)], GE, 0.0, name=f"lreach[{tag}/{v}]"
                    )
                    lp.add_constraint(
                        outflow + [(j, -a) for j, a in inflow] + [(xj, -1.0)],
                        EQ,
                        0.0,
                        name=f"lbal[{tag}/{v}]",
                    )
                else:
                    lp.add_constraint(
                        outflow + [(j, -a) for j, a in inflow],
                        EQ,
                        0.0,
                        name=f"lbal[{tag}/{v}]",
                    )

    for config in seed_pool:
        add_column(model, config)
    missing = [ci.label for ci in cis if not model.pool_by_instance.get(ci.key)]
    if missing:
        raise MasterError(f"missing seed configuration for chain instance(s) {missing}")
    return model


def column_coefficients(model: RmpModel, config: Configuration) -> dict:
    """Row index -> coefficient a z column for `config` must carry."""
    ci = model.instance_of((config.chain, config.group_index))
    per_gbps = model.instance.chain_cores_per_gbps(ci.chain)
    coeffs = {model.conv_row[ci.key]: 1.0}
    core_use: dict[str, float] = {}
    for pos, v in enumerate(config.locations):
        core_use[v] = core_use.get(v, 0.0) + per_gbps[pos]
    for v, use in sorted(core_use.items()):
        if use:
            coeffs[model.core_row[v]] = ci.total_gbps * use
    arc_mult: dict[Arc, int] = {}
    for seg in config.segment_paths:
        for arc in seg:
            arc_mult[arc] = arc_mult.get(arc, 0) + 1
    for arc, mult in sorted(arc_mult.items()):
        coeffs[model.cap_row[arc]] = ci.total_gbps * mult
    for pos, v in enumerate(config.locations):
        coeffs[model.cons_row[(ci.key, pos, v)]] = 1.0
    return coeffs


def add_column(model: RmpModel, config: Configuration) -> int:
    """Append one z column; exact duplicates return the existing variable."""
    key = (config.chain, config.group_index)
    try:
        ci = model.instance_of(key)
    except KeyError:
        raise MasterError(f"no chain instance {key} in this model") from None
    validate_configuration(model.instance, ci, config)
    existing = model.config_index.get(config.key)
    if existing is not None:
        return existing
    pos = len(model.pool)
    var = model.lp.add_variable(f"z[{ci.label}/{pos}]", 0.0, 1.0, obj=config.cost)
    for row, coef in column_coefficients(model, config).items():
        model.lp.add_coefficient(row, var, coef)
    model.pool.append(config)
    model.zvar.append(var)
    model.pool_by_instance.setdefault(key, []).append(pos)
    model.config_index[config.key] = var
    return var


def solve_relaxation(model: RmpModel) -> tuple[LpSolution, DualPrices]:
    sol = model.backend.solve_lp(model.lp)
    if sol.status == "infeasible":
        raise MasterInfeasible(f"relaxation infeasible ({sol.message})")
    if not sol.optimal:
        raise MasterError(f"relaxation not solved to optimality: {sol.status} ({sol.message})")
    duals = sol.duals

    def clamped(row: int, label: str) -> float:
        d = duals[row]
        if d > DUAL_SIGN_TOL:
            raise MasterError(f"{label}: <=-row dual {d} is positive beyond tolerance")
        return min(d, 0.0)

    prices = DualPrices(
        convexity={ci.key: duals[model.conv_row[ci.key]] for ci in model.chain_instances},
        core={v: clamped(r, f"core[{v}]") for v, r in model.core_row.items()},
        capacity={a: clamped(r, f"cap[{a}]") for a, r in model.cap_row.items()},
        consistency={k: duals[r] for k, r in model.cons_row.items()},
    )
    model.last_relaxation = sol
    model.last_duals = prices
    return sol, prices


def reduced_cost_of(model: RmpModel, duals: DualPrices, config: Configuration) -> float:
    """Recompute a column's reduced cost from its row coefficients."""
    ci = model.instance_of((config.chain, config.group_index))
    rc = config.cost - duals.convexity[ci.key]
    per_gbps = model.instance.chain_cores_per_gbps(ci.chain)
    for pos, v in enumerate(config.locations):
        rc -= duals.core[v] * ci.total_gbps * per_gbps[pos]
        rc -= duals.consistency[(ci.key, pos, v)]
    for seg in config.segment_paths:
        for arc in seg:
            rc -= duals.capacity[arc] * ci.total_gbps
    return rc


def _end_cost(model: RmpModel, ci: ChainInstance, config: Configuration) -> float:
    total = 0.0
    for (s, d), gbps in sorted(ci.demand.items()):
        total += gbps * (
            model.paths.distance(s, config.locations[0])
            + model.paths.distance(config.locations[-1], d)
        )
    return total


def build_final_ilp(model: RmpModel, mode: str = MODE_FULL) -> FinalIlp:
    """Integer selection over the pooled columns.

    full: every variable of the relaxation turns binary. uncapacitated_fast:
    end-segment routing is folded into the z objective at hop-shortest
    distances, valid only while core and capacity rows are all slack at the
    last relaxation optimum; the builder refuses otherwise.
    """
    if mode == "fast":
        mode = MODE_FAST
    if mode not in (MODE_FULL, MODE_FAST):
        raise MasterError(f"unknown final ILP mode {mode!r}")
    if mode == MODE_FULL:
        lp = model.lp.clone(integer_all=True)
        zmap = {model.zvar[i]: i for i in range(len(model.pool))}
        return FinalIlp(lp=lp, mode=mode, zmap=zmap, kbudget_row=model.kbudget_row)

    if model.last_relaxation is None:
        raise MasterError("uncapacitated_fast needs a solved relaxation first")
    x = model.last_relaxation.x
    for label, rows in (("core", model.core_row), ("cap", model.cap_row)):
        for key, row in rows.items():
            rhs = model.lp.rows[row].rhs
            slack = rhs - model.lp.row_activity(row, x)
            if slack < 1e-6 * max(1.0, abs(rhs)):
                raise MasterError(
                    f"uncapacitated_fast refused: {label}[{key}] is tight at the "
                    f"relaxation optimum (slack {slack:.3g})"
                )

    topo = model.instance.topology
    nfv = topo.nfv_nodes
    vnf_ids = sorted({f for ci in model.chain_instances for f in ci.vnfs})
    lp = LinearProgram("final-fast")
    zmap = {}
    zvars = []
    for pos, config in enumerate(model.pool):
        ci = model.instance_of((config.chain, config.group_index))
        var = lp.add_variable(
            f"z[{ci.label}/{pos}]",
            0.0,
            1.0,
            obj=config.cost + _end_cost(model, ci, config),
            integer=True,
        )
        zmap[var] = pos
        zvars.append(var)
    xfvar = {
        (v, f): lp.add_variable(f"xf[{v}/{f}]", 0.0, 1.0, integer=True)
        for v in nfv
        for f in vnf_ids
    }
    hvar = {v: lp.add_variable(f"h[{v}]", 0.0, 1.0, integer=True) for v in nfv}

    for ci in model.chain_instances:
        members = model.pool_by_instance[ci.key]
        lp.add_constraint([(zvars[p], 1.0) for p in members], EQ, 1.0, name=f"conv[{ci.label}]")
    for v in nfv:
        for f in vnf_ids:
            terms = []
            for p, config in enumerate(model.pool):
                ci = model.instance_of((config.chain, config.group_index))
                count = sum(
                    1
                    for pos, loc in enumerate(config.locations)
                    if loc == v and ci.vnfs[pos] == f
                )
                if count:
                    terms.append((zvars[p], float(count)))
            lp.add_constraint(
                terms + [(xfvar[(v, f)], -model.bigm)], LE, 0.0, name=f"vnfcap[{v}/{f}]"
            )
            lp.add_constraint(
                [(xfvar[(v, f)], 1.0)] + [(j, -a) for j, a in terms],
                LE,
                0.0,
                name=f"vnfuse[{v}/{f}]",
            )
    for v in nfv:
        fterms = [(xfvar[(v, f)], 1.0) for f in vnf_ids]
        lp.add_constraint(fterms + [(hvar[v], -model.bigm)], LE, 0.0, name=f"hostcap[{v}]")
        lp.add_constraint(
            [(hvar[v], 1.0)] + [(j, -a) for j, a in fterms], LE, 0.0, name=f"hostuse[{v}]"
        )
    krow = lp.add_constraint(
        [(hvar[v], 1.0) for v in nfv], LE, float(model.instance.k), name="kbudget"
    )

    # resource safety on the z part alone; end segments are covered by the
    # slackness check above
    for v in nfv:
        terms = []
        for p, config in enumerate(model.pool):
            ci = model.instance_of((config.chain, config.group_index))
            per_gbps = model.instance.chain_cores_per_gbps(ci.chain)
            use = sum(per_gbps[pos] for pos, loc in enumerate(config.locations) if loc == v)
            if use:
                terms.append((zvars[p], ci.total_gbps * use))
        if terms:
            lp.add_constraint(
                terms, LE, float(topo.node_by_id[v].cores), name=f"core[{v}]"
            )
    for arc in ((a.src, a.dst) for a in topo.arcs):
        terms = []
        for p, config in enumerate(model.pool):
            ci = model.instance_of((config.chain, config.group_index))
            mult = sum(seg.count(arc) for seg in config.segment_paths)
            if mult:
                terms.append((zvars[p], ci.total_gbps * mult))
        if terms:
            lp.add_constraint(
                terms, LE, topo.capacity(arc), name=f"cap[{arc[0]}>{arc[1]}]"
            )
    return FinalIlp(lp=lp, mode=mode, zmap=zmap, kbudget_row=krow)


def dump_rmp(model: RmpModel, fh: IO[str]) -> None:
    """Write the current relaxation in LP text format for inspection."""
    write_lp_text(model.lp, fh)
