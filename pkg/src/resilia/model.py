"""Domain model for the coupled distribution/communication planning problem.

Types are frozen dataclasses and are treated as immutable after
:func:`validate` passes, so networks can be shared read-only across
concurrent solver workers.  Validation collects violations into a
:class:`ValidationReport` instead of raising, and never repairs anything.

Conventions: voltages in per-unit, power in MW/MVAr, costs in $k, line
lengths in miles.  Phase sets are subsets of ``{"a", "b", "c"}``, stored
sorted.  A line that is not yet built ("candidate") always carries a switch;
separately, an existing line may be a candidate for a switch *installation*.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

PHASES = ("a", "b", "c")

#: Reserved id prefix for synthesized entities (dummy communication node and
#: its auxiliary arcs); input files must not use it.
RESERVED_PREFIX = "_"
DUMMY_NODE_ID = "_dummy"

COMM_NODE_KINDS = ("control-center", "switch-control-point",
                   "generator-control-point", "intermediate", "dummy")


# --------------------------------------------------------------------- types
@dataclass(frozen=True)
class Bus:
    id: str
    phases: tuple[str, ...]
    demand: dict[str, tuple[float, float]]  # phase -> (MW, MVAr)
    critical: bool = False
    vmin: dict[str, float] = field(default_factory=dict)  # per-unit
    vmax: dict[str, float] = field(default_factory=dict)

    def demand_p(self, k: str) -> float:
        return self.demand.get(k, (0.0, 0.0))[0]

    def demand_q(self, k: str) -> float:
        return self.demand.get(k, (0.0, 0.0))[1]


@dataclass(frozen=True)
class Line:
    id: str
    from_bus: str
    to_bus: str
    phases: tuple[str, ...]
    r: np.ndarray  # per-unit, |phases| x |phases|, symmetric
    x: np.ndarray
    thermal: dict[str, float]  # MVA per phase
    is_transformer: bool = False
    phase_variation: float = math.inf  # fraction; inf = unconstrained
    existing: bool = True
    switchable_existing: bool = False  # has a switch already (all candidates do)
    switchable_candidate: bool = False  # switch can be purchased
    hardenable: bool = False
    length_miles: float | None = None

    @property
    def switchable(self) -> bool:
        return self.switchable_existing or self.switchable_candidate

    def z_entry(self, k: str, kp: str) -> complex:
        i, j = self.phases.index(k), self.phases.index(kp)
        return complex(self.r[i, j], self.x[i, j])


@dataclass(frozen=True)
class Generator:
    id: str
    bus: str
    phases: tuple[str, ...]
    capacity: dict[str, tuple[float, float]]  # phase -> (MW, MVAr)
    existing: bool = True

    def cap_p(self, k: str) -> float:
        return self.capacity.get(k, (0.0, 0.0))[0]

    def cap_q(self, k: str) -> float:
        return self.capacity.get(k, (0.0, 0.0))[1]


@dataclass(frozen=True)
class CommNode:
    id: str
    kind: str = "intermediate"


@dataclass(frozen=True)
class CommLink:
    id: str
    from_node: str
    to_node: str
    existing: bool = True
    hardenable: bool = False
    paired_line: str | None = None  # shared-fate twin of a distribution line


@dataclass(frozen=True)
class Scenario:
    id: str
    damaged: tuple[str, ...]  # edge ids (distribution lines and/or comm links)


@dataclass(frozen=True)
class ResilienceSpec:
    eta_critical: float = 0.98
    eta_total: float = 0.5
    pwl_segments: int = 28
    gap_tolerance: float = 0.001


@dataclass(frozen=True)
class CatalogEntry:
    kind: str  # "x" new edge | "t" new switch | "h" hardening | "u" new generator
    target: str  # edge or generator id
    cost: float


SEGMENT_ORDER = ("x", "t", "h", "u")
SEGMENT_NAMES = {"x": "new_edges", "t": "new_switches",
                 "h": "hardenings", "u": "new_generators"}


@dataclass(frozen=True)
class UpgradeCatalog:
    """Deterministically ordered index over first-stage decisions."""

    entries: tuple[CatalogEntry, ...]

    @property
    def m(self) -> int:
        return len(self.entries)

    @property
    def costs(self) -> np.ndarray:
        return np.array([e.cost for e in self.entries])

    def position(self, kind: str, target: str) -> int:
        for i, e in enumerate(self.entries):
            if e.kind == kind and e.target == target:
                return i
        raise KeyError((kind, target))

    def segment(self, kind: str) -> list[CatalogEntry]:
        return [e for e in self.entries if e.kind == kind]


@dataclass(frozen=True)
class CycleCatalog:
    """Simple cycles of the collapsed distribution graph.

    Each cycle is a tuple of endpoint pairs; ``parallel_groups`` maps a pair
    to every (existing or candidate) line between those endpoints.  Two
    parallel lines alone do not form a catalog cycle: the cycle set covers
    distinct node sets of size >= 3, and parallelism is handled by the
    per-pair groups.
    """

    cycles: tuple[tuple[tuple[str, str], ...], ...]
    parallel_groups: dict[tuple[str, str], tuple[str, ...]]


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        lines = []
        for v in self.violations:
            lines.append(f"violation: {v}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        return "\n".join(lines) if lines else "OK"


class CycleCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class IntegratedNetwork:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    comm_nodes: tuple[CommNode, ...]
    comm_links: tuple[CommLink, ...]
    control_switches: dict[str, str]  # line id -> comm node id
    control_generators: dict[str, str]  # generator id -> comm node id
    resilience: ResilienceSpec = ResilienceSpec()
    upgrade_costs: dict = field(default_factory=dict)  # section -> {id: $k}

    # ----------------------------------------------------------- derived maps
    def __post_init__(self):
        object.__setattr__(self, "bus_by_id", {b.id: b for b in self.buses})
        object.__setattr__(self, "line_by_id", {e.id: e for e in self.lines})
        object.__setattr__(self, "gen_by_id", {g.id: g for g in self.generators})
        object.__setattr__(self, "comm_node_by_id",
                           {n.id: n for n in self.comm_nodes})
        object.__setattr__(self, "comm_link_by_id",
                           {e.id: e for e in self.comm_links})
        object.__setattr__(self, "catalog",
                           build_catalog_index(self, self.upgrade_costs))

    @property
    def control_centers(self) -> tuple[str, ...]:
        return tuple(sorted(n.id for n in self.comm_nodes
                            if n.kind == "control-center"))

    @property
    def dummy_node_id(self) -> str:
        return DUMMY_NODE_ID

    @property
    def aux_links(self) -> tuple[tuple[str, str], ...]:
        """Synthesized (arc id, control center) pairs from the dummy source."""
        return tuple((f"_aux:{cc}", cc) for cc in self.control_centers)

    def control_points(self) -> tuple[str, ...]:
        """Comm nodes controlling a gated device: any switch, any candidate DG."""
        pts = set()
        for line in self.lines:
            if line.switchable and line.id in self.control_switches:
                pts.add(self.control_switches[line.id])
        for gen in self.generators:
            if not gen.existing and gen.id in self.control_generators:
                pts.add(self.control_generators[gen.id])
        return tuple(sorted(pts))

    def paired_links_of(self, line_id: str) -> list[CommLink]:
        return [cl for cl in self.comm_links if cl.paired_line == line_id]

    def total_demand(self, phase: str, reactive: bool = False,
                     critical_only: bool = False) -> float:
        total = 0.0
        for b in self.buses:
            if critical_only and not b.critical:
                continue
            if phase in b.phases:
                total += b.demand_q(phase) if reactive else b.demand_p(phase)
        return total


# --------------------------------------------------------------- the catalog
def build_catalog_index(net: IntegratedNetwork,
                        costs: dict | None = None) -> UpgradeCatalog:
    """Ordered first-stage index: new edges, new switches, hardenings, new DGs.

    Within each segment entries are sorted by id, so two loads of the same
    file always produce the same index.  Shared-fate comm links (paired with
    a line) carry no entries of their own.  When ``costs`` is omitted the
    entries get cost 0 (the loader re-builds the catalog with file costs).
    """
    costs = costs or {}

    def cost(section: str, target: str) -> float:
        return float(costs.get(section, {}).get(target, 0.0))

    entries: list[CatalogEntry] = []
    new_edges = sorted([e.id for e in net.lines if not e.existing]
                       + [c.id for c in net.comm_links
                          if not c.existing and c.paired_line is None])
    entries += [CatalogEntry("x", t, cost("new_edges", t)) for t in new_edges]
    new_switches = sorted(e.id for e in net.lines if e.switchable_candidate)
    entries += [CatalogEntry("t", t, cost("new_switches", t)) for t in new_switches]
    hardenings = sorted([e.id for e in net.lines if e.hardenable]
                        + [c.id for c in net.comm_links
                           if c.hardenable and c.paired_line is None])
    entries += [CatalogEntry("h", t, cost("hardenings", t)) for t in hardenings]
    new_gens = sorted(g.id for g in net.generators if not g.existing)
    entries += [CatalogEntry("u", t, cost("new_generators", t)) for t in new_gens]
    return UpgradeCatalog(tuple(entries))


# ---------------------------------------------------------------- validation
def _check_phase_dict(report, owner: str, what: str, d: dict, phases,
                      lo=None, pair=False):
    for k, v in d.items():
        if k not in phases:
            report.violations.append(
                f"{owner}: {what} declares phase {k!r} outside its phase set")
            continue
        vals = v if pair else (v,)
        for comp in vals:
            if not math.isfinite(comp):
                report.violations.append(f"{owner}: non-finite {what} on phase {k}")
            elif lo is not None and comp < lo:
                report.violations.append(
                    f"{owner}: {what} on phase {k} must be >= {lo}")


def validate(net: IntegratedNetwork) -> ValidationReport:
    """Check every structural invariant; report, never repair."""
    rep = ValidationReport()
    if not net.buses:
        rep.violations.append("network: non-empty bus set required")

    seen_buses = set()
    for b in net.buses:
        if b.id in seen_buses:
            rep.violations.append(f"bus {b.id}: duplicate id")
        seen_buses.add(b.id)
        if b.id.startswith(RESERVED_PREFIX):
            rep.violations.append(f"bus {b.id}: reserved id prefix '_'")
        if not b.phases or not set(b.phases) <= set(PHASES):
            rep.violations.append(f"bus {b.id}: phase set must be a non-empty "
                                  "subset of a/b/c")
        _check_phase_dict(rep, f"bus {b.id}", "demand", b.demand, b.phases,
                          lo=0.0, pair=True)
        for k in b.phases:
            lo, hi = b.vmin.get(k, 0.0), b.vmax.get(k, 0.0)
            if not (0.0 < lo <= hi):
                rep.violations.append(
                    f"bus {b.id}: voltage bounds need 0 < vmin <= vmax on phase {k}")

    edge_ids = set()
    for e in net.lines:
        if e.id in edge_ids:
            rep.violations.append(f"line {e.id}: duplicate edge id")
        edge_ids.add(e.id)
        if e.id.startswith(RESERVED_PREFIX):
            rep.violations.append(f"line {e.id}: reserved id prefix '_'")
        if e.from_bus == e.to_bus:
            rep.violations.append(f"line {e.id}: endpoints must be distinct")
        for end in (e.from_bus, e.to_bus):
            if end not in net.bus_by_id:
                rep.violations.append(f"line {e.id}: unknown bus {end}")
        if not e.phases:
            rep.violations.append(f"line {e.id}: empty phase set")
        for end in (e.from_bus, e.to_bus):
            bus = net.bus_by_id.get(end)
            if bus and not set(e.phases) <= set(bus.phases):
                rep.violations.append(
                    f"line {e.id}: phases must be a subset of bus {end} phases")
        np_ = len(e.phases)
        for mat, nm in ((e.r, "R"), (e.x, "X")):
            if mat.shape != (np_, np_):
                rep.violations.append(f"line {e.id}: {nm} must be {np_}x{np_}")
            elif not np.allclose(mat, mat.T, atol=1e-12):
                rep.violations.append(f"line {e.id}: {nm} must be symmetric")
            elif not np.all(np.isfinite(mat)):
                rep.violations.append(f"line {e.id}: {nm} has non-finite entries")
        for k in e.phases:
            if e.thermal.get(k, 0.0) <= 0.0:
                rep.violations.append(f"line {e.id}: thermal limit on phase {k} "
                                      "must be > 0")
        if not (e.phase_variation > 0.0):
            rep.violations.append(f"line {e.id}: phase variation bound must be "
                                  "> 0 or unbounded")
        if not e.existing and not e.switchable_existing:
            rep.violations.append(
                f"line {e.id}: a candidate line must come with a switch")
        if e.switchable_candidate and not e.existing:
            rep.violations.append(
                f"line {e.id}: switch purchase applies to existing lines only")
        if e.switchable_candidate and e.switchable_existing:
            rep.violations.append(
                f"line {e.id}: already switchable; cannot also buy a switch")
        if e.length_miles is not None and not (e.length_miles > 0.0):
            rep.violations.append(f"line {e.id}: length must be positive")

    for g in net.generators:
        if g.bus not in net.bus_by_id:
            rep.violations.append(f"generator {g.id}: unknown bus {g.bus}")
        else:
            if not set(g.phases) <= set(net.bus_by_id[g.bus].phases):
                rep.violations.append(
                    f"generator {g.id}: phases must be a subset of its bus phases")
        _check_phase_dict(rep, f"generator {g.id}", "capacity", g.capacity,
                          g.phases, lo=0.0, pair=True)

    node_ids = set()
    for n in net.comm_nodes:
        if n.id in node_ids:
            rep.violations.append(f"comm node {n.id}: duplicate id")
        node_ids.add(n.id)
        if n.id.startswith(RESERVED_PREFIX):
            rep.violations.append(f"comm node {n.id}: reserved id prefix '_'")
        if n.kind == "dummy":
            rep.violations.append(f"comm node {n.id}: dummy nodes are synthesized, "
                                  "not stored in files")
        elif n.kind not in COMM_NODE_KINDS:
            rep.violations.append(f"comm node {n.id}: unknown kind {n.kind!r}")

    for cl in net.comm_links:
        if cl.id in edge_ids:
            rep.violations.append(f"comm link {cl.id}: duplicate edge id")
        edge_ids.add(cl.id)
        if cl.id.startswith(RESERVED_PREFIX):
            rep.violations.append(f"comm link {cl.id}: reserved id prefix '_'")
        for end in (cl.from_node, cl.to_node):
            if end not in net.comm_node_by_id:
                rep.violations.append(f"comm link {cl.id}: unknown comm node {end}")
        if cl.from_node == cl.to_node:
            rep.violations.append(f"comm link {cl.id}: endpoints must be distinct")
        if cl.paired_line is not None:
            line = net.line_by_id.get(cl.paired_line)
            if line is None:
                rep.violations.append(
                    f"comm link {cl.id}: paired line {cl.paired_line} not found")
            else:
                if cl.existing != line.existing:
                    rep.violations.append(
                        f"comm link {cl.id}: shared-fate link must match the "
                        f"existing flag of line {line.id}")
                if cl.hardenable:
                    rep.violations.append(
                        f"comm link {cl.id}: shared-fate link uses the paired "
                        "line's hardening; hardenable must be false")

    # Control mappings: every switchable line and every generator maps to
    # exactly one control point that exists and is not synthesized.
    for line in net.lines:
        if line.switchable and line.id not in net.control_switches:
            rep.violations.append(
                f"line {line.id}: switchable line lacks a control point")
    for gen in net.generators:
        if gen.id not in net.control_generators:
            rep.violations.append(
                f"generator {gen.id}: generator lacks a control point")
    for src, mapping in (("switch", net.control_switches),
                         ("generator", net.control_generators)):
        for dev, node in mapping.items():
            pool = net.line_by_id if src == "switch" else net.gen_by_id
            if dev not in pool:
                rep.violations.append(
                    f"control map: unknown {src} target {dev}")
            if node not in net.comm_node_by_id:
                rep.violations.append(
                    f"control map: {src} {dev} mapped to unknown comm node {node}")
        for dev in mapping:
            if src == "switch" and dev in net.line_by_id and \
                    not net.line_by_id[dev].switchable:
                rep.violations.append(
                    f"control map: line {dev} is not switchable")

    # Synthesized dummy invariants hold by construction; verify anyway.
    aux = net.aux_links
    if len({a for a, _ in aux}) != len(aux):
        rep.violations.append("dummy: auxiliary arc ids must be unique")
    if {cc for _, cc in aux} != set(net.control_centers):
        rep.violations.append("dummy: must connect to every control center")
    if not net.control_centers and net.control_points():
        rep.warnings.append(
            "no control center: every remotely-operated device will be "
            "unavailable in every scenario")

    # Catalog costs.
    for entry in net.catalog.entries:
        if not math.isfinite(entry.cost) or entry.cost < 0.0:
            rep.violations.append(
                f"cost for {SEGMENT_NAMES[entry.kind]}/{entry.target} must be "
                "a finite nonnegative number")
    catalogued = {(e.kind, e.target) for e in net.catalog.entries}
    for kind, section in SEGMENT_NAMES.items():
        for target in net.upgrade_costs.get(section, {}):
            if (kind, target) not in catalogued:
                rep.violations.append(
                    f"costs/{section}: {target} is not a matching candidate")

    spec = net.resilience
    for nm, v in (("eta_critical", spec.eta_critical), ("eta_total", spec.eta_total)):
        if not (0.0 <= v <= 1.0):
            rep.violations.append(f"resilience: {nm} must be within [0, 1]")
    if spec.pwl_segments < 3:
        rep.violations.append("resilience: pwl_segments must be >= 3")
    if not (spec.gap_tolerance > 0.0):
        rep.violations.append("resilience: gap_tolerance must be positive")
    return rep


def validate_scenarios(net: IntegratedNetwork,
                       scenarios: list[Scenario]) -> ValidationReport:
    rep = ValidationReport()
    edge_ids = set(net.line_by_id) | set(net.comm_link_by_id)
    seen = set()
    for s in scenarios:
        if s.id in seen:
            rep.violations.append(f"scenario {s.id}: duplicate id")
        seen.add(s.id)
        for e in s.damaged:
            if e not in edge_ids:
                rep.violations.append(f"scenario {s.id}: unknown edge {e}")
    return rep


# --------------------------------------------------------------------- cycles
def enumerate_cycles(net: IntegratedNetwork, cap: int = 10_000) -> CycleCatalog:
    """All simple cycles (distinct node sets, length >= 3) of the collapsed
    distribution graph over existing + candidate lines.

    Parallel lines between the same endpoints collapse into one representative
    pair; the pair's parallel group records every member line.  Raises
    :class:`CycleCapExceeded` past ``cap`` — at that point pre-enumerated
    radiality rows are the wrong tool and lazy cycle cuts should be used
    instead.
    """
    groups: dict[tuple[str, str], list[str]] = {}
    for line in net.lines:
        pair = tuple(sorted((line.from_bus, line.to_bus)))
        groups.setdefault(pair, []).append(line.id)
    parallel_groups = {pair: tuple(sorted(ids)) for pair, ids in groups.items()}

    graph = nx.Graph()
    graph.add_nodes_from(sorted(b.id for b in net.buses))
    graph.add_edges_from(sorted(parallel_groups))

    cycles = []
    for nodes in itertools.islice(nx.simple_cycles(graph), cap + 1):
        if len(cycles) >= cap:
            raise CycleCapExceeded(
                f"more than {cap} cycles in the distribution graph; raise the "
                "cap or switch to lazily separated radiality cuts")
        pairs = tuple(sorted(
            tuple(sorted((nodes[i], nodes[(i + 1) % len(nodes)])))
            for i in range(len(nodes))))
        cycles.append(pairs)
    cycles.sort(key=lambda c: (len(c), c))
    return CycleCatalog(tuple(cycles), parallel_groups)
