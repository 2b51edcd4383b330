"""Deterministic instance builders shared across the test suite.

``two_bus`` is the hand-checkable micro fixture; ``random_instance`` draws
small feasibility-filtered planning problems for solver cross-checks; and
``coverage_instance`` builds the symmetric hub-and-spoke family whose
interchangeable, equal-cost restoration options make plain column generation
crawl — the stress bed for the acceleration comparisons.
"""

from __future__ import annotations

import itertools
import random

import numpy as np

from resilia.formulation import solve_extensive
from resilia.model import (Bus, CommLink, CommNode, Generator,
                           IntegratedNetwork, Line, ResilienceSpec, Scenario,
                           validate)

VOLTS = {"vmin": 0.95, "vmax": 1.05}


def _vbounds(phases):
    return {"vmin": {k: VOLTS["vmin"] for k in phases},
            "vmax": {k: VOLTS["vmax"] for k in phases}}


def _impedance(rng: random.Random, phases) -> tuple[np.ndarray, np.ndarray]:
    n = len(phases)
    base = rng.uniform(0.001, 0.005)
    r = np.zeros((n, n))
    for i in range(n):
        r[i, i] = base * rng.uniform(0.8, 1.25)
        for j in range(i):
            r[i, j] = r[j, i] = 0.2 * base * rng.uniform(0.3, 0.8)
    return r, 2.0 * r


def simple_line(id: str, u: str, v: str, phases=("a",), r_ohm=0.004,
                thermal=50.0, **kw) -> Line:
    n = len(phases)
    r = np.eye(n) * r_ohm
    return Line(id, u, v, phases, r, 2.0 * r,
                {k: thermal for k in phases}, **kw)


def two_bus(two_centers: bool = False, line_cost: float = 20.0,
            gen_cost: float = 5.0, lengths: bool = False) -> IntegratedNetwork:
    """Damaged feed to one critical bus; fix it with a line (switch already
    fitted) or a local generator whose control point the comm layer may or
    may not reach."""
    buses = (
        Bus("b1", ("a",), {}, **_vbounds(("a",))),
        Bus("b2", ("a",), {"a": (1.0, 0.5)}, critical=True,
            **_vbounds(("a",))),
    )
    length = {"length_miles": 2.5} if lengths else {}
    lines = (
        simple_line("l1", "b1", "b2", thermal=10.0, **length),
        simple_line("l2", "b1", "b2", thermal=10.0, existing=False,
                    switchable_existing=True, **length),
    )
    gens = (
        Generator("g1", "b1", ("a",), {"a": (5.0, 5.0)}),
        Generator("g2", "b2", ("a",), {"a": (5.0, 5.0)}, existing=False),
    )
    comm_nodes = [CommNode("cc", kind="control-center"),
                  CommNode("cp2", kind="switch-control-point")]
    comm_links = [CommLink("cl1", "cc", "cp2")]
    if two_centers:
        comm_nodes.append(CommNode("cc2", kind="control-center"))
        comm_links.append(CommLink("cl2", "cc2", "cp2"))
    net = IntegratedNetwork(
        buses, lines, gens, tuple(comm_nodes), tuple(comm_links),
        control_switches={"l2": "cp2"},
        control_generators={"g1": "cc", "g2": "cp2"},
        resilience=ResilienceSpec(eta_critical=1.0, eta_total=0.5),
        upgrade_costs={"new_edges": {"l2": line_cost},
                       "new_generators": {"g2": gen_cost}},
    )
    report = validate(net)
    assert report.ok, report.violations
    return net


TWO_BUS_SCENARIO = Scenario("s0", ("l1", "cl1"))


# --------------------------------------------------------- random instances
def _try_build(rng: random.Random):
    phases = ("a",) if rng.random() < 0.7 else ("a", "b", "c")
    n_buses = rng.randint(4, 8)
    bus_ids = [f"b{i}" for i in range(n_buses)]

    buses = []
    for i, b in enumerate(bus_ids):
        if i == 0:
            demand = {}
            critical = False
        else:
            demand = {k: (round(rng.uniform(0.4, 1.6), 2),
                          round(rng.uniform(0.2, 0.8), 2))
                      for k in phases}
            critical = rng.random() < 0.5
        buses.append(Bus(b, phases, demand, critical=critical,
                         **_vbounds(phases)))
    total_p = sum(p for b in buses for p, _ in b.demand.values())

    lines = []
    # random spanning tree: attach each bus to an earlier one
    for i in range(1, n_buses):
        u = bus_ids[rng.randrange(i)]
        r, x = _impedance(rng, phases)
        has_switch = rng.random() < 0.3
        lines.append(Line(f"l{i - 1}", u, bus_ids[i], phases, r, x,
                          {k: total_p * rng.uniform(0.6, 1.5) for k in phases},
                          hardenable=rng.random() < 0.8,
                          switchable_existing=has_switch,
                          switchable_candidate=(not has_switch
                                                and rng.random() < 0.25),
                          length_miles=round(rng.uniform(0.5, 3.0), 2)))
    # candidate lines (switch included) between distinct non-adjacent pairs
    used = {tuple(sorted((e.from_bus, e.to_bus))) for e in lines}
    candidates = [p for p in itertools.combinations(bus_ids, 2)
                  if tuple(sorted(p)) not in used]
    rng.shuffle(candidates)
    for j, (u, v) in enumerate(candidates[:rng.randint(1, 3)]):
        r, x = _impedance(rng, phases)
        lines.append(Line(f"c{j}", u, v, phases, r, x,
                          {k: total_p * rng.uniform(0.6, 1.5) for k in phases},
                          existing=False, switchable_existing=True,
                          length_miles=round(rng.uniform(0.5, 3.0), 2)))

    gens = [Generator("g0", bus_ids[0], phases,
                      {k: (2.0 * total_p, 2.0 * total_p) for k in phases})]
    for j, b in enumerate(rng.sample(bus_ids[1:], rng.randint(1, 2))):
        gens.append(Generator(f"dg{j}", b, phases,
                              {k: (round(rng.uniform(0.5, 1.5) * total_p, 2),) * 2
                               for k in phases}, existing=False))

    centers = [CommNode(f"cc{i}", kind="control-center")
               for i in range(rng.randint(1, 2))]
    comm_nodes = list(centers)
    comm_links = []
    control_switches: dict[str, str] = {}
    control_generators: dict[str, str] = {"g0": centers[0].id}
    for e in lines:
        if e.switchable_existing or e.switchable_candidate:
            node = CommNode(f"sp.{e.id}", kind="switch-control-point")
            comm_nodes.append(node)
            control_switches[e.id] = node.id
            comm_links.append(CommLink(f"kl.{e.id}",
                                       rng.choice(centers).id, node.id))
    for g in gens[1:]:
        node = CommNode(f"gp.{g.id}", kind="generator-control-point")
        comm_nodes.append(node)
        control_generators[g.id] = node.id
        comm_links.append(CommLink(f"kg.{g.id}",
                                   rng.choice(centers).id, node.id))

    existing_ids = [e.id for e in lines if e.existing]
    scenarios = []
    for si in range(rng.randint(2, 4)):
        damaged = set(rng.sample(existing_ids,
                                 rng.randint(1, min(3, len(existing_ids)))))
        if comm_links and rng.random() < 0.3:
            damaged.add(rng.choice(comm_links).id)
        scenarios.append(Scenario(f"s{si}", tuple(sorted(damaged))))

    costs = {"new_edges": {}, "new_switches": {}, "hardenings": {},
             "new_generators": {}}
    for e in lines:
        if not e.existing:
            costs["new_edges"][e.id] = round(rng.uniform(1.0, 10.0), 2)
        if e.switchable_candidate:
            costs["new_switches"][e.id] = round(rng.uniform(0.5, 4.0), 2)
        if e.hardenable:
            costs["hardenings"][e.id] = round(rng.uniform(1.0, 8.0), 2)
    for g in gens:
        if not g.existing:
            costs["new_generators"][g.id] = round(rng.uniform(1.0, 10.0), 2)

    net = IntegratedNetwork(
        tuple(buses), tuple(lines), tuple(gens), tuple(comm_nodes),
        tuple(comm_links), control_switches, control_generators,
        resilience=ResilienceSpec(
            eta_critical=rng.choice((0.9, 0.95, 0.98, 1.0)),
            eta_total=rng.choice((0.3, 0.5)),
        ),
        upgrade_costs=costs,
    )
    if net.catalog.m > 12 or not validate(net).ok:
        return None, None
    return net, scenarios


def random_instance(seed: int, max_upgrades: int = 4,
                    require_positive: bool = False):
    """A feasible random planning problem (4-8 buses, 2-4 scenarios, m <= 12).

    Feasibility-filtered so every solver — including the exhaustive sweep —
    terminates quickly; ``max_upgrades`` caps the optimum's support for the
    sweep's sake.  Deterministic in ``seed``.
    """
    for attempt in range(200):
        rng = random.Random(f"inst:{seed}:{attempt}")
        net, scenarios = _try_build(rng)
        if net is None:
            continue
        probe = solve_extensive(net, scenarios)
        if probe.status != "optimal":
            continue
        if sum(probe.counts.values()) > max_upgrades:
            continue
        if require_positive and probe.objective <= 1e-9:
            continue
        return net, scenarios
    raise RuntimeError(f"no feasible instance found for seed {seed}")


# ------------------------------------------------- degenerate hub-and-spoke
def coverage_instance(n_leaves: int, n_scenarios: int, seed: int = 0,
                      options: int = 3, cost: float = 4.0):
    """Hub-and-spoke with ``options`` equal-cost restorations per leaf.

    Every leaf is critical and fed by one hardenable line; scenarios damage
    overlapping leaf subsets.  Repairs per leaf — harden the feed, build a
    backup from the hub, or drop in a local generator — cost exactly the
    same, so scenario polytopes are packed with interchangeable vertices and
    the master duals are maximally degenerate.
    """
    rng = random.Random(f"cover:{seed}")
    phases = ("a",)
    buses = [Bus("hub", phases, {}, **_vbounds(phases))]
    lines = []
    gens = [Generator("sub", "hub", phases, {"a": (1000.0, 1000.0)})]
    costs = {"new_edges": {}, "hardenings": {}, "new_generators": {}}
    comm_nodes = [CommNode("cc", kind="control-center")]
    comm_links = []
    control_switches: dict[str, str] = {}
    control_generators = {"sub": "cc"}

    for i in range(n_leaves):
        leaf = f"v{i}"
        buses.append(Bus(leaf, phases, {"a": (1.0, 0.5)}, critical=True,
                         **_vbounds(phases)))
        lines.append(simple_line(f"f{i}", "hub", leaf, hardenable=True))
        costs["hardenings"][f"f{i}"] = cost
        if options >= 2:
            lines.append(simple_line(f"n{i}", "hub", leaf, existing=False,
                                     switchable_existing=True))
            costs["new_edges"][f"n{i}"] = cost
            node = CommNode(f"sp{i}", kind="switch-control-point")
            comm_nodes.append(node)
            comm_links.append(CommLink(f"ks{i}", "cc", node.id))
            control_switches[f"n{i}"] = node.id
        if options >= 3:
            gens.append(Generator(f"dg{i}", leaf, phases,
                                  {"a": (2.0, 1.0)}, existing=False))
            costs["new_generators"][f"dg{i}"] = cost
            node = CommNode(f"gp{i}", kind="generator-control-point")
            comm_nodes.append(node)
            comm_links.append(CommLink(f"kg{i}", "cc", node.id))
            control_generators[f"dg{i}"] = node.id

    scenarios = []
    for si in range(n_scenarios):
        hit = rng.sample(range(n_leaves), max(2, n_leaves // 2))
        scenarios.append(Scenario(f"s{si}",
                                  tuple(sorted(f"f{i}" for i in hit))))

    net = IntegratedNetwork(
        tuple(buses), tuple(lines), tuple(gens), tuple(comm_nodes),
        tuple(comm_links), control_switches, control_generators,
        resilience=ResilienceSpec(eta_critical=1.0, eta_total=0.5),
        upgrade_costs=costs,
    )
    report = validate(net)
    assert report.ok, report.violations
    return net, scenarios


def corridor_instance(n_leaves: int, n_scenarios: int, seed: int = 0,
                      tie_capacity: int = 2, damage_frac: float = 0.5,
                      harden_cost: float = 4.0, tie_cost: float = 1.0,
                      cost_jitter: float = 0.0,
                      premium_cost: float | None = None,
                      premium_frac: float = 0.5,
                      comm_frac: float = 0.0,
                      core_frac: float = 1.0):
    """Capacity-coupled restoration: cheap ties share one thermal corridor.

    Leaves are critical and fed from the hub; scenarios knock out subsets of
    feeds.  A damaged leaf is restored either by hardening its feed
    (expensive, independent) or by a cheap candidate tie through the ``mid``
    bus — but the single hub-mid trunk only carries ``tie_capacity`` leaves'
    worth of power, so each scenario can lean on at most that many ties.
    Scenario copies are capacity-respecting tie/harden patterns, the root
    relaxation mixes them fractionally, and equal-cost symmetry keeps the
    duals degenerate: plain column generation tails off badly here.

    ``cost_jitter`` perturbs each price by a uniform factor in
    [1 - jitter, 1 + jitter] (rounded to 0.05) so that near-optimal
    tie/harden patterns differ slightly in cost; that gives the incumbent
    budget row in the pricing problems something to cut.

    ``premium_cost`` switches a random ``premium_frac`` share of the leaves
    to that (higher) hardening price.  Within each tier the symmetry — and
    hence the dual degeneracy — survives, but a scenario copy that hardens
    a premium leaf where the optimum uses its cheap tie overshoots the
    incumbent cost, so the pricing budget row gets to reject it.
    """
    rng = random.Random(f"corridor:{seed}")
    premium = set()
    if premium_cost is not None:
        premium = set(rng.sample(range(n_leaves),
                                 round(premium_frac * n_leaves)))

    def _price(base: float) -> float:
        if cost_jitter <= 0.0:
            return base
        lo, hi = 1.0 - cost_jitter, 1.0 + cost_jitter
        return round(base * rng.uniform(lo, hi) / 0.05) * 0.05
    phases = ("a",)
    # sized so the trunk's inscribed-polygon limit admits exactly
    # ``tie_capacity`` leaves of 1.0 + j0.5 demand, with ~25% headroom
    trunk_mva = (tie_capacity + 0.25) * (1.0 ** 2 + 0.5 ** 2) ** 0.5
    buses = [Bus("hub", phases, {}, **_vbounds(phases)),
             Bus("mid", phases, {}, **_vbounds(phases))]
    lines = [simple_line("trunk", "hub", "mid", thermal=trunk_mva)]
    gens = [Generator("sub", "hub", phases, {"a": (1000.0, 1000.0)})]
    costs = {"new_edges": {}, "hardenings": {}}
    comm_nodes = [CommNode("cc", kind="control-center")]
    comm_links = []
    control_switches: dict[str, str] = {}

    for i in range(n_leaves):
        leaf = f"v{i}"
        buses.append(Bus(leaf, phases, {"a": (1.0, 0.5)}, critical=True,
                         **_vbounds(phases)))
        lines.append(simple_line(f"f{i}", "hub", leaf, hardenable=True))
        base = premium_cost if i in premium else harden_cost
        costs["hardenings"][f"f{i}"] = _price(base)
        lines.append(simple_line(f"n{i}", "mid", leaf, existing=False,
                                 switchable_existing=True))
        costs["new_edges"][f"n{i}"] = _price(tie_cost)
        node = CommNode(f"sp{i}", kind="switch-control-point")
        comm_nodes.append(node)
        comm_links.append(CommLink(f"ks{i}", "cc", node.id))
        control_switches[f"n{i}"] = node.id

    scenarios = []
    if comm_frac > 0.0:
        # Blackout mode: every storm levels a shared core of the feeder
        # (plus a varying fringe), and which tie *controls* survive also
        # varies.  Copies then carry most of the plan cost, which is what
        # lets the pricing budget row reject overspending patterns, while
        # the fringe keeps copy sizes uneven enough that sparse vertices
        # still matter.
        core = sorted(rng.sample(range(n_leaves),
                                 round(core_frac * n_leaves)))
        rest = [i for i in range(n_leaves) if i not in core]
        n_fringe = round(damage_frac * len(rest))
        k_dam = round(comm_frac * n_leaves)
        for si in range(n_scenarios):
            hit = core + rng.sample(rest, n_fringe)
            down = rng.sample(range(n_leaves), k_dam)
            scenarios.append(Scenario(
                f"s{si}",
                tuple(sorted(f"f{i}" for i in hit))
                + tuple(sorted(f"ks{i}" for i in down))))
    else:
        hit_size = max(tie_capacity + 1, round(damage_frac * n_leaves))
        for si in range(n_scenarios):
            hit = rng.sample(range(n_leaves), min(hit_size, n_leaves))
            scenarios.append(Scenario(f"s{si}",
                                      tuple(sorted(f"f{i}" for i in hit))))

    net = IntegratedNetwork(
        tuple(buses), tuple(lines), tuple(gens), tuple(comm_nodes),
        tuple(comm_links), control_switches, {"sub": "cc"},
        resilience=ResilienceSpec(eta_critical=1.0, eta_total=0.5),
        upgrade_costs=costs,
    )
    report = validate(net)
    assert report.ok, report.violations
    return net, scenarios
