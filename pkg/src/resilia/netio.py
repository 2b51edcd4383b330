"""Native file format: canonical JSON loading and saving.

The on-disk documents are validated twice: structurally against the JSON
Schemas shipped in ``resilia/schemas`` (field-level context on failure), then
semantically via :func:`resilia.model.validate`.  Saving always produces the
canonical form — keys sorted, two-space indent, entities sorted by id, all
defaults materialized, trailing newline — so ``save(load(f))`` is
byte-identical for canonicalized files.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import jsonschema
import numpy as np

from . import model
from .model import (Bus, CommLink, CommNode, Generator, IntegratedNetwork,
                    Line, ResilienceSpec, Scenario)


class NetworkFormatError(ValueError):
    """Malformed document: JSON, schema, or reference errors."""


class NetworkValidationError(ValueError):
    """Structurally parseable but violates model invariants."""

    def __init__(self, report: model.ValidationReport):
        super().__init__(str(report))
        self.report = report


def _schema(name: str) -> dict:
    with resources.files("resilia.schemas").joinpath(name).open("rb") as fh:
        return json.load(fh)


def _check_schema(doc, schema_name: str, path: str) -> None:
    try:
        jsonschema.validate(doc, _schema(schema_name))
    except jsonschema.ValidationError as exc:
        raise NetworkFormatError(
            f"{path}: {exc.json_path}: {exc.message}") from exc


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _phase_tuple(s: str) -> tuple[str, ...]:
    return tuple(sorted(s))


def _phase_map(value, phases, default) -> dict[str, float]:
    if isinstance(value, dict):
        return {k: float(v) for k, v in value.items()}
    scalar = default if value is None else float(value)
    return {k: scalar for k in phases}


def _pairs(value, phases) -> dict[str, tuple[float, float]]:
    out = {k: (0.0, 0.0) for k in phases}
    for k, pq in (value or {}).items():
        out[k] = (float(pq[0]), float(pq[1]))
    return out


# ------------------------------------------------------------------- network
def load_network(path, strict: bool = True) -> IntegratedNetwork:
    doc = _read_json(path)
    _check_schema(doc, "network.schema.json", str(path))

    z_scale = 1.0
    base = doc.get("base")
    if base and base["impedance_unit"] == "ohm":
        z_scale = base["mva"] / base["kv"] ** 2

    buses = []
    for b in doc["buses"]:
        phases = _phase_tuple(b["phases"])
        buses.append(Bus(
            id=b["id"], phases=phases,
            demand=_pairs(b.get("demand"), phases),
            critical=bool(b.get("critical", False)),
            vmin=_phase_map(b.get("vmin"), phases, 0.9),
            vmax=_phase_map(b.get("vmax"), phases, 1.1)))

    lines = []
    for e in doc["lines"]:
        phases = _phase_tuple(e["phases"])
        is_tr = bool(e.get("is_transformer", False))
        beta = e.get("phase_variation")
        if beta is None:
            beta = 0.15 if is_tr else math.inf
        lines.append(Line(
            id=e["id"], from_bus=e["from"], to_bus=e["to"], phases=phases,
            r=np.asarray(e["resistance"], dtype=float) * z_scale,
            x=np.asarray(e["reactance"], dtype=float) * z_scale,
            thermal=_phase_map(e["thermal_limit"], phases, 0.0),
            is_transformer=is_tr, phase_variation=float(beta),
            existing=bool(e.get("existing", True)),
            switchable_existing=bool(e.get("has_switch", False)),
            switchable_candidate=bool(e.get("candidate_switch", False)),
            hardenable=bool(e.get("hardenable", False)),
            length_miles=(None if e.get("length_miles") is None
                          else float(e["length_miles"]))))

    gens = []
    for g in doc["generators"]:
        phases = _phase_tuple(g["phases"])
        gens.append(Generator(
            id=g["id"], bus=g["bus"], phases=phases,
            capacity=_pairs(g.get("capacity"), phases),
            existing=bool(g.get("existing", True))))

    nodes = [CommNode(n["id"], n["kind"]) for n in doc["comm_nodes"]]
    links = [CommLink(
        id=c["id"], from_node=c["from"], to_node=c["to"],
        existing=bool(c.get("existing", True)),
        hardenable=bool(c.get("hardenable", False)),
        paired_line=c.get("paired_line")) for c in doc["comm_links"]]

    res = doc.get("resilience", {})
    spec = ResilienceSpec(
        eta_critical=float(res.get("eta_critical", 0.98)),
        eta_total=float(res.get("eta_total", 0.5)),
        pwl_segments=int(res.get("pwl_segments", 28)),
        gap_tolerance=float(res.get("gap_tolerance", 0.001)))

    net = IntegratedNetwork(
        buses=tuple(sorted(buses, key=lambda b: b.id)),
        lines=tuple(sorted(lines, key=lambda e: e.id)),
        generators=tuple(sorted(gens, key=lambda g: g.id)),
        comm_nodes=tuple(sorted(nodes, key=lambda n: n.id)),
        comm_links=tuple(sorted(links, key=lambda c: c.id)),
        control_switches=dict(doc["control_map"]["switches"]),
        control_generators=dict(doc["control_map"]["generators"]),
        resilience=spec,
        upgrade_costs={k: dict(v) for k, v in doc["costs"].items()})

    if strict:
        report = model.validate(net)
        if not report.ok:
            raise NetworkValidationError(report)
    return net


def network_document(net: IntegratedNetwork) -> dict:
    """Canonical (fully materialized) document for ``net``."""
    def pm(d: dict[str, float]) -> dict:
        return {k: float(v) for k, v in sorted(d.items())}

    def pairs(d: dict[str, tuple[float, float]], phases) -> dict:
        full = {k: (0.0, 0.0) for k in phases} | dict(d)
        return {k: [float(p), float(q)] for k, (p, q) in sorted(full.items())}

    doc = {
        "schema_version": 1,
        "buses": [{
            "id": b.id, "phases": "".join(b.phases), "demand": pairs(b.demand, b.phases),
            "critical": b.critical, "vmin": pm(b.vmin), "vmax": pm(b.vmax),
        } for b in sorted(net.buses, key=lambda b: b.id)],
        "lines": [{
            "id": e.id, "from": e.from_bus, "to": e.to_bus,
            "phases": "".join(e.phases),
            "resistance": [[float(v) for v in row] for row in e.r],
            "reactance": [[float(v) for v in row] for row in e.x],
            "thermal_limit": pm(e.thermal), "is_transformer": e.is_transformer,
            "phase_variation": (None if math.isinf(e.phase_variation)
                                else float(e.phase_variation)),
            "existing": e.existing, "has_switch": e.switchable_existing,
            "candidate_switch": e.switchable_candidate,
            "hardenable": e.hardenable, "length_miles": e.length_miles,
        } for e in sorted(net.lines, key=lambda e: e.id)],
        "generators": [{
            "id": g.id, "bus": g.bus, "phases": "".join(g.phases),
            "capacity": pairs(g.capacity, g.phases), "existing": g.existing,
        } for g in sorted(net.generators, key=lambda g: g.id)],
        "comm_nodes": [{"id": n.id, "kind": n.kind}
                       for n in sorted(net.comm_nodes, key=lambda n: n.id)],
        "comm_links": [{
            "id": c.id, "from": c.from_node, "to": c.to_node,
            "existing": c.existing, "hardenable": c.hardenable,
            "paired_line": c.paired_line,
        } for c in sorted(net.comm_links, key=lambda c: c.id)],
        "control_map": {
            "switches": dict(sorted(net.control_switches.items())),
            "generators": dict(sorted(net.control_generators.items())),
        },
        "costs": {section: dict(sorted(
            (t, float(v)) for t, v in net.upgrade_costs.get(section, {}).items()))
            for section in ("new_edges", "new_switches", "hardenings",
                            "new_generators")},
        "resilience": {
            "eta_critical": net.resilience.eta_critical,
            "eta_total": net.resilience.eta_total,
            "pwl_segments": net.resilience.pwl_segments,
            "gap_tolerance": net.resilience.gap_tolerance,
        },
    }
    return doc


def _dump(doc: dict, path) -> None:
    text = json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def save_network(net: IntegratedNetwork, path) -> None:
    _dump(network_document(net), path)


# ----------------------------------------------------------------- scenarios
def load_scenarios(path, network: IntegratedNetwork | None = None) -> list[Scenario]:
    doc = _read_json(path)
    _check_schema(doc, "scenarios.schema.json", str(path))
    scenarios = [Scenario(s["id"], tuple(sorted(set(s["damaged_edges"]))))
                 for s in doc["scenarios"]]
    if network is not None:
        report = model.validate_scenarios(network, scenarios)
        if not report.ok:
            raise NetworkValidationError(report)
    return scenarios


def save_scenarios(scenarios: list[Scenario], path) -> None:
    doc = {
        "schema_version": 1,
        "scenarios": [{"id": s.id, "damaged_edges": sorted(s.damaged)}
                      for s in sorted(scenarios, key=lambda s: s.id)],
    }
    _dump(doc, path)
