"""Per-scenario operational polytopes and the extensive-form MIP.

A :class:`ScenarioBlock` encodes everything one damage scenario can do with a
given set of first-stage purchases: three-phase linearized power flow over
squared voltage magnitudes, switching and radiality, piecewise-linear thermal
caps, per-phase load-shedding floors, and a single-commodity connectivity flow
on the communication graph that gates every remotely-operated device.

Each block exposes ``catalog_cols``: one binary per upgrade-catalog entry,
aligned with the catalog order.  Those are the scenario's copy of the
first-stage vector — strictly the *usable* assets: an edge purchase bit, a
switch's open state, a hardening applied, a generator committed.  The
extensive form links every copy below a shared binary purchase vector, which
also makes feasibility monotone in the purchases (a scenario never has to use
what was bought).

Unified edge-existence logic (distribution lines and communication links):
an existing undamaged edge is simply present; a damaged edge is present iff
its hardening bit is on (never, when it is not hardenable); a candidate edge
is present iff its purchase bit is on, and a damaged candidate must be bought
hardened.  A communication link that rides on a distribution line has no bits
of its own: it follows the line's presence, plus the line's hardening when
the link alone was hit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSystem
from .lpbackend import (INFEASIBLE, OPTIMAL, SolverConfig,
                        confirm_big_m_hits, get_backend)
from .model import (CycleCatalog, IntegratedNetwork, Scenario,
                    enumerate_cycles)
from .result import PlanResult, trace_row, upgrades_from_vector

#: Positional phase indices behind the 120-degree rotation operator.
PHASE_POSITION = {"a": 2, "b": 1, "c": 0}

#: One clockwise third of a turn in the complex plane.
ROTATION = complex(math.cos(2.0 * math.pi / 3.0), -math.sin(2.0 * math.pi / 3.0))


class FormulationError(ValueError):
    pass


# ------------------------------------------------------------- coefficients
def lindistflow_coefficients(line) -> tuple[np.ndarray, np.ndarray]:
    """Squared-voltage drop coefficients of one line.

    Returns ``(coef_p, coef_q)``, each ``|phases| x |phases|``, such that the
    drop on phase ``k`` is ``sum_k' coef_p[k,k']*p[k'] + coef_q[k,k']*q[k']``
    under the equal-magnitude, 120-degree-separated phasor approximation.
    With the phase rotation ``g = ROTATION**(pos_k - pos_k')`` they are the
    real and imaginary parts of ``2 * g * (r + jx)``.
    """
    z = line.r + 1j * line.x
    pos = np.array([PHASE_POSITION[k] for k in line.phases])
    rot = ROTATION ** np.subtract.outer(pos, pos)
    m = 2.0 * rot * z
    return np.ascontiguousarray(m.real), np.ascontiguousarray(m.imag)


def thermal_polygon(segments: int) -> tuple[np.ndarray, float]:
    """Half-plane normals of the inscribed apparent-power polygon.

    Returns ``(A, rhs_factor)`` with ``A`` of shape ``(segments, 2)``: the
    point ``(p, q)`` respects the cap ``T`` iff ``A @ (p, q) <= rhs_factor*T``
    row-wise.  The rows are the chords between consecutive points of the
    radius-``T`` circle at angles ``2*pi*n/segments``, so the feasible region
    is the inscribed regular polygon (never outside the circle) and covers a
    ``segments*sin(2*pi/segments)/(2*pi)`` fraction of the disk area.
    """
    if segments < 3:
        raise FormulationError("thermal polygon needs at least 3 segments")
    n = np.arange(1, segments + 1)
    hi = 2.0 * np.pi * n / segments
    lo = 2.0 * np.pi * (n - 1) / segments
    a = np.column_stack([np.sin(hi) - np.sin(lo), -(np.cos(hi) - np.cos(lo))])
    return a, math.sin(2.0 * math.pi / segments)


def polygon_area_ratio(segments: int) -> float:
    """Fraction of the disk covered by the inscribed polygon."""
    return segments * math.sin(2.0 * math.pi / segments) / (2.0 * math.pi)


# A linear reference is either a column index (int) or a fixed value (float).
Ref = "int | float"


def _is_const(ref) -> bool:
    return isinstance(ref, float)


# ------------------------------------------------------------ scenario block
class ScenarioBlock:
    """All operational variables and rows of one scenario.

    Variables are created in the constructor (in deterministic order), rows by
    the ``build_*`` methods; :func:`build_scenario_polytope` runs them all.
    The block can own its constraint system or append into a shared one.
    """

    def __init__(self, net: IntegratedNetwork, scenario: Scenario,
                 cycles: CycleCatalog | None = None, prefix: str = "",
                 cs: ConstraintSystem | None = None):
        self.net = net
        self.scenario = scenario
        self.cycles = cycles if cycles is not None else enumerate_cycles(net)
        self.prefix = prefix
        self.cs = cs if cs is not None else ConstraintSystem(
            f"scenario[{scenario.id}]")
        self.damaged = set(scenario.damaged)
        self.base_rows = 0

        # Per-phase flow magnitude caps: what one edge can ever carry equals
        # at most everything served on that phase (radiality means no
        # circulation, and committed generation is absorbed by served load).
        self.m_p = {k: net.total_demand(k) for k in ("a", "b", "c")}
        self.m_q = {k: net.total_demand(k, reactive=True) for k in ("a", "b", "c")}

        self._make_catalog_vars()
        self._make_edge_refs()
        self._make_line_vars()
        self._make_bus_vars()
        self._make_gen_vars()
        self._make_comm_vars()

    # ------------------------------------------------------------- variables
    def _make_catalog_vars(self) -> None:
        self.catalog_cols: list[int] = []
        self.wcol: dict[tuple[str, str], int] = {}
        for entry in self.net.catalog.entries:
            j = self.cs.binary(f"{self.prefix}w.{entry.kind}.{entry.target}")
            self.catalog_cols.append(j)
            self.wcol[(entry.kind, entry.target)] = j

    def _presence(self, eid: str, existing: bool, hardenable: bool):
        """Presence reference of a stand-alone edge; records damage ties."""
        if existing:
            if eid not in self.damaged:
                return 1.0
            return self.wcol[("h", eid)] if hardenable else 0.0
        xcol = self.wcol[("x", eid)]
        if eid in self.damaged:
            if hardenable:
                self._ties.append((eid, xcol, self.wcol[("h", eid)]))
            else:
                self.cs.fix(xcol, 0.0)
        return xcol

    def _make_edge_refs(self) -> None:
        self._ties: list[tuple[str, int, int]] = []  # damaged: presence == h
        self.x_of: dict[str, Ref] = {}
        for line in self.net.lines:
            self.x_of[line.id] = self._presence(line.id, line.existing,
                                                line.hardenable)
        # Communication links: own bits, or the paired line's.
        self.comm_gates: dict[str, list[Ref]] = {}
        for cl in self.net.comm_links:
            if cl.paired_line is None:
                ref = self._presence(cl.id, cl.existing, cl.hardenable)
                self.x_of[cl.id] = ref
                gates = [ref]
            else:
                parent = self.net.line_by_id[cl.paired_line]
                gates = [self.x_of[parent.id]]
                if cl.id in self.damaged and parent.id not in self.damaged:
                    gates.append(self.wcol[("h", parent.id)]
                                 if parent.hardenable else 0.0)
            seen: list = []
            for g in gates:  # dedupe; int 1 and float 1.0 compare equal,
                if not any(type(s) is type(g) and s == g for s in seen):
                    seen.append(g)  # but a column is not a constant
            self.comm_gates[cl.id] = seen

    def _make_line_vars(self) -> None:
        cs, P = self.cs, self.prefix
        self.t_of: dict[str, Ref] = {}
        self.z_of: dict[str, int] = {}
        self.dir_p: dict[str, int] = {}
        self.dir_q: dict[str, int] = {}
        self.p_of: dict[tuple[str, str], int] = {}
        self.q_of: dict[tuple[str, str], int] = {}
        self.ptot_of: dict[str, int] = {}
        self.prev_of: dict[str, int] = {}
        for line in self.net.lines:
            e = line.id
            if line.switchable_candidate:
                self.t_of[e] = self.wcol[("t", e)]
            elif line.switchable_existing:
                self.t_of[e] = cs.binary(f"{P}t.{e}")
            else:
                self.t_of[e] = 0.0
            self.z_of[e] = cs.add_variable(f"{P}z.{e}", 0.0, 1.0)
            self.dir_p[e] = cs.binary(f"{P}dir.{e}")
            self.dir_q[e] = cs.binary(f"{P}dirq.{e}")
            for k in line.phases:
                self.p_of[(e, k)] = cs.add_variable(
                    f"{P}p.{e}.{k}", -self.m_p[k], self.m_p[k])
                self.q_of[(e, k)] = cs.add_variable(
                    f"{P}q.{e}.{k}", -self.m_q[k], self.m_q[k])
            if self._balances_phases(line):
                span = sum(self.m_p[k] for k in line.phases)
                self.ptot_of[e] = cs.add_variable(f"{P}ptot.{e}", -span, span)
                self.prev_of[e] = cs.add_variable(f"{P}prev.{e}", -span, span)

    def _balances_phases(self, line) -> bool:
        return math.isfinite(line.phase_variation) and len(line.phases) >= 2

    def _make_bus_vars(self) -> None:
        cs, P = self.cs, self.prefix
        self.v_of: dict[tuple[str, str], int] = {}
        self.dp_of: dict[tuple[str, str], int] = {}
        self.dq_of: dict[tuple[str, str], int] = {}
        for bus in self.net.buses:
            for k in bus.phases:
                self.v_of[(bus.id, k)] = cs.add_variable(
                    f"{P}v.{bus.id}.{k}", bus.vmin[k] ** 2, bus.vmax[k] ** 2)
                self.dp_of[(bus.id, k)] = cs.add_variable(
                    f"{P}dp.{bus.id}.{k}", 0.0, bus.demand_p(k))
                self.dq_of[(bus.id, k)] = cs.add_variable(
                    f"{P}dq.{bus.id}.{k}", 0.0, bus.demand_q(k))

    def _make_gen_vars(self) -> None:
        cs, P = self.cs, self.prefix
        self.u_of: dict[str, Ref] = {}
        self.gp_of: dict[tuple[str, str], int] = {}
        self.gq_of: dict[tuple[str, str], int] = {}
        for g in self.net.generators:
            self.u_of[g.id] = 1.0 if g.existing else self.wcol[("u", g.id)]
            for k in g.phases:
                self.gp_of[(g.id, k)] = cs.add_variable(
                    f"{P}gp.{g.id}.{k}", 0.0, g.cap_p(k))
                self.gq_of[(g.id, k)] = cs.add_variable(
                    f"{P}gq.{g.id}.{k}", 0.0, g.cap_q(k))

    def _make_comm_vars(self) -> None:
        cs, P = self.cs, self.prefix
        self.points = self.net.control_points()
        self.gamma_of: dict[str, int] = {}
        self.f_of: dict[str, int] = {}
        if not self.points:
            return
        self.m_comm = float(len(self.points))
        for n in self.points:
            self.gamma_of[n] = cs.add_variable(f"{P}gamma.{n}", 0.0, 1.0)
        for cl in self.net.comm_links:
            self.f_of[cl.id] = cs.add_variable(
                f"{P}cf.{cl.id}", -self.m_comm, self.m_comm)
        for aux_id, _cc in self.net.aux_links:
            self.f_of[aux_id] = cs.add_variable(f"{P}cf.{aux_id}", 0.0,
                                                self.m_comm)

    # ------------------------------------------------------------------ rows
    def _row(self, pairs, sense: str, rhs: float, name: str, **kw) -> None:
        """Add a row over references; constants fold into the rhs.

        A row whose references are all constants is dropped when trivially
        true and rejected as structurally inconsistent otherwise.
        """
        coeffs: dict[int, float] = {}
        for ref, c in pairs:
            if _is_const(ref):
                rhs -= ref * c
            else:
                coeffs[ref] = coeffs.get(ref, 0.0) + c
        if not coeffs:
            ok = {"<=": rhs >= -1e-9, ">=": rhs <= 1e-9,
                  "==": abs(rhs) <= 1e-9}[sense]
            if not ok:
                raise FormulationError(f"row {name}: constant row 0 {sense} {rhs}")
            return
        self.cs.add_row(coeffs, sense, rhs, name=name, **kw)

    def build_topology(self) -> "ScenarioBlock":
        """Switching, damage ties, and cycle-based radiality caps."""
        P = self.prefix
        for line in self.net.lines:
            e, x, t = line.id, self.x_of[line.id], self.t_of[line.id]
            self._row([(self.z_of[e], 1.0), (x, -1.0), (t, 1.0)], "==", 0.0,
                      f"{P}zdef.{e}")
            if not _is_const(t):
                self._row([(x, 1.0), (t, -1.0)], ">=", 0.0, f"{P}prec.{e}")
        for eid, xcol, hcol in self._ties:
            self._row([(xcol, 1.0), (hcol, -1.0)], "==", 0.0,
                      f"{P}rebuild.{eid}")

        pair_in_cycle = sorted({pair for cyc in self.cycles.cycles
                                for pair in cyc})
        self.y_of = {pair: self.cs.binary(f"{P}y.{pair[0]}|{pair[1]}")
                     for pair in pair_in_cycle}
        for ci, cyc in enumerate(self.cycles.cycles):
            self._row([(self.y_of[pair], 1.0) for pair in cyc], "<=",
                      float(len(cyc) - 1), f"{P}radial.{ci}")
        # At most one closed line per endpoint pair: two live parallels are
        # already a loop, whether or not the pair sits on a larger cycle.
        for pair, group in sorted(self.cycles.parallel_groups.items()):
            closed = [(self.z_of[eid], 1.0) for eid in group]
            if pair in self.y_of:
                self._row(closed + [(self.y_of[pair], -1.0)], "<=", 0.0,
                          f"{P}loopgate.{pair[0]}|{pair[1]}")
            elif len(group) >= 2:
                self._row(closed, "<=", 1.0,
                          f"{P}loopgate.{pair[0]}|{pair[1]}")
        return self

    def build_lindistflow(self) -> "ScenarioBlock":
        """Squared-voltage drops along energized lines (big-M released)."""
        P = self.prefix
        for line in self.net.lines:
            e = line.id
            cp, cq = lindistflow_coefficients(line)
            head, tail = line.from_bus, line.to_bus
            hb, tb = self.net.bus_by_id[head], self.net.bus_by_id[tail]
            z = self.z_of[e]
            for i, k in enumerate(line.phases):
                m = (max(hb.vmax[k], tb.vmax[k]) ** 2
                     - min(hb.vmin[k], tb.vmin[k]) ** 2)
                pairs = [(self.v_of[(head, k)], 1.0),
                         (self.v_of[(tail, k)], -1.0)]
                for j, kp in enumerate(line.phases):
                    pairs.append((self.p_of[(e, kp)], -cp[i, j]))
                    pairs.append((self.q_of[(e, kp)], -cq[i, j]))
                note = f"voltage window span across {head}/{tail}, phase {k}"
                self._row(pairs + [(z, m)], "<=", m, f"{P}vdrop_hi.{e}.{k}",
                          big_m=m, indicator=z, relaxed_at=0.0, note=note)
                self._row(pairs + [(z, -m)], ">=", -m, f"{P}vdrop_lo.{e}.{k}",
                          big_m=m, indicator=z, relaxed_at=0.0, note=note)
        return self

    def build_power_balance(self) -> "ScenarioBlock":
        """Per bus and phase: line flows in, minus out, plus generation,
        equals served demand (flows positive head-to-tail)."""
        P = self.prefix
        into: dict[str, list] = {b.id: [] for b in self.net.buses}
        out: dict[str, list] = {b.id: [] for b in self.net.buses}
        for line in self.net.lines:
            out[line.from_bus].append(line)
            into[line.to_bus].append(line)
        gens_at: dict[str, list] = {b.id: [] for b in self.net.buses}
        for g in self.net.generators:
            gens_at[g.bus].append(g)
        for bus in self.net.buses:
            for k in bus.phases:
                for flows, served, tag in ((self.p_of, self.dp_of, "p"),
                                           (self.q_of, self.dq_of, "q")):
                    pairs = [(flows[(l.id, k)], 1.0)
                             for l in into[bus.id] if k in l.phases]
                    pairs += [(flows[(l.id, k)], -1.0)
                              for l in out[bus.id] if k in l.phases]
                    gvar = self.gp_of if tag == "p" else self.gq_of
                    pairs += [(gvar[(g.id, k)], 1.0)
                              for g in gens_at[bus.id] if k in g.phases]
                    pairs.append((served[(bus.id, k)], -1.0))
                    self._row(pairs, "==", 0.0, f"{P}bal{tag}.{bus.id}.{k}")
        return self

    def build_direction_consistency(self) -> "ScenarioBlock":
        """One shared orientation bit per line (and one for reactive flow):
        all phases of a line agree on the flow sign."""
        P = self.prefix
        for line in self.net.lines:
            e = line.id
            for k in line.phases:
                for var, bit, m, tag in (
                        (self.p_of[(e, k)], self.dir_p[e], self.m_p[k], "p"),
                        (self.q_of[(e, k)], self.dir_q[e], self.m_q[k], "q")):
                    note = f"total served {tag}-load on phase {k}"
                    self._row([(var, 1.0), (bit, m)], "<=", m,
                              f"{P}dir{tag}_hi.{e}.{k}", big_m=m,
                              indicator=bit, relaxed_at=0.0, note=note)
                    self._row([(var, 1.0), (bit, m)], ">=", 0.0,
                              f"{P}dir{tag}_lo.{e}.{k}", big_m=m,
                              indicator=bit, relaxed_at=1.0, note=note)
        return self

    def build_phase_balance(self) -> "ScenarioBlock":
        """Keep per-phase real flow near the per-line mean on balance-limited
        lines (transformers), in either flow direction.

        With total flow ``ptot`` and its reverse-direction share
        ``prev = dir * ptot`` (McCormick over the orientation bit), the band
        ``(1-beta)*ptot + 2*beta*prev <= n*p_k <= (1+beta)*ptot - 2*beta*prev``
        reads ``(1±beta)`` as written for forward flow and swaps the two
        extremes for reverse flow, where the inequality senses flip.
        """
        P = self.prefix
        for line in self.net.lines:
            if line.id not in self.ptot_of:
                continue
            e, beta, n = line.id, line.phase_variation, float(len(line.phases))
            tot, rev, bit = self.ptot_of[e], self.prev_of[e], self.dir_p[e]
            span = sum(self.m_p[k] for k in line.phases)
            self._row([(tot, 1.0)] + [(self.p_of[(e, k)], -1.0)
                                      for k in line.phases],
                      "==", 0.0, f"{P}ptot.{e}")
            note = f"span of total real flow on {e}"
            self._row([(rev, 1.0), (bit, -span)], "<=", 0.0, f"{P}mcub.{e}",
                      big_m=span, indicator=bit, relaxed_at=1.0, note=note)
            self._row([(rev, 1.0), (bit, span)], ">=", 0.0, f"{P}mclb.{e}",
                      big_m=span, indicator=bit, relaxed_at=1.0, note=note)
            self._row([(rev, 1.0), (tot, -1.0), (bit, -span)], ">=", -span,
                      f"{P}mctie_lo.{e}", big_m=span, indicator=bit,
                      relaxed_at=0.0, note=note)
            self._row([(rev, 1.0), (tot, -1.0), (bit, span)], "<=", span,
                      f"{P}mctie_hi.{e}", big_m=span, indicator=bit,
                      relaxed_at=0.0, note=note)
            for k in line.phases:
                pk = self.p_of[(e, k)]
                self._row([(pk, n), (tot, -(1.0 - beta)), (rev, -2.0 * beta)],
                          ">=", 0.0, f"{P}phbal_lo.{e}.{k}")
                self._row([(pk, n), (tot, -(1.0 + beta)), (rev, 2.0 * beta)],
                          "<=", 0.0, f"{P}phbal_hi.{e}.{k}")
        return self

    def build_thermal_pwl(self) -> "ScenarioBlock":
        """Inscribed-polygon apparent-power caps, zeroed on open lines."""
        P = self.prefix
        segs = self.net.resilience.pwl_segments
        a, rhs_factor = thermal_polygon(segs)
        for line in self.net.lines:
            e, z = line.id, self.z_of[line.id]
            for k in line.phases:
                p, q = self.p_of[(e, k)], self.q_of[(e, k)]
                cap = line.thermal[k]
                for n in range(segs):
                    self._row([(p, a[n, 0]), (q, a[n, 1])], "<=",
                              rhs_factor * cap, f"{P}cap.{e}.{k}.{n}")
                for var, m, tag in ((p, self.m_p[k], "p"),
                                    (q, self.m_q[k], "q")):
                    note = f"total served {tag}-load on phase {k}"
                    self._row([(var, 1.0), (z, -m)], "<=", 0.0,
                              f"{P}{tag}gate_hi.{e}.{k}", big_m=m,
                              indicator=z, relaxed_at=1.0, note=note)
                    self._row([(var, 1.0), (z, m)], ">=", 0.0,
                              f"{P}{tag}gate_lo.{e}.{k}", big_m=m,
                              indicator=z, relaxed_at=1.0, note=note)
        return self

    def build_generation_resiliency(self) -> "ScenarioBlock":
        """Commitment-capped dispatch plus per-phase service floors."""
        P, net = self.prefix, self.net
        for g in net.generators:
            u = self.u_of[g.id]
            if _is_const(u):
                continue  # always-on unit: capacity bounds suffice
            for k in g.phases:
                self._row([(self.gp_of[(g.id, k)], 1.0), (u, -g.cap_p(k))],
                          "<=", 0.0, f"{P}commit_p.{g.id}.{k}")
                self._row([(self.gq_of[(g.id, k)], 1.0), (u, -g.cap_q(k))],
                          "<=", 0.0, f"{P}commit_q.{g.id}.{k}")
        eta_c = net.resilience.eta_critical
        eta_t = net.resilience.eta_total
        for k in ("a", "b", "c"):
            crit = [b for b in net.buses if b.critical and k in b.phases]
            every = [b for b in net.buses if k in b.phases]
            floors = (
                ("crit_p", crit, self.dp_of,
                 eta_c * sum(b.demand_p(k) for b in crit), True),
                ("total_p", every, self.dp_of,
                 eta_t * sum(b.demand_p(k) for b in every), True),
                ("crit_q", crit, self.dq_of,
                 eta_c * sum(b.demand_q(k) for b in crit), False),
                ("total_q", every, self.dq_of,
                 eta_t * sum(b.demand_q(k) for b in every), False),
            )
            for tag, buses, served, rhs, always in floors:
                if not buses or (not always and rhs <= 0.0):
                    continue
                self._row([(served[(b.id, k)], 1.0) for b in buses],
                          ">=", rhs, f"{P}floor_{tag}.{k}")
        return self

    def build_comm_connectivity(self) -> "ScenarioBlock":
        """Single-commodity feasibility flow from a synthesized source through
        the control centers; a device operates only when its control point
        absorbs one unit."""
        P, net = self.prefix, self.net
        if not self.points:
            return self
        m = self.m_comm
        aux_at: dict[str, list[str]] = {}
        for aux_id, cc in net.aux_links:
            aux_at.setdefault(cc, []).append(aux_id)
        into: dict[str, list[str]] = {n.id: [] for n in net.comm_nodes}
        out: dict[str, list[str]] = {n.id: [] for n in net.comm_nodes}
        for cl in net.comm_links:
            out[cl.from_node].append(cl.id)
            into[cl.to_node].append(cl.id)
        for node in net.comm_nodes:
            pairs = [(self.f_of[l], 1.0) for l in into[node.id]]
            pairs += [(self.f_of[l], -1.0) for l in out[node.id]]
            pairs += [(self.f_of[a], 1.0) for a in aux_at.get(node.id, [])]
            if node.id in self.gamma_of:
                pairs.append((self.gamma_of[node.id], -1.0))
            self._row(pairs, "==", 0.0, f"{P}cbal.{node.id}")
        pairs = [(self.f_of[a], 1.0) for a, _ in net.aux_links]
        pairs += [(g, -1.0) for g in self.gamma_of.values()]
        self._row(pairs, "==", 0.0, f"{P}cbal{net.dummy_node_id}")

        for cl in net.comm_links:
            f = self.f_of[cl.id]
            for gi, gate in enumerate(self.comm_gates[cl.id]):
                if _is_const(gate):
                    if gate == 0.0:
                        self.cs.set_bounds(f, 0.0, 0.0)
                    continue
                note = f"one unit per controlled device ({int(m)} devices)"
                self._row([(f, 1.0), (gate, -m)], "<=", 0.0,
                          f"{P}cgate_hi.{cl.id}.{gi}", big_m=m,
                          indicator=gate, relaxed_at=1.0, note=note)
                self._row([(f, 1.0), (gate, m)], ">=", 0.0,
                          f"{P}cgate_lo.{cl.id}.{gi}", big_m=m,
                          indicator=gate, relaxed_at=1.0, note=note)

        for line in net.lines:
            if not line.switchable:
                continue
            point = net.control_switches[line.id]
            self._row([(self.t_of[line.id], 1.0),
                       (self.gamma_of[point], -1.0)],
                      "<=", 0.0, f"{P}ctrl_t.{line.id}")
        for g in net.generators:
            if g.existing:
                continue
            point = net.control_generators[g.id]
            self._row([(self.u_of[g.id], 1.0), (self.gamma_of[point], -1.0)],
                      "<=", 0.0, f"{P}ctrl_u.{g.id}")
        return self

    def build(self) -> "ScenarioBlock":
        self.build_topology()
        self.build_lindistflow()
        self.build_power_balance()
        self.build_direction_consistency()
        self.build_phase_balance()
        self.build_thermal_pwl()
        self.build_generation_resiliency()
        self.build_comm_connectivity()
        self.base_rows = len(self.cs.rows)
        return self

    # -------------------------------------------------------------- extracts
    def first_stage_values(self, x) -> np.ndarray:
        """0/1 copy vector of this block in a solution vector."""
        return np.array([round(float(x[j])) for j in self.catalog_cols])

    def restricted_system(self, w) -> ConstraintSystem:
        """Clone with the copy bits not purchased under ``w`` pinned to zero.

        Purchased bits stay free: a scenario may always leave an asset
        unused, so feasibility under ``w`` means feasibility of this clone.
        """
        out = self.cs.clone()
        for j, bit in zip(self.catalog_cols, w):
            if bit < 0.5:
                out.fix(j, 0.0)
        return out


def build_scenario_polytope(net: IntegratedNetwork, scenario: Scenario,
                            cycles: CycleCatalog | None = None,
                            prefix: str = "",
                            cs: ConstraintSystem | None = None) -> ScenarioBlock:
    """One scenario's operational polytope with every row family installed."""
    return ScenarioBlock(net, scenario, cycles=cycles, prefix=prefix,
                         cs=cs).build()


# ------------------------------------------------------------ extensive form
@dataclass
class ExtensiveForm:
    cs: ConstraintSystem
    w_cols: list[int]
    blocks: list[ScenarioBlock]
    link_rows: list[list[int]]  # per scenario, per catalog entry

    def first_stage_values(self, x) -> np.ndarray:
        return np.array([round(float(x[j])) for j in self.w_cols])


def build_extensive_form(net: IntegratedNetwork, scenarios: list[Scenario],
                         cycles: CycleCatalog | None = None) -> ExtensiveForm:
    """Shared purchase binaries over every scenario's operational copy.

    Copies are linked below the purchases (``w >= copy`` per coordinate), so
    a scenario may ignore bought assets; only the shared vector is billed.
    """
    if not scenarios:
        raise FormulationError("at least one scenario is required")
    cycles = cycles if cycles is not None else enumerate_cycles(net)
    cs = ConstraintSystem(f"extensive[{len(scenarios)}]")
    w_cols = [cs.binary(f"w.{e.kind}.{e.target}")
              for e in net.catalog.entries]
    blocks = [build_scenario_polytope(net, s, cycles=cycles,
                                      prefix=f"s:{s.id}.", cs=cs)
              for s in scenarios]
    link_rows = []
    for blk in blocks:
        rows = []
        for k, entry in enumerate(net.catalog.entries):
            rows.append(cs.add_row({w_cols[k]: 1.0, blk.catalog_cols[k]: -1.0},
                                   ">=", 0.0,
                                   name=f"link.{blk.scenario.id}.{entry.kind}"
                                        f".{entry.target}"))
        link_rows.append(rows)
    cs.set_objective(list(zip(w_cols, net.catalog.costs)))
    return ExtensiveForm(cs, w_cols, blocks, link_rows)


def solve_extensive(net: IntegratedNetwork, scenarios: list[Scenario],
                    config: SolverConfig | None = None,
                    gap_tol: float | None = None,
                    time_limit: float | None = None) -> PlanResult:
    """Solve the monolithic MIP; on infeasibility, name a witness scenario."""
    tol = gap_tol if gap_tol is not None else net.resilience.gap_tolerance
    backend = get_backend(config)
    cycles = enumerate_cycles(net)
    ext = build_extensive_form(net, scenarios, cycles=cycles)
    res = backend.solve_mip(ext.cs, time_limit=time_limit, gap_tol=tol)
    result = PlanResult(algorithm="extensive", status=res.status,
                        stats={"rows": len(ext.cs.rows),
                               "variables": ext.cs.n_variables,
                               "wall_time": res.wall_time})
    if res.x is not None:
        w = ext.first_stage_values(res.x)
        result.objective = float(net.catalog.costs @ w)
        result.upper_bound = result.objective
        result.lower_bound = (result.objective if res.status == OPTIMAL
                              else res.bound)
        result.upgrades = upgrades_from_vector(net.catalog, w)
        if ext.cs.binding_big_m_rows(res.x):
            audit = confirm_big_m_hits(ext.cs, res.x, backend)
            if audit:
                result.stats["big_m_audit"] = audit
    elif res.status == INFEASIBLE:
        result.witness = find_infeasible_scenario(net, scenarios, cycles,
                                                  backend, time_limit)
    result.trace = [trace_row(0, "extensive", result.upper_bound,
                              result.lower_bound, 0)]
    return result


def find_infeasible_scenario(net: IntegratedNetwork,
                             scenarios: list[Scenario],
                             cycles: CycleCatalog | None = None,
                             backend=None,
                             time_limit: float | None = None) -> str | None:
    """First scenario whose polytope is empty even with every upgrade bought.

    The linked problem is infeasible exactly when some scenario is (the
    shared vector can always rise to the componentwise maximum), so this
    yields a genuine witness whenever one exists.
    """
    backend = backend if backend is not None else get_backend()
    cycles = cycles if cycles is not None else enumerate_cycles(net)
    for s in scenarios:
        blk = build_scenario_polytope(net, s, cycles=cycles)
        res = backend.solve_mip(blk.cs, time_limit=time_limit)
        if res.status == INFEASIBLE:
            return s.id
    return None
