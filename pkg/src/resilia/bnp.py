"""Branch-and-price over scenario copies of the purchase vector.

The master LP carries the purchase vector ``w`` (continuous, nonnegative,
deliberately without upper bounds) plus one convex-combination weight per
pooled scenario copy; linking rows keep ``w`` above every scenario's mixture.
Pricing solves one scenario polytope as a MIP under the linking-row duals and
returns a new copy when its reduced cost ``y.w_hat - sigma`` is negative.

Key mechanics, each individually switchable:

* **Pessimistic pricing** (phase 1): coordinates the master currently leaves
  at zero get their first-stage cost, net of the dual credit already
  collected, added to the pricing objective, steering early columns away
  from purchases the rest of the portfolio will not share.  A heuristic
  warm-up only — proven bounds come from the standard phase.
* **Incumbent cut**: once an integer master gives an upper bound, pricing
  may discard copies costing more than it; a copy of any improving plan is
  never cut off.
* **Lexicographic pricing**: a second stage re-optimizes toward the sparsest
  copy among the (near-)optimal ones, which strengthens dominance.
* **Dominance cuts**: every pooled copy ``w'`` adds ``sum_{k in supp(w')}
  w_k <= |supp(w')| - 1`` to its scenario's pricing problem.  Anything the
  cut removes is dominated by a pooled column whose reduced cost is already
  nonnegative, so pricing exhaustion still certifies the true relaxation
  value.  A pricing problem emptied by these cuts means "no improving copy
  anywhere", not infeasibility — the code re-probes without the cuts to tell
  the two apart.
* **Dual bound**: every standard sweep yields the bound ``sum_s sigma_s +
  sum_s min(rc_s, 0)``, valid in every mode because it uses only dual
  feasibility of the ``w`` columns, nonnegativity of the linking duals, and
  the pool's nonnegative reduced costs — never strong duality of a
  stabilized objective.
* **Boxstep stabilization** (optional): bounded slack pairs on the linking
  rows, billed at the dual center plus/minus a half-width, confine the duals
  to a moving box; the box is recentered whenever the dual bound improves
  and the slacks are dropped before any convergence claim.  With the slack
  budget at zero the iterates coincide with plain column generation.

Branching fixes a fractional purchase coordinate.  A zero-fix masks pool
columns using that coordinate and pins it inside pricing; a one-fix only
raises the master bound (copies may still skip the asset).  Candidates are
scored by strong branching over the masked pool alone — no pricing, and the
scores are never used to prune.  Nodes run standard-phase column generation
with the inherited pool and are pruned against the incumbent via the dual
bound; depth-first, cheaper child first.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintSystem
from .formulation import ScenarioBlock, build_scenario_polytope
from .lpbackend import (INFEASIBLE, NUMERICAL_FAILURE, OPTIMAL, TIME_LIMIT,
                        SolverConfig, get_backend)
from .model import IntegratedNetwork, Scenario, enumerate_cycles
from .result import PlanResult, trace_row, upgrades_from_vector

INTEGRALITY_TOL = 1e-6


@dataclass
class BnpOptions:
    pessimistic: bool = True
    optcut: bool = True
    lexi: bool = True
    stabilized: bool = False
    per_scenario_pessimistic: bool = False
    stab_weight: float = 1.0
    stab_delta: float = 0.05
    gap_tol: float | None = None  # default: the network's gap tolerance
    rc_tol: float = 1e-8
    lexi_band: float = 1e-7
    integer_every: int = 10
    phase1_max_iters: int = 200
    max_iters: int = 100_000
    time_limit: float | None = None


class BnpError(RuntimeError):
    pass


class _TimeUp(Exception):
    pass


# ----------------------------------------------------------------- pricing
@dataclass
class _Priced:
    status: str  # "column" | "exhausted" | "infeasible" | other backend status
    bits: tuple[int, ...] | None = None
    value: float | None = None  # stage-1 optimum of the weight objective


class PricingProblem:
    """One scenario's copy generator with persistent dominance cuts."""

    def __init__(self, block: ScenarioBlock, costs: np.ndarray, backend):
        self.block = block
        self.costs = costs
        self.backend = backend
        self.cut_supports: list[tuple[int, ...]] = []
        self.solves = 0

    def add_cut(self, bits) -> None:
        supp = tuple(k for k, b in enumerate(bits) if b)
        if supp not in self.cut_supports:
            self.cut_supports.append(supp)

    def _overlay(self, fixed_zero, optcut_rhs, with_cuts) -> ConstraintSystem:
        cs = self.block.cs.clone()
        cols = self.block.catalog_cols
        for k in fixed_zero:
            cs.fix(cols[k], 0.0)
        if optcut_rhs is not None:
            cs.add_row({cols[k]: c for k, c in enumerate(self.costs)
                        if c != 0.0}, "<=", optcut_rhs, name="optcut")
        if with_cuts:
            for n, supp in enumerate(self.cut_supports):
                cs.add_row({cols[k]: 1.0 for k in supp}, "<=",
                           float(len(supp) - 1), name=f"nodup{n}")
        return cs

    def solve(self, weights, fixed_zero=(), optcut_rhs=None, lexi=True,
              lexi_band=1e-7, time_limit=None) -> _Priced:
        cols = self.block.catalog_cols
        objective = {cols[k]: float(weights[k]) for k in range(len(cols))
                     if weights[k] != 0.0}
        cs = self._overlay(fixed_zero, optcut_rhs, True)
        cs.set_objective(objective)
        res = self.backend.solve_mip(cs, time_limit=time_limit)
        self.solves += 1
        if res.status == INFEASIBLE:
            # Distinguish "every copy is dominated" from a truly empty
            # polytope under the current fixings / incumbent cut.
            bare = self._overlay(fixed_zero, optcut_rhs, False)
            probe = self.backend.solve_mip(bare, time_limit=time_limit)
            self.solves += 1
            if probe.status == OPTIMAL:
                return _Priced("exhausted")
            return _Priced("infeasible" if probe.status == INFEASIBLE
                           else probe.status)
        if res.status != OPTIMAL:
            return _Priced(res.status)
        value = float(res.objective)
        best = res
        if lexi:
            cs.add_row(objective, "<=", value + lexi_band, name="band_hi")
            cs.add_row(objective, ">=", value - lexi_band, name="band_lo")
            cs.set_objective({j: 1.0 for j in cols})
            sparse = self.backend.solve_mip(cs, time_limit=time_limit)
            self.solves += 1
            if sparse.status == OPTIMAL:
                best = sparse
        bits = tuple(int(b) for b in self.block.first_stage_values(best.x))
        return _Priced("column", bits, value)


# ------------------------------------------------------------------- master
@dataclass
class _MasterLP:
    status: str
    objective: float | None = None
    w: np.ndarray | None = None
    y: np.ndarray | None = None  # (scenarios, m) linking duals, >= 0
    sigma: np.ndarray | None = None  # per-scenario convexity duals


class Master:
    """Restricted master over the shared column pool."""

    def __init__(self, costs: np.ndarray, n_scenarios: int, backend):
        self.costs = costs
        self.m = len(costs)
        self.n_scenarios = n_scenarios
        self.backend = backend
        self.pool: list[list[tuple[int, ...]]] = [[] for _ in range(n_scenarios)]
        self.centers = np.zeros((n_scenarios, self.m))

    def add_column(self, s: int, bits: tuple[int, ...]) -> bool:
        if bits in self.pool[s]:
            return False
        self.pool[s].append(bits)
        return True

    def unmasked(self, s: int, fixed_zero: frozenset[int]) -> list[int]:
        return [j for j, bits in enumerate(self.pool[s])
                if all(bits[k] == 0 for k in fixed_zero)]

    def _base(self, fixings: dict[int, int], integral: bool):
        cs = ConstraintSystem("master")
        wcols = []
        for k in range(self.m):
            lb = 1.0 if fixings.get(k) == 1 else 0.0
            if integral:
                wcols.append(cs.add_variable(f"w.{k}", lb, 1.0, integer=True))
            else:
                wcols.append(cs.add_variable(f"w.{k}", lb, math.inf))
        fixed_zero = frozenset(k for k, v in fixings.items() if v == 0)
        lam: list[list[int]] = []
        for s in range(self.n_scenarios):
            usable = self.unmasked(s, fixed_zero)
            if not usable:
                return None, None, None, None
            lam.append([(j, cs.add_variable(f"l.{s}.{j}", 0.0,
                                            1.0 if integral else math.inf))
                        for j in usable])
        return cs, wcols, lam, fixed_zero

    def solve_lp(self, fixings: dict[int, int], stab_eps: float = 0.0,
                 stab_delta: float = 0.0) -> _MasterLP:
        cs, wcols, lam, _ = self._base(fixings, integral=False)
        if cs is None:
            return _MasterLP(INFEASIBLE)
        objective = {wcols[k]: float(self.costs[k]) for k in range(self.m)}
        link_rows = np.zeros((self.n_scenarios, self.m), dtype=int)
        conv_rows = np.zeros(self.n_scenarios, dtype=int)
        for s in range(self.n_scenarios):
            for k in range(self.m):
                pairs = [(wcols[k], 1.0)]
                pairs += [(col, -float(self.pool[s][j][k]))
                          for j, col in lam[s] if self.pool[s][j][k]]
                if stab_eps > 0.0:
                    lo = cs.add_variable(f"g-.{s}.{k}", 0.0, stab_eps)
                    hi = cs.add_variable(f"g+.{s}.{k}", 0.0, stab_eps)
                    pairs += [(lo, 1.0), (hi, -1.0)]
                    objective[lo] = self.centers[s, k] + stab_delta
                    objective[hi] = -(self.centers[s, k] - stab_delta)
                link_rows[s, k] = cs.add_row(pairs, ">=", 0.0,
                                             name=f"link.{s}.{k}")
            conv_rows[s] = cs.add_row([(col, 1.0) for _, col in lam[s]],
                                      "==", 1.0, name=f"conv.{s}")
        cs.set_objective(objective)
        res = self.backend.solve_lp(cs)
        if res.status != OPTIMAL:
            return _MasterLP(res.status)
        y = np.maximum(res.duals[link_rows], 0.0)
        sigma = res.duals[conv_rows]
        return _MasterLP(OPTIMAL, float(res.objective),
                         np.asarray(res.x)[wcols], y, sigma)

    def solve_ip(self, gap_tol: float, time_limit=None):
        """Integer purchases over the full pool; any optimum is a real plan."""
        cs, wcols, lam, _ = self._base({}, integral=True)
        cs.set_objective({wcols[k]: float(self.costs[k])
                          for k in range(self.m)})
        for s in range(self.n_scenarios):
            for k in range(self.m):
                pairs = [(wcols[k], 1.0)]
                pairs += [(col, -float(self.pool[s][j][k]))
                          for j, col in lam[s] if self.pool[s][j][k]]
                cs.add_row(pairs, ">=", 0.0, name=f"link.{s}.{k}")
            cs.add_row([(col, 1.0) for _, col in lam[s]], "==", 1.0,
                       name=f"conv.{s}")
        res = self.backend.solve_mip(cs, gap_tol=gap_tol,
                                     time_limit=time_limit)
        if res.status != OPTIMAL:
            return None
        w = tuple(int(round(float(res.x[j]))) for j in wcols)
        return float(self.costs @ w) if self.m else 0.0, w


# -------------------------------------------------------------- the solver
@dataclass
class _Node:
    fixings: dict[int, int]
    inherited_lb: float
    depth: int


@dataclass
class _CgOutcome:
    status: str  # "converged" | "exhausted" | "dead" | "limit" | "failure"
    lb: float = -math.inf
    lp_obj: float | None = None
    w: np.ndarray | None = None


class BranchAndPrice:
    def __init__(self, net: IntegratedNetwork, scenarios: list[Scenario],
                 config: SolverConfig | None = None,
                 options: BnpOptions | None = None):
        if not scenarios:
            raise ValueError("at least one scenario is required")
        self.net = net
        self.scenarios = list(scenarios)
        self.options = options or BnpOptions()
        self.tol = (self.options.gap_tol if self.options.gap_tol is not None
                    else net.resilience.gap_tolerance)
        self.backend = get_backend(config)
        cycles = enumerate_cycles(net)
        self.costs = net.catalog.costs
        self.m = net.catalog.m
        blocks = [build_scenario_polytope(net, s, cycles=cycles)
                  for s in self.scenarios]
        self.pricers = [PricingProblem(b, self.costs, self.backend)
                        for b in blocks]
        self.master = Master(self.costs, len(self.scenarios), self.backend)
        self.deadline = (None if self.options.time_limit is None
                         else time.monotonic() + self.options.time_limit)

        self.iterations = 0
        self.nodes = 0
        self.incumbent: tuple[float, tuple[int, ...]] | None = None
        self.root_lb = -math.inf
        self.pruned_lbs: list[float] = []
        self.trace: list[dict] = []
        self.failure: str | None = None

    # ------------------------------------------------------------- plumbing
    def _check_time(self) -> None:
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise _TimeUp

    def _remaining(self) -> float | None:
        if self.deadline is None:
            return None
        return max(0.01, self.deadline - time.monotonic())

    def _ub(self) -> float:
        return self.incumbent[0] if self.incumbent else math.inf

    def _failure_status(self) -> str:
        """A backend that ran out of time is a limit, not a failure."""
        return TIME_LIMIT if self.failure == TIME_LIMIT else NUMERICAL_FAILURE

    def _scale(self) -> float:
        return max(abs(self._ub()), 1e-9) if self.incumbent else 1e-9

    def _optcut_rhs(self) -> float | None:
        if not self.options.optcut or self.incumbent is None:
            return None
        return self.incumbent[0]

    def _trace(self, phase: str, columns_added: int) -> None:
        ub = self.incumbent[0] if self.incumbent else None
        lb = self.root_lb if self.root_lb > -math.inf else None
        self.trace.append(trace_row(self.iterations, phase, ub, lb,
                                    columns_added))

    def _admit(self, s: int, bits: tuple[int, ...]) -> bool:
        """Pool a copy and install its dominance cut."""
        if not self.master.add_column(s, bits):
            return False
        self.pricers[s].add_cut(bits)
        return True

    def _update_incumbent(self, objective: float, bits) -> bool:
        if self.incumbent is None or objective < self.incumbent[0] - 1e-12:
            self.incumbent = (objective, tuple(int(b) for b in bits))
            return True
        return False

    def _run_integer_master(self) -> None:
        got = self.master.solve_ip(gap_tol=min(self.tol, 1e-6),
                                   time_limit=self._remaining())
        if got is not None:
            self._update_incumbent(*got)

    # ------------------------------------------------------ column pipeline
    def _ensure_columns(self, fixed_zero: frozenset[int]) -> str:
        """Give every scenario at least one pool column valid under the
        fixings; returns "ok", "infeasible", or a failure status."""
        for s in range(len(self.scenarios)):
            if self.master.unmasked(s, fixed_zero):
                continue
            priced = self.pricers[s].solve(
                self.costs, fixed_zero=fixed_zero,
                optcut_rhs=self._optcut_rhs(), lexi=self.options.lexi,
                lexi_band=self.options.lexi_band,
                time_limit=self._remaining())
            if priced.status == "column":
                self._admit(s, priced.bits)
            elif priced.status in ("infeasible", "exhausted"):
                # "exhausted" here means the cuts hide every copy compatible
                # with the fixings, yet copies exist: every one of them is
                # dominated by a pooled column — which the mask rejects only
                # if it also violates the fixings. Either way the node holds
                # no improving plan.
                return "infeasible"
            else:
                return priced.status
        return "ok"

    def _sweep(self, lp: _MasterLP, fixed_zero: frozenset[int],
               pessimistic: bool) -> tuple[int, float, bool, int]:
        """Price every scenario; returns (columns added, dual bound for this
        iterate, dead flag, columns that improve the unperturbed master)."""
        opts = self.options
        added = 0
        useful = 0
        bound_terms = 0.0
        dead = False
        credit = lp.y.sum(axis=0)  # per-coordinate dual credit, all scenarios
        for s in range(len(self.scenarios)):
            weights = np.array(lp.y[s], dtype=float)
            if pessimistic:
                idle = lp.w <= 1e-9
                extra = (self.costs - (lp.y[s] if opts.per_scenario_pessimistic
                                       else credit))
                weights = weights + np.where(idle, np.maximum(extra, 0.0), 0.0)
            priced = self.pricers[s].solve(
                weights, fixed_zero=fixed_zero, optcut_rhs=self._optcut_rhs(),
                lexi=opts.lexi, lexi_band=opts.lexi_band,
                time_limit=self._remaining())
            if priced.status == "column":
                # Standard weights are exactly the linking duals, so the
                # stage-1 optimum *is* the scenario's true minimum dual
                # value — tighter than pricing the lexi vertex, which may
                # sit anywhere inside the acceptance band.
                if pessimistic:
                    rc = float(np.dot(lp.y[s], priced.bits)) - float(lp.sigma[s])
                else:
                    rc = float(priced.value) - float(lp.sigma[s])
                bound_terms += min(rc, 0.0)
                if (pessimistic or rc < -opts.rc_tol) and \
                        self._admit(s, priced.bits):
                    added += 1
                    if rc < -opts.rc_tol:
                        useful += 1
            elif priced.status == "exhausted":
                pass  # nothing improving left: rc >= 0 contributes zero
            elif priced.status == "infeasible":
                dead = True
            else:
                self.failure = priced.status
                dead = True
        bound = float(lp.sigma.sum()) + bound_terms
        return added, bound, dead, useful

    # --------------------------------------------------------------- CG loop
    def _cg(self, fixings: dict[int, int], root: bool) -> _CgOutcome:
        opts = self.options
        fixed_zero = frozenset(k for k, v in fixings.items() if v == 0)
        ensured = self._ensure_columns(fixed_zero)
        if ensured == "infeasible":
            return _CgOutcome("dead", lb=math.inf)
        if ensured != "ok":
            self.failure = ensured
            return _CgOutcome("failure")

        lb = -math.inf
        lp = None
        phases = (["pessimistic"] if root and opts.pessimistic else [])
        phases.append("standard")
        stab_on = root and opts.stabilized and opts.stab_weight > 0.0
        phase1_iters = 0

        for phase in phases:
            while True:
                self._check_time()
                if self.iterations >= opts.max_iters:
                    return _CgOutcome("limit", lb=lb,
                                      lp_obj=lp.objective if lp else None,
                                      w=lp.w if lp else None)
                eps = (opts.stab_weight
                       if stab_on and phase == "standard" else 0.0)
                lp = self.master.solve_lp(
                    fixings, stab_eps=eps,
                    stab_delta=opts.stab_delta if stab_on else 0.0)
                if lp.status != OPTIMAL:
                    self.failure = lp.status
                    return _CgOutcome("failure")
                self.iterations += 1
                added, bound, dead, useful = self._sweep(
                    lp, fixed_zero, pessimistic=(phase == "pessimistic"))
                if dead:
                    if self.failure:
                        return _CgOutcome("failure")
                    return _CgOutcome("dead", lb=math.inf)
                improved = phase == "standard" and bound > lb
                if improved:
                    lb = bound
                    if root:
                        self.root_lb = max(self.root_lb, lb)
                    if stab_on:
                        self.master.centers = np.array(lp.y)
                label = phase if root else "branch"
                self._trace(label, added)
                if self.iterations % opts.integer_every == 0:
                    self._run_integer_master()

                gap_ref = lb if phase == "standard" else bound
                tight = (self.incumbent is not None and
                         self._ub() - gap_ref <= self.tol * self._scale())
                if phase == "pessimistic":
                    phase1_iters += 1
                    # The warm-up earns its keep only while the columns it
                    # injects would also have priced in unperturbed; once a
                    # sweep yields none, further perturbed novelty is noise.
                    if tight or useful == 0 or \
                            phase1_iters >= opts.phase1_max_iters:
                        break
                else:
                    if tight:
                        return _CgOutcome("converged", lb=lb,
                                          lp_obj=lp.objective, w=lp.w)
                    if added == 0:
                        if stab_on:
                            stab_on = False  # drop the box, then re-verify
                            continue
                        return _CgOutcome("exhausted", lb=lb,
                                          lp_obj=lp.objective, w=lp.w)
            self._run_integer_master()  # phase boundary
        return _CgOutcome("exhausted", lb=lb,
                          lp_obj=lp.objective if lp else None,
                          w=lp.w if lp else None)

    # -------------------------------------------------------------- branching
    def _strong_branch(self, fixings: dict[int, int],
                       fractional: list[int]) -> tuple[int, list[int]]:
        scores: list[tuple[float, int]] = []
        child_vals: dict[int, tuple[float, float]] = {}
        for k in fractional:
            vals = []
            for b in (0, 1):
                lp = self.master.solve_lp({**fixings, k: b})
                vals.append(lp.objective if lp.status == OPTIMAL else math.inf)
            child_vals[k] = (vals[0], vals[1])
            scores.append((min(vals), k))
        best = max(scores, key=lambda t: (t[0], -t[1]))[1]
        v0, v1 = child_vals[best]
        order = [1, 0] if v1 <= v0 else [0, 1]  # cheaper child first; tie: 1
        return best, order

    # ------------------------------------------------------------------ drive
    def solve(self) -> PlanResult:
        try:
            return self._solve()
        except _TimeUp:
            return self._result(TIME_LIMIT)

    def _init_columns(self) -> str | None:
        """Seed one min-cost copy per scenario; returns a witness id if some
        scenario is empty."""
        for s in range(len(self.scenarios)):
            priced = self.pricers[s].solve(
                self.costs, lexi=self.options.lexi,
                lexi_band=self.options.lexi_band,
                time_limit=self._remaining())
            if priced.status == "column":
                self._admit(s, priced.bits)
            elif priced.status == "infeasible":
                return self.scenarios[s].id
            else:
                self.failure = priced.status
                return None
        return None

    def _solve(self) -> PlanResult:
        witness = self._init_columns()
        if witness is not None:
            result = self._result(INFEASIBLE)
            result.witness = witness
            return result
        if self.failure:
            return self._result(self._failure_status())
        self._trace("init", len(self.scenarios))
        self._run_integer_master()

        root = self._cg({}, root=True)
        if root.status == "failure":
            return self._result(self._failure_status())
        if root.status == "dead":
            # The incumbent cut exhausted every scenario copy cheaper than
            # the incumbent: nothing can improve on it.
            self.pruned_lbs.append(self._ub())
            return self._result(OPTIMAL)
        if root.status == "limit":
            return self._result(TIME_LIMIT)
        if root.status == "converged":
            self.pruned_lbs.append(root.lb)
            return self._result(OPTIMAL)

        stack = [_Node({}, root.lb, 0)]
        first = root  # reuse the already-run CG for the root node
        while stack:
            self._check_time()
            if self.iterations >= self.options.max_iters:
                return self._result(TIME_LIMIT)
            node = stack.pop()
            scale = self._scale()
            if self.incumbent is not None and \
                    self._ub() - node.inherited_lb <= self.tol * scale:
                self.pruned_lbs.append(node.inherited_lb)
                continue
            self.nodes += 1
            if first is not None:
                outcome, first = first, None
            else:
                outcome = self._cg(node.fixings, root=False)
            if outcome.status == "failure":
                return self._result(self._failure_status())
            if outcome.status == "limit":
                return self._result(TIME_LIMIT)
            if outcome.status == "dead":
                continue
            lb = max(outcome.lb, node.inherited_lb)
            if self.incumbent is not None and \
                    self._ub() - lb <= self.tol * self._scale():
                self.pruned_lbs.append(lb)
                continue
            w = np.clip(outcome.w, 0.0, 1.0)
            fractional = [k for k in range(self.m)
                          if k not in node.fixings
                          and min(w[k], 1.0 - w[k]) > INTEGRALITY_TOL]
            if not fractional:
                bits = tuple(int(round(float(v))) for v in w)
                value = float(self.costs @ bits) if self.m else 0.0
                self._update_incumbent(value, bits)
                self.pruned_lbs.append(lb)
                continue
            k, order = self._strong_branch(node.fixings, fractional)
            for b in reversed(order):  # LIFO: first of `order` on top
                stack.append(_Node({**node.fixings, k: b}, lb,
                                   node.depth + 1))
        return self._result(OPTIMAL)

    # ------------------------------------------------------------------ result
    def _result(self, status: str) -> PlanResult:
        if status == OPTIMAL and self.incumbent is None:
            status = NUMERICAL_FAILURE
        ub = self.incumbent[0] if self.incumbent else None
        if status == OPTIMAL:
            proven = min([ub] + self.pruned_lbs)
            lb = max(self.root_lb, proven) if self.pruned_lbs else ub
        else:
            lb = self.root_lb if self.root_lb > -math.inf else None
        self._trace("final", 0)
        result = PlanResult(
            algorithm="bnp", status=status,
            objective=ub if status == OPTIMAL else None,
            lower_bound=lb, upper_bound=ub,
            trace=self.trace,
            stats={"iterations": self.iterations, "nodes": self.nodes,
                   "columns": sum(len(p) for p in self.master.pool),
                   "pricing_solves": sum(p.solves for p in self.pricers),
                   "dominance_cuts": sum(len(p.cut_supports)
                                         for p in self.pricers)})
        if self.failure:
            result.stats["backend_status"] = self.failure
        if self.incumbent is not None:
            result.upgrades = upgrades_from_vector(self.net.catalog,
                                                   self.incumbent[1])
        return result


def solve_bnp(net: IntegratedNetwork, scenarios: list[Scenario],
              config: SolverConfig | None = None,
              options: BnpOptions | None = None) -> PlanResult:
    return BranchAndPrice(net, scenarios, config=config,
                          options=options).solve()


def root_lp_bound(net: IntegratedNetwork, scenarios: list[Scenario],
                  config: SolverConfig | None = None, rc_tol: float = 1e-9,
                  max_iters: int = 10_000) -> tuple[float, dict]:
    """Exact value of the copy-convexified relaxation at the root.

    Plain column generation to exhaustion: no pessimistic warm-up, no
    incumbent cut, no integer masters — dominance cuts stay on, which never
    hides an improving copy (anything they remove prices nonnegative).  The
    returned value is the relaxation's true optimum, never below the plain
    LP relaxation of the linked formulation.
    """
    options = BnpOptions(pessimistic=False, optcut=False, lexi=True,
                         rc_tol=rc_tol, max_iters=max_iters,
                         integer_every=max_iters + 1)
    solver = BranchAndPrice(net, scenarios, config=config, options=options)
    witness = solver._init_columns()
    if witness is not None:
        raise BnpError(f"scenario {witness} admits no feasible operation")
    if solver.failure:
        raise BnpError(f"pricing failed with status {solver.failure}")
    outcome = solver._cg({}, root=True)
    if outcome.status not in ("exhausted", "converged"):
        raise BnpError(f"column generation ended with {outcome.status}")
    stats = {"iterations": solver.iterations,
             "columns": sum(len(p) for p in solver.master.pool),
             "lp_objective": outcome.lp_obj, "dual_bound": outcome.lb}
    return float(outcome.lp_obj), stats
