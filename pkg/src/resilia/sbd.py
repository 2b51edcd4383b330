"""Scenario-based decomposition: grow a scenario master until nothing breaks.

The master is the linked extensive form over an active subset (seeded with
the first scenario), so its optimum is always a valid global lower bound.
Separation asks, for each inactive scenario in index order, whether the
master's plan keeps it feasible — a MIP probe with the unpurchased copy bits
pinned to zero, the purchased ones left free.  The first violated scenario
joins the master (or all of them, with ``add_all``); when none is violated
the plan is optimal.  Before returning, every scenario — active or not — is
re-verified against the final plan; a failure there is reported as a
numerical failure, never papered over.

An infeasible master certifies an infeasible instance: the shared purchase
vector can always rise to the componentwise maximum, so the master only dies
when some active scenario is empty even with everything bought.  That
scenario is reported as the witness.
"""

from __future__ import annotations

import time

from .formulation import build_extensive_form, find_infeasible_scenario
from .lpbackend import INFEASIBLE, OPTIMAL, TIME_LIMIT, SolverConfig, get_backend
from .model import IntegratedNetwork, Scenario, enumerate_cycles
from .oracle import FeasibilityChecker
from .result import PlanResult, trace_row, upgrades_from_vector


def solve_sbd(net: IntegratedNetwork, scenarios: list[Scenario],
              config: SolverConfig | None = None,
              gap_tol: float | None = None, add_all: bool = False,
              time_limit: float | None = None) -> PlanResult:
    if not scenarios:
        raise ValueError("at least one scenario is required")
    tol = gap_tol if gap_tol is not None else net.resilience.gap_tolerance
    backend = get_backend(config)
    cycles = enumerate_cycles(net)
    checker = FeasibilityChecker(net, scenarios, config=config)
    costs = net.catalog.costs
    deadline = None if time_limit is None else time.monotonic() + time_limit

    active: list[int] = [0]
    trace: list[dict] = []
    master_solves = 0
    best_lb: float | None = None

    def finish(status, objective=None, upgrades=None, witness=None, ub=None):
        return PlanResult(
            algorithm="sbd", status=status, objective=objective,
            lower_bound=best_lb, upper_bound=ub, upgrades=upgrades or {},
            witness=witness, trace=trace,
            stats={"iterations": len(trace), "master_solves": master_solves,
                   "separation_solves": checker.mip_solves,
                   "scenarios_in_master": len(active)})

    for iteration in range(1, len(scenarios) + 2):
        remaining = None if deadline is None else deadline - time.monotonic()
        if remaining is not None and remaining <= 0.0:
            return finish(TIME_LIMIT)
        ext = build_extensive_form(net, [scenarios[i] for i in active],
                                   cycles=cycles)
        res = backend.solve_mip(ext.cs, time_limit=remaining, gap_tol=tol)
        master_solves += 1
        if res.status == INFEASIBLE:
            witness = find_infeasible_scenario(
                net, [scenarios[i] for i in active], cycles=cycles,
                backend=backend)
            trace.append(trace_row(iteration, "sbd", None, None, 0))
            best_lb = None  # no plan exists; bounds are meaningless
            return finish(INFEASIBLE, witness=witness)
        if res.status != OPTIMAL:
            return finish(res.status)
        w = ext.first_stage_values(res.x)
        objective = float(costs @ w) if len(costs) else 0.0
        best_lb = objective

        in_master = set(active)
        added: list[int] = []
        for i in range(len(scenarios)):
            if i in in_master:
                continue
            if not checker.check(tuple(w), i):
                added.append(i)
                if not add_all:
                    break
        trace.append(trace_row(iteration, "sbd",
                               None if added else objective, objective,
                               len(added)))
        if added:
            active.extend(added)
            continue

        # Post-hoc sweep: the plan must stand against every scenario.
        for i in range(len(scenarios)):
            if not checker.check(tuple(w), i):
                bad = finish("numerical_failure", ub=None)
                bad.stats["verification_failure"] = scenarios[i].id
                return bad
        return finish(OPTIMAL, objective=objective,
                      upgrades=upgrades_from_vector(net.catalog, w),
                      ub=objective)

    raise RuntimeError("scenario loop failed to terminate")  # pragma: no cover
