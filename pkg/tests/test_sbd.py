"""Scenario-based decomposition: growth of the active set, bound
monotonicity, and agreement with the monolithic solve."""

from __future__ import annotations

import pytest

import instgen
from resilia.formulation import solve_extensive
from resilia.lpbackend import TIME_LIMIT
from resilia.model import Scenario
from resilia.sbd import solve_sbd


@pytest.mark.parametrize("seed", [0, 4, 8])
def test_matches_extensive_form(seed):
    net, scens = instgen.random_instance(seed)
    sbd = solve_sbd(net, scens)
    exact = solve_extensive(net, scens)
    assert sbd.status == "optimal"
    assert sbd.objective == pytest.approx(exact.objective, rel=1e-6)


def test_master_objective_never_decreases():
    net, scens = instgen.random_instance(5)
    res = solve_sbd(net, scens)
    lbs = [row["lb"] for row in res.trace]
    assert lbs == sorted(lbs)
    assert res.stats["iterations"] == len(res.trace)


def test_single_scenario_needs_one_master_solve():
    res = solve_sbd(instgen.two_bus(), [instgen.TWO_BUS_SCENARIO])
    assert res.status == "optimal"
    assert res.objective == pytest.approx(20.0)
    assert res.stats["master_solves"] == 1
    assert res.stats["scenarios_in_master"] == 1


def test_dominating_scenario_first_terminates_immediately():
    net, _ = instgen.coverage_instance(4, 1)
    scens = [Scenario("big", ("f0", "f1", "f2")),
             Scenario("small", ("f0", "f1"))]
    res = solve_sbd(net, scens)
    assert res.status == "optimal"
    assert res.stats["master_solves"] == 1
    assert res.stats["scenarios_in_master"] == 1


def test_first_violated_scenario_joins_unless_add_all():
    # calm master, then two violated scenarios where fixing the larger
    # also fixes the smaller: one-at-a-time stops at two actives
    net, _ = instgen.coverage_instance(4, 1)
    scens = [Scenario("calm", ()), Scenario("two", ("f0", "f1")),
             Scenario("one", ("f0",))]
    one_at_a_time = solve_sbd(net, scens)
    everything = solve_sbd(net, scens, add_all=True)
    assert one_at_a_time.objective == pytest.approx(everything.objective)
    assert one_at_a_time.stats["scenarios_in_master"] == 2
    assert everything.stats["scenarios_in_master"] == 3


def test_duplicate_scenarios_cost_the_same():
    net, scens = instgen.random_instance(2)
    base = solve_sbd(net, scens)
    doubled = solve_sbd(net, scens + [Scenario(f"{s.id}+", s.damaged)
                                      for s in scens])
    assert doubled.objective == pytest.approx(base.objective)


def test_infeasible_instance_names_the_witness():
    net = instgen.two_bus()
    dead = Scenario("dead", ("cl1", "l1", "l2"))
    res = solve_sbd(net, [instgen.TWO_BUS_SCENARIO, dead])
    assert res.status == "infeasible"
    assert res.witness == "dead"
    assert res.objective is None


def test_time_limit_is_honored():
    net, scens = instgen.random_instance(0)
    res = solve_sbd(net, scens, time_limit=0.0)
    assert res.status == TIME_LIMIT


def test_trace_reports_additions_then_closure():
    net, scens = instgen.random_instance(5)
    res = solve_sbd(net, scens)
    assert res.trace[-1]["ub"] == pytest.approx(res.objective)
    for row in res.trace[:-1]:
        assert row["ub"] is None and row["columns_added"] >= 1
    assert res.trace[-1]["columns_added"] == 0
