"""End-to-end acceptance gates, one test per release requirement.

Each test ends by printing a single ``[PASS]``/``[FAIL]`` line with the
measured quantity and its tolerance (visible under ``pytest -s`` or in the
captured output of a failing run); the ``-v`` listing therefore carries one
verdict per requirement.
"""

from __future__ import annotations

import functools
import math
import os
import types
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

import instgen
from resilia import netio
from resilia.bnp import BnpOptions, root_lp_bound, solve_bnp
from resilia.cli import main as cli_main
from resilia.formulation import (build_extensive_form,
                                 lindistflow_coefficients, polygon_area_ratio,
                                 solve_extensive, thermal_polygon)
from resilia.lpbackend import get_backend
from resilia.model import (Bus, CommNode, Generator, IntegratedNetwork,
                           ResilienceSpec)
from resilia.oracle import solve_bruteforce
from resilia.sbd import solve_sbd
from resilia.scenariogen import StormSpec, generate, line_damage_probability
from test_formulation import PHASE_SETS, _drop_reference

N_RANDOM = 20
RANDOM_SEEDS = tuple(range(N_RANDOM))


def _gate(label: str, ok: bool, detail: str) -> None:
    print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
    assert ok, f"{label}: {detail}"


@functools.lru_cache(maxsize=None)
def _instance(seed: int):
    return instgen.random_instance(seed)


# 1 ▸ every solver route returns the same optimal cost ------------------------
def test_solver_equivalence_on_random_instances():
    worst = 0.0
    for seed in RANDOM_SEEDS:
        net, scens = _instance(seed)
        results = [solve_bruteforce(net, scens), solve_extensive(net, scens),
                   solve_sbd(net, scens), solve_bnp(net, scens)]
        assert all(r.status == "optimal" for r in results), seed
        vals = [r.objective for r in results]
        spread = (max(vals) - min(vals)) / max(1.0, max(map(abs, vals)))
        worst = max(worst, spread)
        assert spread <= 1e-6, (seed, vals)
    _gate("solver equivalence",
          worst <= 1e-6,
          f"{N_RANDOM} instances x 4 solvers, worst relative spread "
          f"{worst:.2e} (tol 1e-6)")


# 2 ▸ the convexified root dominates the plain relaxation ---------------------
def test_root_bound_dominates_plain_relaxation():
    backend = get_backend()
    strict = 0
    worst = math.inf
    for seed in RANDOM_SEEDS:
        net, scens = _instance(seed)
        root, _ = root_lp_bound(net, scens)
        plain = backend.solve_lp(build_extensive_form(net, scens).cs)
        assert plain.status == "optimal"
        margin = root - plain.objective
        worst = min(worst, margin)
        assert margin >= -1e-8, (seed, margin)
        if margin > 1e-8:
            strict += 1
    ok = worst >= -1e-8 and strict >= 0.2 * N_RANDOM
    _gate("root bound dominance", ok,
          f"smallest margin {worst:+.3e} (tol -1e-8), strictly stronger on "
          f"{strict}/{N_RANDOM} (need >= {math.ceil(0.2 * N_RANDOM)})")


# 3 ▸ each pricing mechanism pays for itself on the degenerate family ---------
SCATTER = dict(n_leaves=16, n_scenarios=5, tie_capacity=3, damage_frac=0.6)
BLACKOUT18 = dict(n_leaves=18, n_scenarios=6, tie_capacity=4,
                  damage_frac=0.5, premium_cost=8.0, comm_frac=0.45,
                  core_frac=0.7)
BLACKOUT20 = {**BLACKOUT18, "n_leaves": 20}

# Shared-corridor instances sized so the plain loop needs >= 50 master
# iterations; equal-cost restoration options keep the duals degenerate.
ABLATION_SUITE = (
    (SCATTER, 1), (SCATTER, 4),
    (BLACKOUT18, 11), (BLACKOUT18, 18), (BLACKOUT18, 25),
    (BLACKOUT20, 2), (BLACKOUT20, 10), (BLACKOUT20, 12), (BLACKOUT20, 21),
    (BLACKOUT20, 28),
)

VARIANTS = {
    "full": {},
    "basic": dict(pessimistic=False, optcut=False, lexi=False),
    "no-pessimistic": dict(pessimistic=False),
    "no-optcut": dict(optcut=False),
    "no-lexi": dict(lexi=False),
}
ABLATIONS = ("no-pessimistic", "no-optcut", "no-lexi")


def test_acceleration_ablations_on_degenerate_suite():
    wins = Counter()
    for params, seed in ABLATION_SUITE:
        net, scens = instgen.corridor_instance(seed=seed, **params)
        iters, objs = {}, {}
        for name, toggles in VARIANTS.items():
            res = solve_bnp(net, scens, options=BnpOptions(**toggles))
            assert res.status == "optimal", (seed, name)
            iters[name] = res.stats["iterations"]
            objs[name] = res.objective
        scale = max(1.0, abs(objs["full"]))
        assert max(objs.values()) - min(objs.values()) <= 1e-6 * scale, seed
        assert iters["basic"] >= 50, (seed, iters)
        for name in ABLATIONS:
            if iters["full"] < iters[name]:
                wins[name] += 1
        print(f"  suite {params['n_leaves']} leaves / seed {seed}: {iters}")
    ok = all(wins[name] >= 7 for name in ABLATIONS)
    _gate("acceleration ablations", ok,
          "; ".join(f"full beats {name} on {wins[name]}/10"
                    for name in ABLATIONS)
          + " (need >= 7/10 each, costs agree to 1e-6)")


# 4 ▸ the thermal polygon is a sound inner approximation ----------------------
def test_thermal_polygon_inner_approximation():
    segments, cap, want = 28, 7.5, 10_000
    a, rf = thermal_polygon(segments)
    rng = np.random.default_rng(0)
    kept = []
    while sum(len(k) for k in kept) < want:
        pts = rng.uniform(-cap, cap, size=(4 * want, 2))
        inside = (pts @ a.T <= rf * cap).all(axis=1)
        kept.append(pts[inside])
    samples = np.concatenate(kept)[:want]
    radii = np.einsum("ij,ij->i", samples, samples)
    overshoot = radii.max() / cap**2 - 1.0
    area = polygon_area_ratio(segments)
    ok = overshoot <= 1e-12 and area >= 0.97
    _gate("thermal polygon soundness", ok,
          f"{want} feasible samples, max (p^2+q^2)/T^2 - 1 = {overshoot:.2e} "
          f"(tol 1e-12); analytic area fraction {area:.5f} (need >= 0.97)")


# 5 ▸ voltage-drop coefficients equal the phasor-algebra derivation -----------
def test_voltage_drop_coefficients_match_phasor_algebra():
    rng = np.random.default_rng(42)
    worst = 0.0
    for trial in range(1_000):
        phases = PHASE_SETS[rng.integers(len(PHASE_SETS))]
        n = len(phases)
        r = rng.uniform(-0.01, 0.01, (n, n))
        x = rng.uniform(-0.01, 0.01, (n, n))
        r, x = (r + r.T) / 2.0, (x + x.T) / 2.0
        line = types.SimpleNamespace(phases=phases, r=r, x=x)
        cp, cq = lindistflow_coefficients(line)
        eye, zero = np.eye(n), np.zeros(n)
        for k in range(n):
            dp = _drop_reference(phases, r, x, eye[k], zero)
            dq = _drop_reference(phases, r, x, zero, eye[k])
            worst = max(worst,
                        np.abs(cp[:, k] - dp).max(),
                        np.abs(cq[:, k] - dq).max())
        assert worst <= 1e-12, (trial, worst)
    _gate("voltage-drop coefficients", worst <= 1e-12,
          f"1000 random lines, worst |coefficient error| {worst:.2e} "
          f"(tol 1e-12)")


# 6 ▸ storm sampler hits the closed-form damage rate --------------------------
def _length_fixture():
    lengths = {"e05": 0.5, "e10": 1.0, "e25": 2.5, "e30": 3.0, "e47": 4.7}
    buses = [Bus("b0", ("a",), {}, vmin={"a": 0.95}, vmax={"a": 1.05})]
    lines = []
    for i, (lid, miles) in enumerate(sorted(lengths.items())):
        buses.append(Bus(f"b{i + 1}", ("a",), {"a": (1.0, 0.5)},
                         vmin={"a": 0.95}, vmax={"a": 1.05}))
        lines.append(instgen.simple_line(lid, "b0", f"b{i + 1}",
                                         length_miles=miles))
    net = IntegratedNetwork(
        tuple(buses), tuple(lines),
        (Generator("g0", "b0", ("a",), {"a": (99.0, 99.0)}),),
        (CommNode("cc", kind="control-center"),), (), {}, {"g0": "cc"},
        resilience=ResilienceSpec(eta_critical=1.0, eta_total=0.5))
    return net, lengths


def test_storm_sampler_matches_closed_form():
    net, lengths = _length_fixture()
    draws = 10_000
    worst = 0.0
    for p in (0.01, 0.1, 0.3):
        scens = generate(net, StormSpec(p=p, count=draws, seed=123))
        hits = Counter(lid for s in scens for lid in s.damaged)
        for lid, miles in lengths.items():
            q = line_damage_probability(p, miles)
            sigma = math.sqrt(q * (1.0 - q) / draws)
            z = abs(hits[lid] / draws - q) / sigma
            worst = max(worst, z)
            assert z <= 3.0, (p, lid, z)
    _gate("storm sampler statistics", worst <= 3.0,
          f"3 damage rates x {len(lengths)} lengths x {draws} draws, "
          f"worst |z| = {worst:.2f} (need <= 3)")


# 7 ▸ communication gating, and more control centers never cost more ---------
def test_communication_gating_and_center_monotonicity():
    # The local generator is four times cheaper, but its control point is
    # unreachable in the storm; the plan must fall back to the line.
    gated = solve_extensive(instgen.two_bus(), [instgen.TWO_BUS_SCENARIO])
    assert gated.status == "optimal"
    assert gated.upgrades.get("new_edges") == ["l2"]
    assert not gated.upgrades.get("new_generators")
    assert gated.objective == pytest.approx(20.0)
    check = solve_bnp(instgen.two_bus(), [instgen.TWO_BUS_SCENARIO])
    assert check.objective == pytest.approx(20.0)

    # A second control center restores the cheap plan; adding reach can
    # never increase the optimal cost.
    double = solve_extensive(instgen.two_bus(two_centers=True),
                             [instgen.TWO_BUS_SCENARIO])
    assert double.status == "optimal"
    assert double.objective <= gated.objective + 1e-9
    assert double.upgrades.get("new_generators") == ["g2"]
    assert double.objective == pytest.approx(5.0)
    _gate("communication gating", True,
          f"gated plan buys the line at {gated.objective:g}; second control "
          f"center drops the cost to {double.objective:g}")


# 8 ▸ full-scale dataset reproduction (optional, needs converted data) --------
def test_full_scale_dataset_reproduction():
    root = os.environ.get("RESILIA_FULLSCALE_DIR")
    if not root:
        pytest.skip("set RESILIA_FULLSCALE_DIR to a directory of converted "
                    "cases (network.json, scenarios.json, expected.json) "
                    "to enable the full-scale reproduction check")
    worst = 0.0
    for case in sorted(Path(root).iterdir()):
        expected = case / "expected.json"
        if not expected.exists():
            continue
        import json
        want = json.loads(expected.read_text())["objective"]
        net = netio.load_network(case / "network.json")
        scens = netio.load_scenarios(case / "scenarios.json", network=net)
        res = solve_bnp(net, scens)
        assert res.status == "optimal", case.name
        rel = abs(res.objective - want) / max(1.0, abs(want))
        worst = max(worst, rel)
        assert rel <= 1e-3, (case.name, res.objective, want)
    _gate("full-scale reproduction", worst <= 1e-3,
          f"worst relative objective error {worst:.2e} (tol 1e-3)")


# 9 ▸ identical runs leave byte-identical traces ------------------------------
def test_cli_trace_determinism(tmp_path):
    net, scens = _instance(3)
    network = tmp_path / "network.json"
    scenarios = tmp_path / "scenarios.json"
    netio.save_network(net, network)
    netio.save_scenarios(scens, scenarios)
    runner = CliRunner()
    blobs = []
    for tag in ("a", "b"):
        out = tmp_path / f"run-{tag}"
        res = runner.invoke(cli_main, [
            "solve", "--network", str(network), "--scenarios", str(scenarios),
            "--algorithm", "bnp", "--threads", "1", "--seed", "7",
            "--out-dir", str(out),
        ])
        assert res.exit_code == 0, res.output
        blobs.append((out / "trace.csv").read_bytes())
    ok = blobs[0] == blobs[1]
    _gate("trace determinism", ok,
          f"two identical runs, trace.csv {'byte-identical' if ok else 'differs'} "
          f"({len(blobs[0])} bytes)")
