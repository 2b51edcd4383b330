"""Exhaustive reference solver over the first-stage hypercube.

Enumerates every 0/1 purchase profile in ascending (cost, bits) order and
returns the first profile that is feasible in every scenario — which is the
optimum, because costs are nonnegative.  Useful as an independent correctness
oracle for the decomposition solvers on small catalogs; refuses catalogs past
``m_cap`` (the sweep is exponential by design).

Feasibility of a profile in a scenario is decided by a MIP probe of the
scenario polytope with the unpurchased copy bits pinned to zero; purchased
bits stay free, so feasibility is monotone in the profile (buying more never
hurts).  Two accelerations exploit that monotonicity without changing any
verdict: a per-scenario cache of known-feasible profiles (any superset is
feasible without a solve) and a per-scenario kill counter that orders the
scenario sweep by observed rejection rate.  A probe that ends neither optimal
nor infeasible (time limit, numerics) raises instead of guessing.
"""

from __future__ import annotations

from .formulation import ScenarioBlock, build_scenario_polytope
from .lpbackend import INFEASIBLE, OPTIMAL, SolverConfig, get_backend
from .model import IntegratedNetwork, Scenario, enumerate_cycles
from .result import PlanResult, trace_row, upgrades_from_vector

DEFAULT_M_CAP = 16


class OracleError(RuntimeError):
    pass


class FeasibilityChecker:
    """Profile-versus-scenario probes with monotone caching."""

    def __init__(self, net: IntegratedNetwork, scenarios: list[Scenario],
                 config: SolverConfig | None = None,
                 time_limit: float | None = None, use_cache: bool = True):
        self.net = net
        self.scenarios = list(scenarios)
        self.backend = get_backend(config)
        self.time_limit = time_limit
        self.use_cache = use_cache
        cycles = enumerate_cycles(net)
        self.blocks: list[ScenarioBlock] = [
            build_scenario_polytope(net, s, cycles=cycles) for s in scenarios]
        self._feasible_masks: list[list[int]] = [[] for _ in scenarios]
        self.mip_solves = 0
        self.cache_skips = 0

    def _cached_feasible(self, index: int, mask: int) -> bool:
        return any(mask | m == mask for m in self._feasible_masks[index])

    def _remember_feasible(self, index: int, mask: int) -> None:
        kept = [m for m in self._feasible_masks[index] if m | mask != m]
        if not any(mask | m == mask for m in kept):
            kept.append(mask)
        self._feasible_masks[index] = kept

    def check(self, profile, index: int) -> bool:
        """True iff ``profile`` keeps scenario ``index`` feasible."""
        mask = sum(1 << k for k, bit in enumerate(profile) if bit)
        if self.use_cache and self._cached_feasible(index, mask):
            self.cache_skips += 1
            return True
        cs = self.blocks[index].restricted_system(profile)
        res = self.backend.solve_mip(cs, time_limit=self.time_limit)
        self.mip_solves += 1
        if res.status == OPTIMAL:
            if self.use_cache:
                self._remember_feasible(index, mask)
            return True
        if res.status == INFEASIBLE:
            return False
        raise OracleError(
            f"feasibility probe for scenario {self.scenarios[index].id} "
            f"ended with status {res.status}")


def solve_bruteforce(net: IntegratedNetwork, scenarios: list[Scenario],
                     config: SolverConfig | None = None,
                     m_cap: int = DEFAULT_M_CAP, use_cache: bool = True,
                     collect_table: bool = False, full_table: bool = False,
                     time_limit: float | None = None) -> PlanResult:
    """Reference optimum by exhaustive profile sweep.

    ``collect_table`` records every (profile, scenario) verdict actually
    decided; ``full_table`` additionally disables the early exits so the
    table covers the complete product.
    """
    if not scenarios:
        raise ValueError("at least one scenario is required")
    catalog = net.catalog
    if catalog.m > m_cap:
        raise OracleError(
            f"catalog has {catalog.m} candidates; the exhaustive sweep is "
            f"capped at {m_cap} (raise m_cap to force it)")
    collect_table = collect_table or full_table
    costs = catalog.costs
    checker = FeasibilityChecker(net, scenarios, config=config,
                                 time_limit=time_limit, use_cache=use_cache)

    profiles = []
    for code in range(1 << catalog.m):
        bits = tuple((code >> k) & 1 for k in range(catalog.m))
        profiles.append((float(costs @ bits) if catalog.m else 0.0, bits))
    profiles.sort(key=lambda item: (item[0], item[1]))

    kills = [0] * len(scenarios)
    table: dict[str, dict[str, bool]] = {}
    best: tuple[float, tuple[int, ...]] | None = None
    witness: str | None = None
    checked = 0
    for cost, bits in profiles:
        if best is not None and not full_table:
            break
        checked += 1
        order = sorted(range(len(scenarios)), key=lambda i: (-kills[i], i))
        verdicts: dict[str, bool] = {}
        feasible = True
        for i in order:
            ok = checker.check(bits, i)
            verdicts[scenarios[i].id] = ok
            if not ok:
                kills[i] += 1
                feasible = False
                if bits == (1,) * catalog.m:
                    witness = scenarios[i].id
                if not full_table:
                    break
        if collect_table:
            table["".join(map(str, bits))] = verdicts
        if feasible and best is None:
            best = (cost, bits)

    result = PlanResult(algorithm="brute",
                        status="optimal" if best else "infeasible",
                        stats={"profiles": len(profiles),
                               "profiles_checked": checked,
                               "mip_solves": checker.mip_solves,
                               "cache_skips": checker.cache_skips})
    if best is not None:
        cost, bits = best
        result.objective = result.lower_bound = result.upper_bound = cost
        result.upgrades = upgrades_from_vector(catalog, bits)
    else:
        result.witness = witness
    if collect_table:
        result.stats["feasibility_table"] = table
    result.trace = [trace_row(0, "brute", result.upper_bound,
                              result.lower_bound, 0)]
    return result
