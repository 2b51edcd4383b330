"""Resilient upgrade planning for distribution grids with a control network.

Pick the cheapest set of upgrades — new lines, remotely controlled switches,
hardenings, distributed generators — such that after every postulated damage
scenario the grid can be reconfigured to keep service above given floors,
honoring three-phase linearized power flow, radiality, and reachability of
every exercised control point from a control center.

Solvers: monolithic MIP (``solve_extensive``), scenario-based decomposition
(``solve_sbd``), branch-and-price (``solve_bnp``), and an exhaustive oracle
(``solve_bruteforce``) for cross-checking on small instances.
"""

from .bnp import BnpOptions, root_lp_bound, solve_bnp
from .formulation import find_infeasible_scenario, solve_extensive
from .lpbackend import SolverConfig
from .model import (IntegratedNetwork, ResilienceSpec, Scenario, validate,
                    validate_scenarios)
from .netio import load_network, load_scenarios, save_network, save_scenarios
from .oracle import solve_bruteforce
from .result import PlanResult, write_outputs
from .sbd import solve_sbd
from .scenariogen import StormSpec, generate

__version__ = "0.1.0"

__all__ = [
    "BnpOptions", "IntegratedNetwork", "PlanResult", "ResilienceSpec",
    "Scenario", "SolverConfig", "StormSpec", "find_infeasible_scenario",
    "generate", "load_network", "load_scenarios", "root_lp_bound",
    "save_network", "save_scenarios", "solve_bnp", "solve_bruteforce",
    "solve_extensive", "solve_sbd", "validate", "validate_scenarios",
    "write_outputs", "__version__",
]
