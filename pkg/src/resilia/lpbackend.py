"""LP/MIP solving behind a small capability contract.

The bundled backend drives the HiGHS solvers that ship with SciPy:
``scipy.optimize.linprog(method="highs")`` for LPs (with row duals recovered
from the HiGHS marginals) and ``scipy.optimize.milp`` for MIPs.  Both are
single-threaded and deterministic, which the decomposition solvers rely on.

Dual sign convention (documented and tested): the dual reported for a row is
the sensitivity d(objective)/d(rhs) of the row *as written*.  For a
minimization problem this makes duals of ``>=`` rows nonnegative and duals of
``<=`` rows nonpositive, so ``min x s.t. x >= 3`` reports a dual of exactly 1.
Every optimal LP solve is guarded by a strong-duality identity check; a
violation is surfaced as ``numerical_failure``, never as infeasibility.

Backend selection is configuration-driven (``SolverConfig.name``), with the
``RESILIA_SOLVER`` environment variable taking precedence.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp
from scipy.sparse import csr_matrix

from .constraints import ConstraintSystem

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TIME_LIMIT = "time_limit"
NUMERICAL_FAILURE = "numerical_failure"

_LINPROG_STATUS = {0: OPTIMAL, 1: TIME_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED,
                   4: NUMERICAL_FAILURE}
_MILP_STATUS = {0: OPTIMAL, 1: TIME_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED,
                4: NUMERICAL_FAILURE}


class BackendError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    name: str = "scipy"
    threads: int = 1
    seed: int = 0
    time_limit_s: float | None = None

    def resolved(self) -> "SolverConfig":
        env = os.environ.get("RESILIA_SOLVER")
        return replace(self, name=env) if env else self


@dataclass
class SolveResult:
    status: str
    objective: float | None
    x: np.ndarray | None
    duals: np.ndarray | None  # per row, registration order; LP solves only
    iterations: int = 0
    wall_time: float = 0.0
    bound: float | None = None  # best proven lower bound (MIP solves)


def _split_rows(cs: ConstraintSystem):
    """Split rows into (A_ub, b_ub, ub_row_map) and (A_eq, b_eq, eq_row_map).

    ``>=`` rows are negated into ub form; the map records (row index, sign)
    so duals can be put back in registration order with the documented
    convention.
    """
    n = cs.n_variables
    ub_rows, ub_rhs, ub_map = [], [], []
    eq_rows, eq_rhs, eq_map = [], [], []
    for i, r in enumerate(cs.rows):
        if r.sense == "==":
            eq_rows.append(r.coeffs)
            eq_rhs.append(r.rhs)
            eq_map.append(i)
        elif r.sense == "<=":
            ub_rows.append(r.coeffs)
            ub_rhs.append(r.rhs)
            ub_map.append((i, 1.0))
        else:  # >=  ->  -a x <= -b
            ub_rows.append(tuple((j, -c) for j, c in r.coeffs))
            ub_rhs.append(-r.rhs)
            ub_map.append((i, -1.0))

    def build(rows):
        data, indices, indptr = [], [], [0]
        for coeffs in rows:
            for j, c in coeffs:
                indices.append(j)
                data.append(c)
            indptr.append(len(indices))
        return csr_matrix((data, indices, indptr), shape=(len(rows), n))

    return (build(ub_rows), np.array(ub_rhs), ub_map,
            build(eq_rows), np.array(eq_rhs), eq_map)


class ScipyHighsBackend:
    """HiGHS via SciPy: LP with duals, MIP, deterministic single-thread runs."""

    name = "scipy"

    def __init__(self, config: SolverConfig | None = None):
        self.config = (config or SolverConfig()).resolved()

    # ------------------------------------------------------------------- LP
    def solve_lp(self, cs: ConstraintSystem, relax: bool = True) -> SolveResult:
        if not relax and any(v.integer for v in cs.variables):
            raise BackendError("integer variables present; use solve_mip or relax=True")
        t0 = time.perf_counter()
        n = cs.n_variables
        c = np.zeros(n)
        for j, coef in cs.objective.items():
            c[j] = coef
        bounds = [(v.lb if v.lb > -math.inf else None,
                   v.ub if v.ub < math.inf else None) for v in cs.variables]
        A_ub, b_ub, ub_map, A_eq, b_eq, eq_map = _split_rows(cs)
        kwargs = {}
        if A_ub.shape[0]:
            kwargs["A_ub"], kwargs["b_ub"] = A_ub, b_ub
        if A_eq.shape[0]:
            kwargs["A_eq"], kwargs["b_eq"] = A_eq, b_eq
        if self.config.time_limit_s is not None:
            kwargs["options"] = {"time_limit": self.config.time_limit_s}
        res = linprog(c, bounds=bounds, method="highs", **kwargs)
        status = _LINPROG_STATUS.get(res.status, NUMERICAL_FAILURE)
        wall = time.perf_counter() - t0
        if status != OPTIMAL:
            return SolveResult(status, None, None, None,
                               int(getattr(res, "nit", 0) or 0), wall)

        duals = np.zeros(len(cs.rows))
        if ub_map:
            for (i, sign), marg in zip(ub_map, res.ineqlin.marginals):
                duals[i] = sign * marg
        if eq_map:
            for i, marg in zip(eq_map, res.eqlin.marginals):
                duals[i] = marg

        # Strong-duality identity: primal objective == dual objective.
        dual_obj = 0.0
        if ub_map:
            dual_obj += float(res.ineqlin.marginals @ b_ub)
        if eq_map:
            dual_obj += float(res.eqlin.marginals @ b_eq)
        # Only binding bounds contribute; masking before multiplying keeps
        # 0 * inf out of the arithmetic on free-side bounds.
        lbs = np.array([v.lb for v in cs.variables])
        ubs = np.array([v.ub for v in cs.variables])
        lo_m, hi_m = res.lower.marginals, res.upper.marginals
        lo_on, hi_on = lo_m != 0.0, hi_m != 0.0
        dual_obj += float(lo_m[lo_on] @ lbs[lo_on]) if lo_on.any() else 0.0
        dual_obj += float(hi_m[hi_on] @ ubs[hi_on]) if hi_on.any() else 0.0
        if abs(res.fun - dual_obj) > 1e-6 * (1.0 + abs(res.fun)):
            return SolveResult(NUMERICAL_FAILURE, None, None, None,
                               int(res.nit or 0), wall)

        return SolveResult(OPTIMAL, float(res.fun), np.asarray(res.x), duals,
                           int(res.nit or 0), wall)

    # ------------------------------------------------------------------ MIP
    def solve_mip(self, cs: ConstraintSystem, time_limit: float | None = None,
                  gap_tol: float = 1e-9) -> SolveResult:
        t0 = time.perf_counter()
        n = cs.n_variables
        c = np.zeros(n)
        for j, coef in cs.objective.items():
            c[j] = coef
        integrality = np.array([1 if v.integer else 0 for v in cs.variables])
        bounds = Bounds(np.array([v.lb for v in cs.variables]),
                        np.array([v.ub for v in cs.variables]))
        constraints = []
        if cs.rows:
            lo = np.array([r.rhs if r.sense in (">=", "==") else -np.inf
                           for r in cs.rows])
            hi = np.array([r.rhs if r.sense in ("<=", "==") else np.inf
                           for r in cs.rows])
            data, indices, indptr = [], [], [0]
            for r in cs.rows:
                for j, coef in r.coeffs:
                    indices.append(j)
                    data.append(coef)
                indptr.append(len(indices))
            A = csr_matrix((data, indices, indptr), shape=(len(cs.rows), n))
            constraints = [LinearConstraint(A, lo, hi)]
        options = {"mip_rel_gap": gap_tol}
        tl = time_limit if time_limit is not None else self.config.time_limit_s
        if tl is not None:
            options["time_limit"] = tl
        res = milp(c=c, constraints=constraints, integrality=integrality,
                   bounds=bounds, options=options)
        status = _MILP_STATUS.get(res.status, NUMERICAL_FAILURE)
        wall = time.perf_counter() - t0
        x = np.asarray(res.x) if res.x is not None else None
        obj = float(res.fun) if x is not None else None
        if status == OPTIMAL and x is not None:
            check = cs.objective_value(x)
            if abs(check - obj) > 1e-6 * (1.0 + abs(obj)):
                return SolveResult(NUMERICAL_FAILURE, None, None, None, 0, wall)
        bound = getattr(res, "mip_dual_bound", None)
        return SolveResult(status, obj, x, None,
                           int(getattr(res, "mip_node_count", 0) or 0), wall,
                           bound=float(bound) if bound is not None else None)


def fix_variables(cs: ConstraintSystem, assignments: dict) -> ConstraintSystem:
    """Return a copy of ``cs`` with the given variables pinned (lb = ub = value)."""
    out = cs.clone()
    for key, value in assignments.items():
        out.fix(key, value)
    return out


def confirm_big_m_hits(cs: ConstraintSystem, x, backend=None,
                       tol: float = 1e-7) -> list[str]:
    """Audit big-M rows against a solution, discarding vertex artifacts.

    A row that is binding while its indicator relaxes it
    (:meth:`ConstraintSystem.binding_big_m_rows`) is suspicious, but the
    zero slack may belong to the particular vertex the solver returned —
    variables the solution leaves free get parked at a bound.  For each
    suspect this re-solves the continuous relaxation with every integer
    pinned to its value in ``x``, maximizing that row's slack; the hit is
    confirmed only when even the most favorable representation of the same
    integer assignment leaves the row binding.
    """
    suspects = cs.binding_big_m_rows(x, tol)
    if not suspects:
        return []
    backend = backend if backend is not None else get_backend()
    base = cs.clone()
    for j, v in enumerate(base.variables):
        if v.integer:
            base.fix(j, round(float(x[j])))
    confirmed = []
    for r in suspects:
        best = None
        if r.sense in ("<=", ">="):
            sign = 1.0 if r.sense == "<=" else -1.0
            probe = base.clone()
            probe.set_objective([(j, sign * c) for j, c in r.coeffs])
            res = backend.solve_lp(probe)
            if res.status == OPTIMAL:  # slack at the most favorable point
                best = sign * (r.rhs - sign * res.objective)
        if best is None or best <= tol * max(1.0, abs(r.big_m)):
            slack = "unrecoverable" if best is None else f"{best:.3e}"
            confirmed.append(f"{r.name}: best slack {slack} with "
                             f"M={r.big_m:g} ({r.note or 'no note'})")
    return confirmed


_BACKENDS = {"scipy": ScipyHighsBackend, "highs": ScipyHighsBackend}


def get_backend(config: SolverConfig | None = None):
    cfg = (config or SolverConfig()).resolved()
    cls = _BACKENDS.get(cfg.name.lower())
    if cls is None:
        raise BackendError(
            f"unknown solver backend {cfg.name!r}; available: "
            + ", ".join(sorted(set(_BACKENDS))))
    return cls(cfg)
