"""Solver-agnostic sparse constraint systems.

A :class:`ConstraintSystem` holds a registry of named, bounded, optionally
integral variables, a list of sparse linear rows, and a linear objective.
It is the exchange format between the formulation builders and the LP/MIP
backend, and it can be exported to the standard LP text format for external
inspection.

Rows that rely on a big-M constant carry the constant, the indicator column,
and the indicator value at which the row is *relaxed* (i.e. the M term is what
keeps it satisfiable).  This metadata feeds the big-M audit: for a solution in
which an indicator sits at its relaxing value, the row must hold with slack —
a big-M row that is tight at its M bound means the constant was too small.
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    integer: bool = False


@dataclass(frozen=True)
class Row:
    name: str
    coeffs: tuple[tuple[int, float], ...]  # (column, coefficient), column-sorted
    sense: str  # one of "<=", ">=", "=="
    rhs: float
    big_m: float | None = None
    indicator: int | None = None  # column of the gating binary, if any
    relaxed_at: float | None = None  # indicator value at which the row is relaxed
    note: str = ""

    def activity(self, x) -> float:
        return sum(c * x[j] for j, c in self.coeffs)

    def slack(self, x) -> float:
        """Nonnegative distance to the binding boundary (0 for violated rows)."""
        a = self.activity(x)
        if self.sense == "<=":
            return self.rhs - a
        if self.sense == ">=":
            return a - self.rhs
        return -abs(a - self.rhs)


SENSES = ("<=", ">=", "==")


class ConstraintSystem:
    """Named variables + sparse rows + linear objective (minimization)."""

    def __init__(self, name: str = ""):
        self.name = name
        self.variables: list[Variable] = []
        self.rows: list[Row] = []
        self.objective: dict[int, float] = {}
        self._index: dict[str, int] = {}

    # ------------------------------------------------------------------ vars
    def add_variable(self, name: str, lb: float = 0.0, ub: float = math.inf,
                     integer: bool = False) -> int:
        if name in self._index:
            raise ValueError(f"duplicate variable name: {name}")
        if math.isnan(lb) or math.isnan(ub) or lb > ub:
            raise ValueError(f"bad bounds for {name}: [{lb}, {ub}]")
        self.variables.append(Variable(name, float(lb), float(ub), integer))
        self._index[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def binary(self, name: str) -> int:
        return self.add_variable(name, 0.0, 1.0, integer=True)

    def fixed(self, name: str, value: float) -> int:
        return self.add_variable(name, value, value)

    def column(self, name: str) -> int:
        return self._index[name]

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def fix(self, col: int | str, value: float) -> None:
        if isinstance(col, str):
            col = self._index[col]
        v = self.variables[col]
        self.variables[col] = Variable(v.name, float(value), float(value), v.integer)

    def set_bounds(self, col: int | str, lb: float, ub: float) -> None:
        if isinstance(col, str):
            col = self._index[col]
        v = self.variables[col]
        self.variables[col] = Variable(v.name, float(lb), float(ub), v.integer)

    # ------------------------------------------------------------------ rows
    def add_row(self, coeffs, sense: str, rhs: float, name: str = "",
                big_m: float | None = None, indicator: int | None = None,
                relaxed_at: float | None = None, note: str = "") -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        if isinstance(coeffs, dict):
            items = coeffs.items()
        else:
            items = coeffs
        merged: dict[int, float] = {}
        for col, c in items:
            if isinstance(col, str):
                col = self._index[col]
            if not 0 <= col < len(self.variables):
                raise ValueError(f"row {name!r} references unknown column {col}")
            if not math.isfinite(c):
                raise ValueError(f"row {name!r} has non-finite coefficient on "
                                 f"{self.variables[col].name}")
            merged[col] = merged.get(col, 0.0) + float(c)
        if not math.isfinite(rhs):
            raise ValueError(f"row {name!r} has non-finite rhs")
        if big_m is not None and not math.isfinite(big_m):
            raise ValueError(f"row {name!r} has non-finite big-M")
        row = Row(name or f"r{len(self.rows)}",
                  tuple(sorted(merged.items())), sense, float(rhs),
                  big_m, indicator, relaxed_at, note)
        self.rows.append(row)
        return len(self.rows) - 1

    # ------------------------------------------------------------- objective
    def set_objective(self, coeffs) -> None:
        self.objective = {}
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        for col, c in items:
            if isinstance(col, str):
                col = self._index[col]
            self.objective[col] = float(c)

    def objective_value(self, x) -> float:
        return sum(c * x[j] for j, c in self.objective.items())

    # ----------------------------------------------------------------- misc
    def clone(self) -> "ConstraintSystem":
        """Copy that shares Row objects (immutable) but owns variables/rows lists."""
        other = ConstraintSystem(self.name)
        other.variables = [copy.copy(v) for v in self.variables]
        other.rows = list(self.rows)
        other.objective = dict(self.objective)
        other._index = dict(self._index)
        return other

    def truncate_rows(self, n_rows: int) -> None:
        """Drop rows appended after a snapshot (used for per-solve overlays)."""
        del self.rows[n_rows:]

    # ------------------------------------------------------------- big-M audit
    def big_m_rows(self) -> list[Row]:
        return [r for r in self.rows if r.big_m is not None]

    def binding_big_m_rows(self, x, tol: float = 1e-7) -> list[Row]:
        """Big-M rows that are binding while their indicator relaxes them.

        Zero slack in that state means the M term is all that keeps the row
        satisfiable — either M caps a quantity it was supposed to leave free,
        or the solver parked otherwise-free variables at a bound.  Callers
        that can re-solve should disambiguate with
        :func:`resilia.lpbackend.confirm_big_m_hits`.
        """
        hits = []
        for r in self.big_m_rows():
            if r.indicator is None or r.relaxed_at is None:
                continue
            if abs(x[r.indicator] - r.relaxed_at) > 1e-2:
                continue
            if r.slack(x) <= tol * max(1.0, abs(r.big_m)):
                hits.append(r)
        return hits

    def audit_big_m(self, x, tol: float = 1e-7) -> list[str]:
        """Messages for any big-M row that is binding at its M bound."""
        return [f"{r.name}: slack {r.slack(x):.3e} with M={r.big_m:g} "
                f"({r.note or 'no derivation note'})"
                for r in self.binding_big_m_rows(x, tol)]

    def big_m_report(self) -> str:
        lines = ["big-M register", "=============="]
        for r in self.big_m_rows():
            ind = self.variables[r.indicator].name if r.indicator is not None else "-"
            lines.append(f"{r.name}: M={r.big_m:g} indicator={ind} "
                         f"relaxed_at={r.relaxed_at} note={r.note or '-'}")
        if not self.big_m_rows():
            lines.append("(no big-M rows)")
        return "\n".join(lines) + "\n"

    # ------------------------------------------------------------- LP export
    def to_lp_string(self) -> str:
        """Render in the standard LP text format (names sanitized)."""
        def nm(s: str) -> str:
            return re.sub(r"[^A-Za-z0-9_.!#$%&()/,;?@`'{}|~\"]", "_", s)

        def term(c: float, j: int) -> str:
            return f"{'+' if c >= 0 else '-'} {abs(c):.17g} {nm(self.variables[j].name)}"

        out = [f"\\ {self.name or 'constraint system'}", "Minimize", " obj:"]
        obj = " ".join(term(c, j) for j, c in sorted(self.objective.items())) or "0 " + \
            (nm(self.variables[0].name) if self.variables else "x")
        out[-1] += " " + obj
        out.append("Subject To")
        for r in self.rows:
            lhs = " ".join(term(c, j) for j, c in r.coeffs) or "0 " + nm(self.variables[0].name)
            op = {"<=": "<=", ">=": ">=", "==": "="}[r.sense]
            out.append(f" {nm(r.name)}: {lhs} {op} {r.rhs:.17g}")
        out.append("Bounds")
        for j, v in enumerate(self.variables):
            lo = "-inf" if v.lb == -math.inf else f"{v.lb:.17g}"
            hi = "+inf" if v.ub == math.inf else f"{v.ub:.17g}"
            out.append(f" {lo} <= {nm(v.name)} <= {hi}")
        gen = [nm(v.name) for v in self.variables if v.integer]
        if gen:
            out.append("Generals")
            out.append(" " + " ".join(gen))
        out.append("End")
        return "\n".join(out) + "\n"
