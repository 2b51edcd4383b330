"""Solver-independent result container and canonical output files.

Every solver entry point returns a :class:`PlanResult`; ``write_outputs``
renders it into the three canonical artifacts: ``plan.json`` (the chosen
upgrades), ``trace.csv`` (one row per solver iteration, floats formatted with
``%.10g`` so repeated deterministic runs are byte-identical), and
``summary.json`` (bounds, gap, counts).  Non-finite bounds become ``null`` in
JSON output.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .model import SEGMENT_NAMES, UpgradeCatalog

OUTPUT_PLAN = "plan.json"
OUTPUT_TRACE = "trace.csv"
OUTPUT_SUMMARY = "summary.json"
TRACE_FIELDS = ("iteration", "phase", "ub", "lb", "columns_added")


def upgrades_from_vector(catalog: UpgradeCatalog, w) -> dict[str, list[str]]:
    """Map a 0/1 first-stage vector onto catalog sections (ids sorted)."""
    chosen: dict[str, list[str]] = {name: [] for name in SEGMENT_NAMES.values()}
    for entry, value in zip(catalog.entries, w):
        if value > 0.5:
            chosen[SEGMENT_NAMES[entry.kind]].append(entry.target)
    return {name: sorted(ids) for name, ids in chosen.items()}


def trace_row(iteration: int, phase: str, ub, lb, columns_added: int) -> dict:
    return {"iteration": iteration, "phase": phase, "ub": ub, "lb": lb,
            "columns_added": columns_added}


@dataclass
class PlanResult:
    algorithm: str
    status: str  # optimal | infeasible | unbounded | time_limit | numerical_failure
    objective: float | None = None
    lower_bound: float | None = None
    upper_bound: float | None = None
    upgrades: dict[str, list[str]] = field(default_factory=dict)
    witness: str | None = None  # scenario that certifies infeasibility, if any
    trace: list[dict] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def counts(self) -> dict[str, int]:
        return {name: len(self.upgrades.get(name, []))
                for name in SEGMENT_NAMES.values()}

    @property
    def gap(self) -> float | None:
        lb, ub = self.lower_bound, self.upper_bound
        if lb is None or ub is None:
            return None
        if not (math.isfinite(lb) and math.isfinite(ub)):
            return None
        return (ub - lb) / max(abs(ub), 1e-9)

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "status": self.status,
            "objective": _finite(self.objective),
            "lower_bound": _finite(self.lower_bound),
            "upper_bound": _finite(self.upper_bound),
            "gap": _finite(self.gap),
            "upgrades": self.upgrades,
            "counts": self.counts,
            "witness": self.witness,
            "stats": self.stats,
        }

    def summary_dict(self) -> dict:
        d = self.to_dict()
        del d["upgrades"]
        d["total_upgrades"] = sum(self.counts.values())
        return d


def _finite(v):
    if v is None or not math.isfinite(v):
        return None
    return float(v)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, int):
        return str(v)
    return f"{float(v):.10g}"


def write_outputs(result: PlanResult, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"plan": out / OUTPUT_PLAN, "trace": out / OUTPUT_TRACE,
             "summary": out / OUTPUT_SUMMARY}
    paths["plan"].write_text(
        json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    paths["summary"].write_text(
        json.dumps(result.summary_dict(), indent=2, sort_keys=True) + "\n")
    with open(paths["trace"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_FIELDS)
        for row in result.trace:
            writer.writerow([_cell(row.get(f)) for f in TRACE_FIELDS])
    return paths
