"""Ice-storm damage scenario generation.

Every distribution line is split into one-mile segments (the final fractional
segment keeps the per-mile hazard rate: it fails with probability
``1 - (1-p)**frac``); a line is damaged iff any of its segments fails, so the
line-level damage probability is exactly ``1 - (1-p)**length``.

Randomness comes from a counter-based generator (Philox) keyed by the seed
and counted by (scenario, line position, segment).  Draws are therefore
independent of evaluation order, scenario lists are reproducible, and damage
sets are nested as ``p`` grows because each segment compares the same uniform
draw against a threshold monotone in ``p``.

Communication links have no length and are never hit directly; with
``shared_fate`` enabled, links paired to a damaged line are damaged with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import IntegratedNetwork, Scenario


@dataclass(frozen=True)
class StormSpec:
    p: float  # per-mile damage probability
    count: int
    seed: int = 0
    shared_fate: bool = False

    def check(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("per-mile damage probability must be within [0, 1]")
        if self.count < 1:
            raise ValueError("scenario count must be >= 1")


def _uniform(seed: int, scenario: int, line: int, segment: int) -> float:
    counter = np.array([scenario, line, segment, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter)).random()


def line_damage_probability(p: float, length_miles: float) -> float:
    """Closed form for one line: 1 - (1-p)^length."""
    return 1.0 - (1.0 - p) ** length_miles


def generate(net: IntegratedNetwork, spec: StormSpec) -> list[Scenario]:
    spec.check()
    lines = sorted(net.lines, key=lambda e: e.id)
    for e in lines:
        if e.length_miles is None:
            raise ValueError(f"line {e.id}: length required for storm sampling")
    shared = {e.id: [cl.id for cl in net.paired_links_of(e.id)] for e in lines}

    scenarios = []
    width = max(4, len(str(spec.count - 1)))
    for i in range(spec.count):
        damaged: list[str] = []
        for j, line in enumerate(lines):
            full = math.floor(line.length_miles)
            frac = line.length_miles - full
            hit = any(_uniform(spec.seed, i, j, seg) < spec.p
                      for seg in range(full))
            if not hit and frac > 0.0:
                threshold = 1.0 - (1.0 - spec.p) ** frac
                hit = _uniform(spec.seed, i, j, full) < threshold
            if hit:
                damaged.append(line.id)
                if spec.shared_fate:
                    damaged.extend(shared[line.id])
        scenarios.append(Scenario(f"s{i:0{width}d}", tuple(sorted(damaged))))
    return scenarios
