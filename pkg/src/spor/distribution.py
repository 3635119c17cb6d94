"""Unit-occurrence distributions and the divergence measure used by the split builders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import DegenerateDistribution
from .model import Sample

#: Default divergence threshold for all replacement-based constructions.
DEFAULT_DIVERGENCE_THRESHOLD = 0.02


@dataclass(frozen=True)
class UnitDistribution:
    """Occurrence counts of unit ids over a sample collection."""

    counts: Mapping[str, float] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.counts.values())

    def proportion(self, uid: str) -> float:
        total = self.total
        if total == 0:
            raise DegenerateDistribution("distribution has zero total mass")
        return self.counts.get(uid, 0.0) / total


def unit_distribution(samples: Iterable[Sample],
                      restrict_to: frozenset[str] | set[str] | None = None) -> UnitDistribution:
    """Count (sample, unit) incidences, optionally restricted to a unit-id set."""
    counts: dict[str, float] = {}
    for sample in samples:
        for uid in sample.unit_ids:
            if restrict_to is not None and uid not in restrict_to:
                continue
            counts[uid] = counts.get(uid, 0) + 1
    return UnitDistribution(counts)


def chernoff_divergence(p: UnitDistribution, q: UnitDistribution) -> float:
    """Bhattacharyya-style divergence 1 - sum_k sqrt(p_k * q_k), clamped to [0, 1]."""
    tp, tq = p.total, q.total
    if tp <= 0 or tq <= 0:
        raise DegenerateDistribution("divergence needs two non-empty distributions")
    affinity = 0.0
    for uid, cp in p.counts.items():
        cq = q.counts.get(uid)
        if cq:
            affinity += math.sqrt((cp / tp) * (cq / tq))
    return min(1.0, max(0.0, 1.0 - affinity))
