"""Deterministic rendering of unit sets into prompt strings."""

from __future__ import annotations

from typing import Sequence

from .model import Dialect, Sample

TRIPLE_PREFIX = "translate from Triple to Text:"
KV_PREFIX = "translate from MR to Text:"


def linearize(sample: Sample, dialect: Dialect,
              presented_order: Sequence[int] | None = None) -> str:
    """Render the sample under a presented unit order.

    Triple style: prefix plus one "<head> s <relation> p <tail> o" block per
    unit, space-joined. Key-value style: prefix plus ", "-joined
    "attribute[value]" items with the name unit leading.
    """
    units = list(sample.units)
    if presented_order is not None:
        if sorted(presented_order) != list(range(len(units))):
            raise ValueError(f"presented_order is not a permutation for {sample.id}")
        units = [units[i] for i in presented_order]
    if dialect is Dialect.TRIPLE:
        blocks = [f"<head> {u.subject} <relation> {u.predicate} <tail> {u.object}"
                  for u in units]
        return f"{TRIPLE_PREFIX} " + " ".join(blocks)
    items = [f"{u.attribute}[{u.value}]" for u in units]
    if sample.name_unit is not None:
        items.insert(0, f"{sample.name_unit.attribute}[{sample.name_unit.value}]")
    return f"{KV_PREFIX} " + ", ".join(items)
