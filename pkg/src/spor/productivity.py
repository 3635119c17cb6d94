"""Size-bounded twin training sets (Invisible/Visible) and the long-input test set.

Invisible holds every training sample with at most N units. Visible is derived
by the same replacement scheme as the combination builder, except the budget is
the occurrence sum of the removed cluster (so total unit occurrences stay
exactly equal) and distributions run over the full unit vocabulary.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

from .distribution import (DEFAULT_DIVERGENCE_THRESHOLD, chernoff_divergence,
                           unit_distribution)
from .errors import VerificationFailure
from .model import Aspect, Corpus, Sample, SplitArtifact

log = logging.getLogger(__name__)

DEFAULT_SIZE_THRESHOLDS = (3, 4, 5)


@dataclass(frozen=True)
class ProductivitySplit:
    size_threshold: int
    invisible: SplitArtifact
    visible: SplitArtifact
    test: SplitArtifact


def _domain_ok(sample: Sample, domain_filter: frozenset[str] | None) -> bool:
    return domain_filter is None or sample.domain in domain_filter


def construct_invisible_visible(corpus: Corpus, size_threshold: int,
                                r: float = DEFAULT_DIVERGENCE_THRESHOLD,
                                seed: int = 0,
                                domain_filter: frozenset[str] | None = None
                                ) -> tuple[list[Sample], list[Sample]]:
    """Build (invisible, visible) for one size threshold.

    The seed is recorded for provenance; the replacement pass itself is
    deterministic (V-descending candidates, id tie-breaks).
    """
    del seed  # construction is deterministic; kept in artifact metadata upstream
    n = size_threshold
    train = [s for s in corpus.train if _domain_ok(s, domain_filter)]
    invisible = [s for s in train if len(s.units) <= n]
    candidates = [s for s in train if len(s.units) > n]
    if not candidates:
        log.warning("no training samples above threshold %d; visible equals invisible", n)
        return invisible, list(invisible)

    test_needed = {u for t in corpus.test
                   if _domain_ok(t, domain_filter) and len(t.units) > n
                   for u in t.unit_ids}

    visible: dict[str, Sample] = {s.id: s for s in invisible}
    originals: set[str] = set(visible)
    cnt_i: dict[str, int] = {}
    for s in invisible:
        for u in s.unit_ids:
            cnt_i[u] = cnt_i.get(u, 0) + 1
    cnt_v = dict(cnt_i)
    total_i = sum(cnt_i.values())
    if total_i == 0:
        log.warning("invisible is empty at threshold %d; nothing to replace", n)
        return invisible, list(invisible)

    def v_of(sample: Sample) -> int:
        return sum(cnt_i.get(u, 0) - cnt_v.get(u, 0) for u in sample.unit_ids)

    def divergence_after(removed: dict[str, int], added: Sequence[str]) -> float:
        trial = dict(cnt_v)
        for u, c in removed.items():
            trial[u] = trial.get(u, 0) - c
        for u in added:
            trial[u] = trial.get(u, 0) + 1
        total = sum(trial.values())
        if total <= 0:
            return 1.0
        affinity = sum(math.sqrt((cnt_i[u] / total_i) * (c / total))
                       for u, c in trial.items() if c > 0 and cnt_i.get(u, 0) > 0)
        return min(1.0, max(0.0, 1.0 - affinity))

    def try_replace(x: Sample) -> bool:
        x_units = x.unit_id_set
        budget = len(x.units)
        members = sorted((visible[sid] for sid in originals),
                         key=lambda s: (v_of(s), s.id))
        cluster: list[Sample] = []
        removed: dict[str, int] = {}
        removed_sum = 0
        for y in members:
            if removed_sum + len(y.units) > budget:
                continue
            ok = True
            for u in y.unit_ids:
                if u in test_needed:
                    left = cnt_v[u] - removed.get(u, 0) - 1 + (1 if u in x_units else 0)
                    if left < 1:
                        ok = False
                        break
            if not ok:
                continue
            cluster.append(y)
            removed_sum += len(y.units)
            for u in y.unit_ids:
                removed[u] = removed.get(u, 0) + 1
            if removed_sum == budget:
                break
        if removed_sum != budget:
            return False
        if divergence_after(removed, x.unit_ids) > r:
            return False
        for y in cluster:
            del visible[y.id]
            originals.discard(y.id)
            for u in y.unit_ids:
                cnt_v[u] -= 1
        visible[x.id] = x
        for u in x.unit_ids:
            cnt_v[u] = cnt_v.get(u, 0) + 1
        return True

    remaining = list(candidates)
    while remaining:
        remaining.sort(key=lambda s: (-v_of(s), s.id))
        committed_at = None
        for k, x in enumerate(remaining):
            if try_replace(x):
                committed_at = k
                break
        if committed_at is None:
            break
        remaining = remaining[committed_at + 1:]
    return invisible, list(visible.values())


def construct_productivity_test(corpus: Corpus, size_threshold: int,
                                invisible: Sequence[Sample], visible: Sequence[Sample],
                                domain_filter: frozenset[str] | None = None
                                ) -> list[Sample]:
    """Original-test samples above the threshold whose units all appear in both
    training sets."""
    vocab_i = {u for s in invisible for u in s.unit_ids}
    vocab_v = {u for s in visible for u in s.unit_ids}
    usable = vocab_i & vocab_v
    return [t for t in corpus.test
            if _domain_ok(t, domain_filter)
            and len(t.units) > size_threshold
            and t.unit_id_set <= usable]


def build_productivity(corpus: Corpus, size_threshold: int,
                       r: float = DEFAULT_DIVERGENCE_THRESHOLD, seed: int = 0,
                       domain_filter: frozenset[str] | None = None) -> ProductivitySplit:
    invisible, visible = construct_invisible_visible(
        corpus, size_threshold, r=r, seed=seed, domain_filter=domain_filter)
    test = construct_productivity_test(corpus, size_threshold, invisible, visible,
                                       domain_filter=domain_filter)
    meta = {
        "seed": seed, "r": r, "size_threshold": size_threshold,
        "domain_filter": sorted(domain_filter) if domain_filter else None,
    }
    return ProductivitySplit(
        size_threshold=size_threshold,
        invisible=SplitArtifact(Aspect.PRODUCTIVITY, f"invisible_n{size_threshold}",
                                tuple(invisible), dict(meta, n_samples=len(invisible))),
        visible=SplitArtifact(Aspect.PRODUCTIVITY, f"visible_n{size_threshold}",
                              tuple(visible), dict(meta, n_samples=len(visible))),
        test=SplitArtifact(Aspect.PRODUCTIVITY, f"test_n{size_threshold}",
                           tuple(test), dict(meta, n_samples=len(test))),
    )


def _size_histogram(samples: Sequence[Sample], up_to: int) -> dict[int, int]:
    hist = {k: 0 for k in range(1, up_to + 1)}
    for s in samples:
        hist[len(s.units)] = hist.get(len(s.units), 0) + 1
    return hist


def verify_productivity(split: ProductivitySplit,
                        r: float = DEFAULT_DIVERGENCE_THRESHOLD) -> dict:
    """Assert the size bound, exact occurrence-total equality, test coverage and
    the divergence budget; returns per-size histograms on success."""
    n = split.size_threshold
    inv = split.invisible.samples
    vis = split.visible.samples

    oversize = [s.id for s in inv if len(s.units) > n]
    if oversize:
        raise VerificationFailure("invisible size bound",
                                  f"{len(oversize)} samples exceed {n} units")

    total_inv = sum(len(s.units) for s in inv)
    total_vis = sum(len(s.units) for s in vis)
    if total_inv != total_vis:
        raise VerificationFailure("occurrence totals",
                                  f"invisible {total_inv} != visible {total_vis}")

    vocab_i = {u for s in inv for u in s.unit_ids}
    vocab_v = {u for s in vis for u in s.unit_ids}
    for t in split.test.samples:
        missing = t.unit_id_set - vocab_i
        if missing:
            raise VerificationFailure("coverage", f"test unit missing from invisible: {missing}")
        missing = t.unit_id_set - vocab_v
        if missing:
            raise VerificationFailure("coverage", f"test unit missing from visible: {missing}")

    divergence = 0.0
    if inv and vis:
        divergence = chernoff_divergence(unit_distribution(inv), unit_distribution(vis))
        if divergence > r + 1e-12:
            raise VerificationFailure("divergence", f"{divergence} > {r}")

    up_to = max([n] + [len(s.units) for s in vis] + [len(s.units) for s in inv])
    return {
        "size_threshold": n,
        "n_invisible": len(inv),
        "n_visible": len(vis),
        "n_test": len(split.test.samples),
        "unit_occurrences": total_inv,
        "divergence": divergence,
        "histogram_invisible": _size_histogram(inv, up_to),
        "histogram_visible": _size_histogram(vis, up_to),
    }
