"""Rank correlation, score vectors, and paired significance testing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from .errors import InvalidParameter, ItemMismatch, PairingError, TooFewItems

DEFAULT_BOOTSTRAP_RESAMPLES = 10_000


def kendall_tau(order_a: Sequence[Hashable], order_b: Sequence[Hashable]) -> float:
    """Kendall coefficient (concordant - discordant) / (n choose 2) of two
    tie-free rankings over the same item set."""
    if len(order_a) < 2:
        raise TooFewItems(f"need at least 2 items, got {len(order_a)}")
    if len(order_a) != len(set(order_a)) or len(order_b) != len(set(order_b)):
        raise ItemMismatch("rankings must not repeat items")
    if set(order_a) != set(order_b) or len(order_a) != len(order_b):
        raise ItemMismatch("rankings cover different item sets")
    rank_b = {item: i for i, item in enumerate(order_b)}
    n = len(order_a)
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            if rank_b[order_a[i]] < rank_b[order_a[j]]:
                concordant += 1
            else:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) / 2)


@dataclass(frozen=True)
class ScoreVector:
    """Per-sample scores from one evaluation run."""

    scores: tuple[float, ...]
    sample_ids: tuple[str, ...] | None = None
    seed_id: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if any(math.isnan(s) for s in self.scores):
            raise InvalidParameter("score vector contains NaN")
        if self.sample_ids is not None:
            object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
            if len(self.sample_ids) != len(self.scores):
                raise PairingError("sample_ids length differs from scores length")

    def __len__(self) -> int:
        return len(self.scores)

    @property
    def mean(self) -> float:
        return sum(self.scores) / len(self.scores) if self.scores else 0.0


def _check_paired(a: ScoreVector, b: ScoreVector) -> None:
    if len(a) != len(b):
        raise PairingError(f"vectors of length {len(a)} and {len(b)} cannot be paired")
    if a.sample_ids is not None and b.sample_ids is not None and a.sample_ids != b.sample_ids:
        raise PairingError("vectors are paired by sample id and the ids differ")


def paired_significance(scores_a: ScoreVector, scores_b: ScoreVector,
                        resamples: int = DEFAULT_BOOTSTRAP_RESAMPLES,
                        seed: int = 0) -> float:
    """One-sided paired bootstrap p-value for "a is lower than b".

    Sample indices are resampled with replacement; p is the fraction of
    resamples where mean(a) >= mean(b). Deterministic under the seed.
    """
    if resamples < 1:
        raise InvalidParameter(f"resamples must be >= 1, got {resamples}")
    _check_paired(scores_a, scores_b)
    a = np.asarray(scores_a.scores, dtype=np.float64)
    b = np.asarray(scores_b.scores, dtype=np.float64)
    n = len(a)
    if n == 0:
        raise PairingError("cannot bootstrap empty vectors")
    rng = np.random.default_rng(seed)
    hits = 0
    remaining = resamples
    chunk = max(1, min(resamples, 4_000_000 // max(n, 1)))
    while remaining > 0:
        k = min(chunk, remaining)
        idx = rng.integers(0, n, size=(k, n))
        # Equal resample sizes, so comparing sums equals comparing means.
        hits += int(np.count_nonzero(a[idx].sum(axis=1) >= b[idx].sum(axis=1)))
        remaining -= k
    return hits / resamples


def average_over_seeds(vectors: Sequence[ScoreVector]) -> tuple[ScoreVector, float]:
    """Element-wise mean across seed runs, plus the grand mean."""
    if not vectors:
        raise PairingError("no score vectors to average")
    first = vectors[0]
    for v in vectors[1:]:
        _check_paired(first, v)
    n = len(first)
    averaged = tuple(sum(v.scores[i] for v in vectors) / len(vectors) for i in range(n))
    out = ScoreVector(scores=averaged, sample_ids=first.sample_ids)
    return out, out.mean
