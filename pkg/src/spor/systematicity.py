"""Co-occurrence-controlled training splits: Atom, Combination, and their test set.

The test set is grown greedily (largest samples first, uniform among ties);
accepted test samples donate their covering singles to Atom, and samples that
contain more than one test unit are set aside as replacement candidates.
Combination then swaps Atom members for those candidates under a divergence
budget, so the two training sets cover the same atoms with close distributions
but differ in whether atom combinations are visible.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .distribution import (DEFAULT_DIVERGENCE_THRESHOLD, chernoff_divergence,
                           unit_distribution)
from .errors import InvalidParameter, VerificationFailure
from .model import Aspect, Corpus, Sample, SplitArtifact

DEFAULT_RESTARTS = 20


@dataclass(frozen=True)
class SystematicitySplit:
    atom: SplitArtifact
    combination: SplitArtifact
    test: SplitArtifact
    blocked: tuple[Sample, ...]
    atoms: frozenset[str]
    pair_count_atom: int
    pair_count_combination: int


def construct_atom_test(corpus: Corpus, seed: int
                        ) -> tuple[list[Sample], list[Sample], list[Sample]]:
    """Single seeded construction of (atom, test, blocked).

    Candidates are drawn uniformly among the remaining samples of maximal unit
    count. A candidate x is accepted when samples sharing exactly one unit with
    it cover all of x, no Atom member shares two units with it, and no Atom
    member that shares a unit with it already holds an accepted atom (the
    atomicity guard; without it an Atom sample could end up holding atoms of
    two different test samples).
    """
    rng = random.Random(seed)
    samples = list(corpus.train)
    n = len(samples)
    if n == 0:
        return [], [], []
    unit_sets = [s.unit_id_set for s in samples]

    alive = [True] * n
    index_s: dict[str, set[int]] = {}
    for i, us in enumerate(unit_sets):
        for u in us:
            index_s.setdefault(u, set()).add(i)

    buckets: dict[int, list[int]] = {}
    pos_in_bucket: dict[int, int] = {}
    for i, us in enumerate(unit_sets):
        b = buckets.setdefault(len(us), [])
        pos_in_bucket[i] = len(b)
        b.append(i)
    max_size = max(buckets)

    def remove_from_s(i: int) -> None:
        alive[i] = False
        b = buckets[len(unit_sets[i])]
        p = pos_in_bucket.pop(i)
        last = b.pop()
        if last != i:
            b[p] = last
            pos_in_bucket[last] = p
        for u in unit_sets[i]:
            index_s[u].discard(i)

    index_a: dict[str, set[int]] = {}
    pos_a_members: set[int] = set()
    atom_idx: list[int] = []
    test_idx: list[int] = []
    blocked: set[int] = set()
    atom_units: set[str] = set()
    remaining = n

    while remaining > 0:
        while max_size > 0 and not buckets.get(max_size):
            max_size -= 1
        bucket = buckets[max_size]
        x = bucket[rng.randrange(len(bucket))]
        remove_from_s(x)
        remaining -= 1
        x_units = unit_sets[x]

        overlap: dict[int, int] = {}
        for u in x_units:
            for y in index_s.get(u, ()):
                overlap[y] = overlap.get(y, 0) + 1
            for y in index_a.get(u, ()):
                overlap[y] = overlap.get(y, 0) + 1

        covered: set[str] = set()
        for u in x_units:
            for y in index_s.get(u, ()):
                if overlap[y] == 1 and y not in blocked:
                    covered.add(u)
                    break
            else:
                for y in index_a.get(u, ()):
                    if overlap[y] == 1:
                        covered.add(u)
                        break

        a_sharers = [y for y in overlap if y in pos_a_members]
        accept = covered == x_units
        if accept:
            for y in a_sharers:
                if overlap[y] > 1 or (unit_sets[y] & atom_units):
                    accept = False
                    break
        if not accept:
            continue

        test_idx.append(x)
        atom_units |= x_units
        movers = sorted(y for y, c in overlap.items()
                        if c == 1 and alive[y] and y not in blocked)
        for y in movers:
            remove_from_s(y)
            remaining -= 1
            atom_idx.append(y)
            pos_a_members.add(y)
            for u in unit_sets[y]:
                index_a.setdefault(u, set()).add(y)
        for y, c in overlap.items():
            if c > 1 and alive[y]:
                blocked.add(y)

    blocked_list = [samples[i] for i in sorted(blocked)]
    return ([samples[i] for i in atom_idx],
            [samples[i] for i in test_idx],
            blocked_list)


def _atom_counts(samples: Iterable[Sample], atoms: frozenset[str]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for s in samples:
        for u in s.unit_ids:
            if u in atoms:
                counts[u] = counts.get(u, 0) + 1
    return counts


def construct_combination(atom: Sequence[Sample], test: Sequence[Sample],
                          blocked: Sequence[Sample],
                          r: float = DEFAULT_DIVERGENCE_THRESHOLD) -> list[Sample]:
    """Replace clusters of Atom members with blocked samples while preserving
    atom coverage and keeping the atom-distribution divergence within r.

    Candidates are processed in descending V order (V compares a sample's atom
    occurrences in Atom against the current Combination); ties fall back to
    ascending sample id. V only changes when a replacement commits, so the
    candidate list is re-sorted per commit.
    """
    atoms = frozenset(u for s in test for u in s.unit_ids)
    combination: dict[str, Sample] = {s.id: s for s in atom}
    if not atoms:
        return list(combination.values())

    test_ids = {s.id for s in test}
    candidates = [s for s in blocked if s.id not in test_ids]
    a_prime: set[str] = set(combination)

    cnt_a = _atom_counts(atom, atoms)
    cnt_c = dict(cnt_a)
    total_a = sum(cnt_a.values())
    if total_a == 0:
        return list(combination.values())

    def v_of(sample: Sample) -> int:
        return sum(cnt_a.get(u, 0) - cnt_c.get(u, 0)
                   for u in sample.unit_ids if u in atoms)

    def divergence_after(removed: dict[str, int], added: dict[str, int]) -> float:
        trial = dict(cnt_c)
        for u, c in removed.items():
            trial[u] = trial.get(u, 0) - c
        for u, c in added.items():
            trial[u] = trial.get(u, 0) + c
        total = sum(trial.values())
        if total <= 0:
            return 1.0
        affinity = sum(math.sqrt((cnt_a[u] / total_a) * (c / total))
                       for u, c in trial.items() if c > 0 and cnt_a.get(u, 0) > 0)
        return min(1.0, max(0.0, 1.0 - affinity))

    def try_replace(x: Sample) -> bool:
        x_units = x.unit_id_set
        x_atoms = {u: 1 for u in x_units if u in atoms}
        limit = len(x.units)
        members = sorted((combination[sid] for sid in a_prime),
                         key=lambda s: (v_of(s), s.id))
        union: set[str] = set()
        removed: dict[str, int] = {}
        cluster: list[Sample] = []
        for y in members:
            growth = sum(1 for u in y.unit_ids if u not in union)
            if len(union) + growth > limit:
                continue
            ok = True
            for u in y.unit_ids:
                if u in atoms:
                    left = cnt_c[u] - removed.get(u, 0) - 1 + (1 if u in x_units else 0)
                    if left < 1:
                        ok = False
                        break
            if not ok:
                continue
            union.update(y.unit_ids)
            for u in y.unit_ids:
                if u in atoms:
                    removed[u] = removed.get(u, 0) + 1
            cluster.append(y)
        if len(union) != limit:
            return False
        if divergence_after(removed, x_atoms) > r:
            return False
        for y in cluster:
            del combination[y.id]
            a_prime.discard(y.id)
            for u in y.unit_ids:
                if u in atoms:
                    cnt_c[u] -= 1
        combination[x.id] = x
        for u in x_atoms:
            cnt_c[u] = cnt_c.get(u, 0) + 1
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
    return list(combination.values())


def count_atom_pairs(samples: Iterable[Sample], atoms: frozenset[str]) -> int:
    """Distinct unordered pairs of atoms that co-occur within a sample."""
    pairs: set[tuple[str, str]] = set()
    for s in samples:
        present = sorted(u for u in s.unit_ids if u in atoms)
        for i in range(len(present)):
            for j in range(i + 1, len(present)):
                pairs.add((present[i], present[j]))
    return len(pairs)


def best_of_restarts(corpus: Corpus, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                     r: float = DEFAULT_DIVERGENCE_THRESHOLD) -> SystematicitySplit:
    """Run seeded constructions with seeds seed..seed+restarts-1 and keep the
    one with the largest test set (ties favor the lowest restart index)."""
    if restarts < 1:
        raise InvalidParameter("restarts must be >= 1")
    best = None
    best_key = (-1, 0)
    for i in range(restarts):
        atom, test, blocked = construct_atom_test(corpus, seed + i)
        if len(test) > best_key[0]:
            best_key = (len(test), i)
            best = (atom, test, blocked, i)
    atom, test, blocked, restart_index = best
    combination = construct_combination(atom, test, blocked, r=r)
    atoms = frozenset(u for s in test for u in s.unit_ids)
    atom_ids = {a.id for a in atom}
    replaced = sum(1 for s in combination if s.id not in atom_ids)

    base_meta = {
        "seed": seed, "restarts": restarts, "restart_index": restart_index, "r": r,
        "replacements_committed": replaced,
    }
    split = SystematicitySplit(
        atom=SplitArtifact(Aspect.SYSTEMATICITY, "atom", tuple(atom),
                           dict(base_meta, n_samples=len(atom))),
        combination=SplitArtifact(Aspect.SYSTEMATICITY, "combination", tuple(combination),
                                  dict(base_meta, n_samples=len(combination))),
        test=SplitArtifact(Aspect.SYSTEMATICITY, "test", tuple(test),
                           dict(base_meta, n_samples=len(test))),
        blocked=tuple(blocked),
        atoms=atoms,
        pair_count_atom=count_atom_pairs(atom, atoms),
        pair_count_combination=count_atom_pairs(combination, atoms),
    )
    return split


def verify_systematicity(split: SystematicitySplit,
                         r: float = DEFAULT_DIVERGENCE_THRESHOLD) -> dict:
    """Assert the split's guarantees; returns the statistics report on success."""
    atoms = split.atoms
    atom_samples = split.atom.samples
    comb_samples = split.combination.samples

    atom_cov = {u for s in atom_samples for u in s.unit_ids if u in atoms}
    comb_cov = {u for s in comb_samples for u in s.unit_ids if u in atoms}
    if atom_cov != atoms:
        raise VerificationFailure("atom coverage",
                                  f"{len(atoms - atom_cov)} atoms missing from Atom")
    if comb_cov != atoms:
        raise VerificationFailure("combination coverage",
                                  f"{len(atoms - comb_cov)} atoms missing from Combination")

    pairs_atom = count_atom_pairs(atom_samples, atoms)
    if pairs_atom != 0:
        raise VerificationFailure("pair in Atom",
                                  f"{pairs_atom} co-occurring atom pairs in Atom")
    pairs_comb = count_atom_pairs(comb_samples, atoms)
    replaced = int(split.combination.metadata.get("replacements_committed", 0))
    if replaced > 0 and pairs_comb == 0:
        raise VerificationFailure("combination pairs",
                                  "replacements committed but no atom pair visible")

    divergence = 0.0
    if atoms:
        divergence = chernoff_divergence(
            unit_distribution(atom_samples, restrict_to=atoms),
            unit_distribution(comb_samples, restrict_to=atoms))
        if divergence > r + 1e-12:
            raise VerificationFailure("atom divergence", f"{divergence} > {r}")

    def occurrences(samples: Sequence[Sample]) -> int:
        return sum(len(s.units) for s in samples)

    def atom_occurrences(samples: Sequence[Sample]) -> int:
        return sum(1 for s in samples for u in s.unit_ids if u in atoms)

    return {
        "n_test": len(split.test.samples),
        "n_atoms_distinct": len(atoms),
        "divergence": divergence,
        "replacements_committed": replaced,
        "atom": {
            "n_samples": len(atom_samples),
            "unit_occurrences": occurrences(atom_samples),
            "atom_occurrences": atom_occurrences(atom_samples),
            "distinct_atoms": len(atom_cov),
            "pairs": pairs_atom,
        },
        "combination": {
            "n_samples": len(comb_samples),
            "unit_occurrences": occurrences(comb_samples),
            "atom_occurrences": atom_occurrences(comb_samples),
            "distinct_atoms": len(comb_cov),
            "pairs": pairs_comb,
        },
    }
