"""Locate data units in a text and induce a unit order.

Used both to build order-matched training sets and to analyze model outputs.
Entities are matched fuzzily (token-level edit distance, variance-minimizing
position search, uniqueness constraint); key-value units are matched strictly.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .model import Dialect, Sample, UnitKind


class Sentinel(Enum):
    BOUNDARY = "boundary"
    NOT_FOUND = "not_found"


BOUNDARY = Sentinel.BOUNDARY
NOT_FOUND = Sentinel.NOT_FOUND

Position = "int | Sentinel"

_PUNCT = set(string.punctuation)

# Candidate sets larger than this are trimmed before the position search.
MAX_CANDIDATES_PER_TOKEN = 64
# Hard cap on search-tree expansions; beyond it the best found so far is kept.
_MAX_DFS_NODES = 500_000


def tokenize(text: str) -> list[str]:
    """Whitespace split with leading/trailing punctuation detached as own tokens."""
    tokens: list[str] = []
    for chunk in text.split():
        head: list[str] = []
        tail: list[str] = []
        while chunk and chunk[0] in _PUNCT:
            head.append(chunk[0])
            chunk = chunk[1:]
        while chunk and chunk[-1] in _PUNCT:
            tail.append(chunk[-1])
            chunk = chunk[:-1]
        tokens.extend(head)
        if chunk:
            tokens.append(chunk)
        tokens.extend(reversed(tail))
    return tokens


def edit_distance(a: str, b: str) -> int:
    """Character-level Levenshtein distance."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def entity_tokens(entity: str) -> list[str]:
    """Slice an entity into lowercase tokens; underscores act as separators."""
    return [t.casefold() for t in tokenize(entity.replace("_", " "))]


def _candidate_sets(entity: str, text_tokens: Sequence[str]) -> list[list[int]]:
    """Per entity token, text positions at minimal edit distance within threshold.

    Empty candidate sets are dropped; an entity whose sets are all empty has no
    representation in the text.
    """
    sets: list[list[int]] = []
    for tok in entity_tokens(entity):
        best = None
        positions: list[int] = []
        for idx, word in enumerate(text_tokens):
            d = edit_distance(tok, word)
            if best is None or d < best:
                best = d
                positions = [idx]
            elif d == best:
                positions.append(idx)
        if best is not None and best <= min(2, len(tok)):
            sets.append(positions)
    return sets


def _trim_candidates(sets: list[list[int]]) -> list[list[int]]:
    if all(len(s) <= MAX_CANDIDATES_PER_TOKEN for s in sets):
        return sets
    # Reference point for trimming: mean of the per-set means.
    ref = sum(sum(s) / len(s) for s in sets) / len(sets)
    trimmed = []
    for s in sets:
        if len(s) <= MAX_CANDIDATES_PER_TOKEN:
            trimmed.append(s)
        else:
            keep = sorted(s, key=lambda p: (abs(p - ref), p))[:MAX_CANDIDATES_PER_TOKEN]
            trimmed.append(sorted(keep))
    return trimmed


def _min_variance_representations(sets: list[list[int]]) -> list[tuple[int, ...]]:
    """All selections (one position per set) minimizing the variance of positions.

    Depth-first search with branch-and-bound pruning; comparisons use the exact
    integer objective n*sum(p^2) - (sum(p))^2, which orders selections the same
    way as variance does for a fixed n.
    """
    sets = _trim_candidates(sets)
    n = len(sets)
    best_m: int | None = None
    best: list[tuple[int, ...]] = []
    nodes = 0

    def dfs(depth: int, s1: int, s2: int, chosen: list[int]):
        nonlocal best_m, best, nodes
        nodes += 1
        if nodes > _MAX_DFS_NODES:
            return
        if depth == n:
            m = n * s2 - s1 * s1
            if best_m is None or m < best_m:
                best_m = m
                best = [tuple(chosen)]
            elif m == best_m:
                best.append(tuple(chosen))
            return
        if best_m is not None and depth > 0:
            # Partial sum of squared deviations never decreases as positions are
            # added, so prune when it already exceeds the best final variance.
            # SS_partial > best_variance  <=>  n*(k*s2 - s1^2) > k*best_m
            if n * (depth * s2 - s1 * s1) > depth * best_m:
                return
        for p in sets[depth]:
            chosen.append(p)
            dfs(depth + 1, s1 + p, s2 + p * p, chosen)
            chosen.pop()

    dfs(0, 0, 0, [])
    return best


def localize_entities(entities: Sequence[str], text: str) -> dict[str, "int | Sentinel"]:
    """Assign each entity a token position in the text, or BOUNDARY.

    Entities with fewer surviving representations are resolved first; a chosen
    representation may not touch positions already claimed as representatives
    by other entities.
    """
    text_tokens = [t.casefold() for t in tokenize(text)]
    ordered = list(dict.fromkeys(entities))
    reps: dict[str, list[tuple[int, ...]]] = {}
    for ent in ordered:
        sets = _candidate_sets(ent, text_tokens)
        reps[ent] = _min_variance_representations(sets) if sets else []

    positions: dict[str, int | Sentinel] = {}
    claimed: set[int] = set()
    order = sorted(range(len(ordered)), key=lambda i: (len(reps[ordered[i]]), i))
    for i in order:
        ent = ordered[i]
        candidates = [r for r in reps[ent] if not claimed.intersection(r)]
        if not candidates:
            positions[ent] = BOUNDARY
            continue
        rep = min(candidates, key=lambda r: (min(r), r))
        positions[ent] = min(rep)
        claimed.add(min(rep))
    return positions


def boundary_fraction(positions: Mapping[str, "int | Sentinel"]) -> float:
    if not positions:
        return 0.0
    return sum(1 for p in positions.values() if isinstance(p, Sentinel)) / len(positions)


def order_triples(sample: Sample,
                  entity_positions: Mapping[str, "int | Sentinel"]) -> tuple[str, ...] | None:
    """Order the sample's triples by the entity-degree rule, or None if any
    entity sits at a sentinel position.

    The triple set is an undirected multigraph over entities; a triple takes the
    position of its smaller-degree endpoint, or the larger of the two positions
    on a degree tie. Equal triple positions keep the input order.
    """
    degree: dict[str, int] = {}
    for unit in sample.units:
        degree[unit.subject] = degree.get(unit.subject, 0) + 1
        degree[unit.object] = degree.get(unit.object, 0) + 1
    for ent in degree:
        pos = entity_positions.get(ent, BOUNDARY)
        if isinstance(pos, Sentinel):
            return None
    keyed = []
    for idx, unit in enumerate(sample.units):
        ps = entity_positions[unit.subject]
        po = entity_positions[unit.object]
        ds, do = degree[unit.subject], degree[unit.object]
        if ds < do:
            pos = ps
        elif do < ds:
            pos = po
        else:
            pos = max(ps, po)
        keyed.append((pos, idx, unit.uid))
    keyed.sort(key=lambda t: (t[0], t[1]))
    return tuple(uid for _, _, uid in keyed)


def localize_values(sample: Sample, text: str,
                    lexicon: Mapping[str, Mapping[str, list[str]]] | None = None
                    ) -> dict[str, "int | Sentinel"]:
    """Strictly match each unit's value (or lexicon surface forms) in the text.

    Returns unit id -> first token index of the leftmost match, or NOT_FOUND.
    """
    text_tokens = [t.casefold() for t in tokenize(text)]
    out: dict[str, int | Sentinel] = {}
    for unit in sample.units:
        forms = [unit.value]
        if lexicon:
            forms = list(lexicon.get(unit.attribute, {}).get(unit.value, [])) or forms
        best: int | Sentinel = NOT_FOUND
        for form in forms:
            needle = [t.casefold() for t in tokenize(form)]
            pos = _find_subsequence(text_tokens, needle)
            if pos is not None and (isinstance(best, Sentinel) or pos < best):
                best = pos
        out[unit.uid] = best
    return out


def _find_subsequence(haystack: Sequence[str], needle: Sequence[str]) -> int | None:
    if not needle or len(needle) > len(haystack):
        return None
    for i in range(len(haystack) - len(needle) + 1):
        if haystack[i:i + len(needle)] == list(needle):
            return i
    return None


def _kv_order(sample: Sample, positions: Mapping[str, "int | Sentinel"],
              unit_ids: Sequence[str]) -> tuple[str, ...]:
    index = {uid: i for i, uid in enumerate(sample.unit_ids)}
    return tuple(sorted(unit_ids, key=lambda uid: (positions[uid], index[uid])))


@dataclass(frozen=True)
class AlignmentOutcome:
    """Positions of a sample's units (or entities) in one text."""

    positions: Mapping[str, "int | Sentinel"]
    unit_order: tuple[str, ...] | None
    boundary_fraction: float


def align_sample(sample: Sample, text: str, dialect: Dialect,
                 lexicon: Mapping | None = None) -> AlignmentOutcome:
    """Localize every unit of the sample in the text and induce the full order.

    ``unit_order`` is None whenever any required position is a sentinel.
    """
    if dialect is Dialect.TRIPLE:
        entities = _sample_entities(sample)
        positions = localize_entities(entities, text)
        order = order_triples(sample, positions)
        return AlignmentOutcome(positions, order, boundary_fraction(positions))
    positions = localize_values(sample, text, lexicon)
    frac = boundary_fraction(positions)
    if any(isinstance(p, Sentinel) for p in positions.values()):
        return AlignmentOutcome(positions, None, frac)
    return AlignmentOutcome(positions, _kv_order(sample, positions, sample.unit_ids), frac)


def _sample_entities(sample: Sample) -> list[str]:
    entities = []
    for unit in sample.units:
        entities.append(unit.subject)
        entities.append(unit.object)
    return list(dict.fromkeys(entities))


def extract_output_units(sample: Sample, output_text: str, dialect: Dialect,
                         lexicon: Mapping | None = None
                         ) -> tuple[frozenset[str], tuple[str, ...] | None]:
    """Detect which input units an output text realizes, and in what order.

    A triple is present only when both its endpoint entities localize to real
    positions; a key-value unit is present when its value matches. Detection
    never reports units outside the sample's input set.
    """
    if dialect is Dialect.TRIPLE:
        positions = localize_entities(_sample_entities(sample), output_text)
        present = [u for u in sample.units
                   if not isinstance(positions[u.subject], Sentinel)
                   and not isinstance(positions[u.object], Sentinel)]
        if not present:
            return frozenset(), tuple()
        sub = Sample(id=sample.id, units=tuple(present))
        order = order_triples(sub, positions)
        return frozenset(u.uid for u in present), order
    positions = localize_values(sample, output_text, lexicon)
    present_ids = [uid for uid, p in positions.items() if not isinstance(p, Sentinel)]
    return frozenset(present_ids), _kv_order(sample, positions, present_ids)
