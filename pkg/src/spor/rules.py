"""Hidden-information test inputs and copy-rule checking.

Triple-style inputs hide qualifying subject entities behind "Entity i" labels;
key-value inputs hide the first numeric token of enumerated values behind
"Value L" labels. An output is checked for (a) copying every hiding phrase
(fuzzy) and (b) surfacing any hidden original; only (1, 0) is a correct copy.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .alignment import tokenize
from .errors import EmptyInventory, EmptyResults, VerificationFailure
from .linearize import linearize
from .model import Corpus, DataUnit, Dialect, Sample, UnitKind, kv, triple

NUMERIC_RE = re.compile(r"[£$€¥]?\d+(?:\.\d+)?")

# Copy-check matching refines the shared tokenizer by splitting tokens at
# internal punctuation (linearized inputs glue brackets onto words); currency
# symbols stay attached to their number.
_MATCH_TOKEN_RE = re.compile(r"[£$€¥]?[^\W_]+", re.UNICODE)

E2E_CANONICAL_ATTRIBUTES = ("eat type", "food", "price range", "customer rating",
                            "area", "family friendly")

RESULT_KEYS = ("(0,0)", "(0,1)", "(1,0)", "(1,1)")


@dataclass(frozen=True)
class HiddenEntry:
    label: str
    original: str  # entity string, or "/"-joined numeric alternatives for key-value
    attribute: str | None = None


@dataclass(frozen=True)
class HiddenSample:
    base: Sample
    hidden: tuple[HiddenEntry, ...]
    dialect: Dialect


@dataclass(frozen=True)
class CopyCheckResult:
    a: int
    b: int
    details: dict

    @property
    def key(self) -> str:
        return f"({self.a},{self.b})"


def _norm(text: str) -> str:
    return " ".join(text.replace("_", " ").casefold().split())


def _ordinal(number: str) -> str:
    n = int(number)
    if 10 <= n % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{number}{suffix}"


def _match_tokens(text: str) -> list[str]:
    tokens = []
    for tok in tokenize(text):
        tokens.extend(_MATCH_TOKEN_RE.findall(tok.casefold()))
    return tokens


def _find_tokens(haystack: Sequence[str], needle: Sequence[str]) -> int | None:
    if not needle or len(needle) > len(haystack):
        return None
    for i in range(len(haystack) - len(needle) + 1):
        if list(haystack[i:i + len(needle)]) == list(needle):
            return i
    return None


# --------------------------------------------------------------------------
# construction: triple dialect


def build_hidden_triple_set(test: Sequence[Sample]) -> list[HiddenSample]:
    """Hide entities that act as subjects and are copied in every reference.

    All subject and object slots equal to a qualifying entity are replaced by
    its label. An entity stays hidden only if its surface form no longer occurs
    anywhere in the remaining input (another entity may embed it as a
    substring); samples with no hidden entity are dropped.
    """
    out = []
    for sample in test:
        if not sample.references:
            continue
        subjects = list(dict.fromkeys(u.subject for u in sample.units))
        qualifying = [e for e in subjects
                      if all(_norm(e) in _norm(ref) for ref in sample.references)]
        while True:
            hidden_set = set(qualifying)
            visible_parts = []
            for u in sample.units:
                if u.subject not in hidden_set:
                    visible_parts.append(u.subject)
                visible_parts.append(u.predicate)
                if u.object not in hidden_set:
                    visible_parts.append(u.object)
            visible = _norm(" | ".join(visible_parts))
            leaked = [e for e in qualifying if _norm(e) in visible]
            if not leaked:
                break
            qualifying = [e for e in qualifying if e not in leaked]
        if not qualifying:
            continue

        hidden_set = set(qualifying)
        labels: dict[str, str] = {}
        for u in sample.units:
            for slot in (u.subject, u.object):
                if slot in hidden_set and slot not in labels:
                    labels[slot] = f"Entity {len(labels) + 1}"
        substituted = [
            triple(labels.get(u.subject, u.subject), u.predicate,
                   labels.get(u.object, u.object))
            for u in sample.units
        ]
        entries = tuple(HiddenEntry(label=labels[e], original=e) for e in labels)
        hidden = HiddenSample(base=sample.with_units(substituted), hidden=entries,
                              dialect=Dialect.TRIPLE)
        _assert_clean(hidden)
        out.append(hidden)
    return out


# --------------------------------------------------------------------------
# construction: key-value dialect


@dataclass(frozen=True)
class HiddenKvConfig:
    """Enumeration knobs; the published construction is underdetermined, so the
    scheme is configuration rather than a promise of an exact sample count."""

    attribute_order: tuple[str, ...] | None = None
    name_value: str | None = None
    excluded_attributes: tuple[str, ...] = ("near",)
    max_samples: int | None = None


def value_inventory(corpus: Corpus) -> dict[str, list[str]]:
    """Distinct values per attribute over the training units, sorted."""
    values: dict[str, set[str]] = {}
    for s in corpus.train:
        for u in s.units:
            values.setdefault(u.attribute, set()).add(u.value)
    return {a: sorted(v) for a, v in sorted(values.items())}


def most_frequent_name(corpus: Corpus) -> str | None:
    counts: dict[str, int] = {}
    for s in corpus.train:
        if s.name_unit is not None:
            counts[s.name_unit.value] = counts.get(s.name_unit.value, 0) + 1
    if not counts:
        return None
    return min(counts, key=lambda v: (-counts[v], v))


def _first_numeric(value: str) -> re.Match | None:
    return NUMERIC_RE.search(value)


def _resolve_attribute_order(inventory: Mapping[str, Sequence[str]],
                             config: HiddenKvConfig) -> list[str]:
    excluded = set(config.excluded_attributes) | {"name"}
    available = [a for a in inventory if a not in excluded and inventory[a]]
    if config.attribute_order is not None:
        order = [a for a in config.attribute_order if a in available]
    else:
        order = [a for a in E2E_CANONICAL_ATTRIBUTES if a in available]
        order += sorted(a for a in available if a not in order)
    return order


def _numeric_alternatives(values: Sequence[str], substituted: str, label: str) -> list[str]:
    """Numeric tokens of inventory values whose hidden form equals `substituted`."""
    tokens = []
    for v in values:
        m = _first_numeric(v)
        if m is None:
            continue
        if v[:m.start()] + label + v[m.end():] == substituted:
            tokens.append(m.group())
    tokens.sort(key=lambda t: (float(re.sub(r"[^\d.]", "", t) or 0), t))
    return list(dict.fromkeys(tokens))


def build_hidden_kv_set(inventory: Mapping[str, Sequence[str]],
                        config: HiddenKvConfig = HiddenKvConfig()) -> list[HiddenSample]:
    """Enumerate attribute assignments (full cross-product) keeping those where
    at least one selected value carries a numeric token, then hide the first
    numeric token of each numeric-bearing value behind "Value L" labels."""
    order = _resolve_attribute_order(inventory, config)
    if not order:
        raise EmptyInventory("no attributes with values to enumerate")
    name_value = config.name_value or "Restaurant"

    assignments: list[list[tuple[str, str]]] = [[]]
    for attribute in order:
        assignments = [assignment + [(attribute, value)]
                       for assignment in assignments
                       for value in inventory[attribute]]

    out = []
    idx = 0
    for assignment in assignments:
        if not any(_first_numeric(v) for _, v in assignment):
            continue
        letter = 0
        units: list[DataUnit] = []
        entries: list[HiddenEntry] = []
        for attribute, value in assignment:
            m = _first_numeric(value)
            if m is None:
                units.append(kv(attribute, value))
                continue
            label = f"Value {chr(ord('A') + letter)}"
            letter += 1
            substituted = value[:m.start()] + label + value[m.end():]
            units.append(kv(attribute, substituted))
            entries.append(HiddenEntry(
                label=label,
                original="/".join(_numeric_alternatives(inventory[attribute],
                                                        substituted, label)),
                attribute=attribute,
            ))
        sample = Sample(
            id=f"hidden-kv-{idx:05d}",
            units=tuple(units),
            references=(),
            name_unit=kv("name", name_value),
        )
        hidden = HiddenSample(base=sample, hidden=tuple(entries), dialect=Dialect.KV)
        _assert_clean(hidden)
        out.append(hidden)
        idx += 1
        if config.max_samples is not None and idx >= config.max_samples:
            break
    return out


def _assert_clean(hidden: HiddenSample) -> None:
    # The substituted input itself must copy every label and surface no original.
    probe = check_copy(hidden, linearize(hidden.base, hidden.dialect))
    if probe.a != 1 or probe.b != 0:
        raise VerificationFailure(
            "hidden original in substituted input",
            f"sample {hidden.base.id}: (a,b)=({probe.a},{probe.b})")


# --------------------------------------------------------------------------
# checking


def _label_phrase(hidden: HiddenSample, entry: HiddenEntry) -> str:
    """The phrase that hides information: the label itself for triples, the
    whole substituted value for key-value inputs."""
    if hidden.dialect is Dialect.TRIPLE:
        return entry.label
    for u in hidden.base.units:
        if u.attribute == entry.attribute and entry.label in u.value:
            return u.value
    return entry.label


def _phrase_variants(phrase: str, label: str) -> list[str]:
    """Accepted copies of a hiding phrase: exact (case-insensitive), ordinal
    number form, and the bare symbol without the Entity/Value word."""
    word, symbol = label.rsplit(" ", 1)
    variants = [phrase]
    if symbol.isdigit():
        variants.append(phrase.replace(label, f"{_ordinal(symbol)} {word}"))
        variants.append(phrase.replace(label, f"{word} {_ordinal(symbol)}"))
    variants.append(phrase.replace(label, symbol))
    return variants


def check_copy(hidden: HiddenSample, output: str) -> CopyCheckResult:
    """Classify one output as (a, b): labels all copied / any original surfaced."""
    out_tokens = _match_tokens(output)
    out_norm = _norm(output)
    copied: dict[str, object] = {}
    surfaced: dict[str, object] = {}

    a = 1
    b = 0
    for entry in hidden.hidden:
        phrase = _label_phrase(hidden, entry)
        span = None
        for variant in _phrase_variants(phrase, entry.label):
            needle = _match_tokens(variant)
            pos = _find_tokens(out_tokens, needle)
            if pos is not None:
                span = (pos, pos + len(needle), variant)
                break
        copied[entry.label] = span
        if span is None:
            a = 0

        if hidden.dialect is Dialect.TRIPLE:
            if _norm(entry.original) and _norm(entry.original) in out_norm:
                surfaced[entry.label] = entry.original
                b = 1
        else:
            for token in filter(None, entry.original.split("/")):
                revealed = phrase.replace(entry.label, token)
                pos = _find_tokens(out_tokens, _match_tokens(revealed))
                if pos is not None:
                    surfaced[entry.label] = revealed
                    b = 1
                    break
    return CopyCheckResult(a=a, b=b, details={"copied": copied, "surfaced": surfaced})


def aggregate_rule_report(results: Sequence[CopyCheckResult]) -> dict[str, float]:
    """Percentages of the four (a, b) cases; they sum to 100."""
    if not results:
        raise EmptyResults("no copy-check results to aggregate")
    counts = {k: 0 for k in RESULT_KEYS}
    for res in results:
        counts[res.key] += 1
    return {k: 100.0 * v / len(results) for k, v in counts.items()}


# --------------------------------------------------------------------------
# file format


def write_hidden(path: Path | str, samples: Sequence[HiddenSample]) -> None:
    from .model import sample_to_record
    with Path(path).open("w", encoding="utf-8") as fh:
        for hs in samples:
            rec = sample_to_record(hs.base)
            rec["dialect"] = hs.dialect.value
            rec["hidden"] = [[e.label, e.original, e.attribute] for e in hs.hidden]
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def read_hidden(path: Path | str) -> list[HiddenSample]:
    from .model import sample_from_record
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            out.append(HiddenSample(
                base=sample_from_record(rec),
                hidden=tuple(HiddenEntry(label=l, original=o, attribute=a)
                             for l, o, a in rec["hidden"]),
                dialect=Dialect(rec["dialect"]),
            ))
    return out
