"""Load source corpora, apply the retention filters, and emit canonical files.

Two source dialects are supported: triple-style benchmark files (XML or JSON)
and key-value-style CSV files with ``mr`` and ``ref`` columns. Adapters are
isolated so new dialects can be added without touching the filters.
"""

from __future__ import annotations

import csv
import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import EmptyCorpus, ParseError
from .model import Corpus, DataUnit, Dialect, Sample, kv, triple

log = logging.getLogger(__name__)

Lexicon = Mapping[str, Mapping[str, list[str]]]

_MR_PAIR_RE = re.compile(r"([^\[\],]+)\[([^\]]*)\]")


@dataclass(frozen=True)
class IngestOptions:
    """Filter configuration; the lexicon maps attribute -> value -> surface forms."""

    lexicon: Lexicon | None = None
    filter_test_vocabulary: bool = True   # triple dialect
    filter_value_match: bool = True       # key-value dialect


@dataclass(frozen=True)
class CorpusStats:
    n_train: int
    n_test: int
    n_distinct_units: int
    n_distinct_attributes: int | None
    size_histogram_train: dict[int, int]
    size_histogram_test: dict[int, int]

    def to_json(self) -> dict:
        out = {
            "n_train": self.n_train,
            "n_test": self.n_test,
            "n_distinct_units": self.n_distinct_units,
            "size_histogram_train": {str(k): v for k, v in sorted(self.size_histogram_train.items())},
            "size_histogram_test": {str(k): v for k, v in sorted(self.size_histogram_test.items())},
        }
        if self.n_distinct_attributes is not None:
            out["n_distinct_attributes"] = self.n_distinct_attributes
        return out


# --------------------------------------------------------------------------
# triple-style sources


def _parse_triple_text(raw: str, line: int | None = None) -> DataUnit:
    parts = raw.split(" | ")
    if len(parts) != 3:
        raise ParseError(f"expected 's | p | o', got {raw!r}", line=line)
    return triple(*parts)


def parse_triple_xml(path: Path | str, id_prefix: str) -> list[Sample]:
    """Benchmark XML: entry elements with modifiedtripleset/mtriple and lex children."""
    try:
        tree = ET.parse(str(path))
    except ET.ParseError as exc:
        raise ParseError(f"bad XML in {path}: {exc}") from exc
    samples = []
    for n, entry in enumerate(tree.getroot().iter("entry")):
        units = []
        seen = set()
        for mtriple in entry.iter("mtriple"):
            unit = _parse_triple_text((mtriple.text or "").strip(), line=n + 1)
            if unit.uid not in seen:
                seen.add(unit.uid)
                units.append(unit)
        references = tuple((lex.text or "").strip() for lex in entry.iter("lex")
                           if (lex.text or "").strip())
        if not units:
            log.warning("skipping entry %d in %s: no triples", n + 1, path)
            continue
        samples.append(Sample(
            id=f"{id_prefix}-{n:05d}",
            units=tuple(units),
            references=references,
            domain=entry.get("category") or None,
        ))
    return samples


def parse_triple_json(path: Path | str, id_prefix: str) -> list[Sample]:
    """Benchmark JSON export: {"entries": [{"<n>": {...}}, ...]}."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON in {path}: {exc}") from exc
    samples = []
    entries = payload.get("entries", payload if isinstance(payload, list) else [])
    for n, wrapper in enumerate(entries):
        if isinstance(wrapper, dict) and "modifiedtripleset" not in wrapper and len(wrapper) == 1:
            entry = next(iter(wrapper.values()))
        else:
            entry = wrapper
        try:
            raw_units = entry["modifiedtripleset"]
            units = []
            seen = set()
            for t in raw_units:
                unit = triple(t["subject"], t["property"], t["object"])
                if unit.uid not in seen:
                    seen.add(unit.uid)
                    units.append(unit)
            references = tuple(l["lex"] for l in entry.get("lexicalisations", [])
                               if l.get("lex", "").strip())
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed entry: {exc}", line=n + 1) from exc
        if not units:
            continue
        samples.append(Sample(
            id=f"{id_prefix}-{n:05d}",
            units=tuple(units),
            references=references,
            domain=entry.get("category") or None,
        ))
    return samples


def parse_triple_source(path: Path | str, id_prefix: str) -> list[Sample]:
    path = Path(path)
    if path.suffix.lower() == ".xml":
        return parse_triple_xml(path, id_prefix)
    if path.suffix.lower() == ".json":
        return parse_triple_json(path, id_prefix)
    raise ParseError(f"unsupported triple source format: {path.name}")


# --------------------------------------------------------------------------
# key-value-style sources


def _spaced_lower(attribute: str) -> str:
    """eatType -> eat type, familyFriendly -> family friendly; spaced names pass through."""
    out = re.sub(r"(?<=[a-z])(?=[A-Z])", " ", attribute.strip())
    return out.lower()


def parse_mr(mr: str, line: int | None = None) -> tuple[DataUnit | None, list[DataUnit]]:
    """Split an 'attr[value], attr[value]' string into (name unit, data units)."""
    name_unit = None
    units: list[DataUnit] = []
    seen = set()
    matched_span = 0
    for m in _MR_PAIR_RE.finditer(mr):
        matched_span += 1
        attribute = _spaced_lower(m.group(1))
        value = m.group(2).strip()
        if not value:
            raise ParseError(f"empty value for attribute {attribute!r}", line=line)
        unit = kv(attribute, value)
        if attribute == "name":
            name_unit = unit
        elif unit.uid not in seen:
            seen.add(unit.uid)
            units.append(unit)
    if matched_span == 0:
        raise ParseError(f"no attribute[value] pairs in {mr!r}", line=line)
    return name_unit, units


def parse_kv_csv(path: Path | str, id_prefix: str) -> list[Sample]:
    """CSV with 'mr' and 'ref' columns; consecutive rows sharing an MR merge
    into one multi-reference sample."""
    rows = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "mr" not in reader.fieldnames or "ref" not in reader.fieldnames:
            raise ParseError(f"{path}: need 'mr' and 'ref' columns, got {reader.fieldnames}")
        for n, row in enumerate(reader, start=2):
            rows.append((n, row["mr"], row["ref"]))
    samples: list[Sample] = []
    idx = 0
    i = 0
    while i < len(rows):
        line, mr, _ = rows[i]
        refs = []
        j = i
        while j < len(rows) and rows[j][1] == mr:
            refs.append(rows[j][2].strip())
            j += 1
        name_unit, units = parse_mr(mr, line=line)
        if not units:
            log.warning("skipping MR with no data units at line %d of %s", line, path)
        else:
            samples.append(Sample(
                id=f"{id_prefix}-{idx:05d}",
                units=tuple(units),
                references=tuple(r for r in refs if r),
                name_unit=name_unit,
            ))
            idx += 1
        i = j
    return samples


def value_matches(value: str, attribute: str, text: str, lexicon: Lexicon | None) -> bool:
    """Literal case-insensitive substring, with per-attribute lexicon override."""
    forms = [value]
    if lexicon:
        override = lexicon.get(attribute, {}).get(value)
        if override:
            forms = list(override)
    lowered = text.casefold()
    return any(form.casefold() in lowered for form in forms)


def _kv_sample_matches(sample: Sample, lexicon: Lexicon | None) -> bool:
    if not sample.references:
        return False
    units = list(sample.units)
    if sample.name_unit is not None:
        units.append(sample.name_unit)
    for ref in sample.references:
        for unit in units:
            if not value_matches(unit.value, unit.attribute, ref, lexicon):
                return False
    return True


# --------------------------------------------------------------------------
# public entry points


def load_corpus(dialect: Dialect, train_path: Path | str, test_path: Path | str,
                options: IngestOptions = IngestOptions()) -> Corpus:
    """Parse both splits under the dialect adapter and apply the retention filters."""
    if dialect is Dialect.TRIPLE:
        train = parse_triple_source(train_path, "train")
        test = parse_triple_source(test_path, "test")
        if not train:
            raise EmptyCorpus(f"no training samples parsed from {train_path}")
        if options.filter_test_vocabulary:
            vocabulary = {uid for s in train for uid in s.unit_ids}
            test = [s for s in test if s.unit_id_set <= vocabulary]
        corpus = Corpus(dialect=dialect, train=tuple(train), test=tuple(test))
        assert {u for s in corpus.test for u in s.unit_ids} <= corpus.unit_vocabulary
        return corpus
    train = parse_kv_csv(train_path, "train")
    test = parse_kv_csv(test_path, "test")
    if options.filter_value_match:
        train = [s for s in train if _kv_sample_matches(s, options.lexicon)]
        test = [s for s in test if _kv_sample_matches(s, options.lexicon)]
    if not train:
        raise EmptyCorpus(f"no training samples retained from {train_path}")
    return Corpus(dialect=dialect, train=tuple(train), test=tuple(test))


def corpus_stats(corpus: Corpus) -> CorpusStats:
    def histogram(samples: Iterable[Sample]) -> dict[int, int]:
        hist: dict[int, int] = {}
        for s in samples:
            hist[len(s.units)] = hist.get(len(s.units), 0) + 1
        if hist:
            hist = {k: hist.get(k, 0) for k in range(1, max(hist) + 1)}
        return hist

    distinct_units = {uid for s in corpus.train for uid in s.unit_ids}
    attributes = None
    if corpus.dialect is Dialect.KV:
        attributes = len({u.attribute for s in corpus.train for u in s.units})
    return CorpusStats(
        n_train=len(corpus.train),
        n_test=len(corpus.test),
        n_distinct_units=len(distinct_units),
        n_distinct_attributes=attributes,
        size_histogram_train=histogram(corpus.train),
        size_histogram_test=histogram(corpus.test),
    )


def load_lexicon(path: Path | str | None) -> Lexicon | None:
    if path is None:
        return None
    return json.loads(Path(path).read_text(encoding="utf-8"))
