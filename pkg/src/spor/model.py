"""Canonical data model: units, samples, corpora, split artifacts, and their file formats.

All types are immutable after construction and safe to share across workers.
The canonical corpus file is line-delimited JSON, one sample per line; a corpus
directory holds ``train.jsonl``, ``test.jsonl`` and ``meta.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping

from .errors import InvalidSample, InvalidUnit, ParseError


class Dialect(str, Enum):
    TRIPLE = "triple"
    KV = "kv"


class UnitKind(str, Enum):
    TRIPLE = "triple"
    KV = "kv"


class Aspect(str, Enum):
    SYSTEMATICITY = "systematicity"
    PRODUCTIVITY = "productivity"
    ORDER_INVARIANCE = "order"
    RULE_LEARNABILITY = "rules"


@dataclass(frozen=True)
class DataUnit:
    """One triple (subject, predicate, object) or one attribute-value pair."""

    kind: UnitKind
    subject: str = ""
    predicate: str = ""
    object: str = ""
    attribute: str = ""
    value: str = ""

    def __post_init__(self):
        for name in ("subject", "predicate", "object", "attribute", "value"):
            object.__setattr__(self, name, getattr(self, name).strip())
        if self.kind is UnitKind.TRIPLE:
            if not (self.subject and self.predicate and self.object):
                raise InvalidUnit(f"triple unit with empty field: {self!r}")
        else:
            if not (self.attribute and self.value):
                raise InvalidUnit(f"key-value unit with empty field: {self!r}")

    @property
    def fields(self) -> tuple[str, ...]:
        if self.kind is UnitKind.TRIPLE:
            return (self.subject, self.predicate, self.object)
        return (self.attribute, self.value)

    @property
    def uid(self) -> str:
        return canonical_unit_id(self)


def triple(subject: str, predicate: str, obj: str) -> DataUnit:
    return DataUnit(UnitKind.TRIPLE, subject=subject, predicate=predicate, object=obj)


def kv(attribute: str, value: str) -> DataUnit:
    return DataUnit(UnitKind.KV, attribute=attribute, value=value)


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace("|", "\\|")


def canonical_unit_id(unit: DataUnit) -> str:
    """Deterministic identity string, injective over distinct field tuples.

    Fields are whitespace-trimmed (at construction), case-preserved, and joined
    with ``|``; any ``|`` or ``\\`` inside a field is escaped so the join stays
    injective.
    """
    tag = "T" if unit.kind is UnitKind.TRIPLE else "K"
    return "|".join([tag] + [_escape(f) for f in unit.fields])


@dataclass(frozen=True)
class Sample:
    """An unordered set of data units with reference texts.

    ``units`` carries a presentation order; identity is the id set. The E2E
    name pair lives in ``name_unit`` and is not a data unit.
    """

    id: str
    units: tuple[DataUnit, ...]
    references: tuple[str, ...] = ()
    domain: str | None = None
    name_unit: DataUnit | None = None

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "references", tuple(self.references))
        if not self.units:
            raise InvalidSample(f"sample {self.id!r} has no units")
        ids = [u.uid for u in self.units]
        if len(set(ids)) != len(ids):
            raise InvalidSample(f"sample {self.id!r} has duplicate units")
        if self.name_unit is not None and self.name_unit.kind is not UnitKind.KV:
            raise InvalidSample(f"sample {self.id!r} name_unit must be a key-value unit")

    @property
    def unit_ids(self) -> tuple[str, ...]:
        return tuple(u.uid for u in self.units)

    @property
    def unit_id_set(self) -> frozenset[str]:
        return frozenset(u.uid for u in self.units)

    def with_units(self, units: Iterable[DataUnit]) -> "Sample":
        return replace(self, units=tuple(units))


@dataclass(frozen=True)
class Corpus:
    dialect: Dialect
    train: tuple[Sample, ...]
    test: tuple[Sample, ...]

    def __post_init__(self):
        object.__setattr__(self, "train", tuple(self.train))
        object.__setattr__(self, "test", tuple(self.test))

    @property
    def unit_vocabulary(self) -> frozenset[str]:
        return frozenset(uid for s in self.train for uid in s.unit_ids)


@dataclass(frozen=True)
class SplitArtifact:
    """A named constructed dataset plus the provenance needed to rebuild it."""

    aspect: Aspect
    name: str
    samples: tuple[Sample, ...]
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))


# --------------------------------------------------------------------------
# canonical file format


def unit_to_record(unit: DataUnit) -> dict:
    if unit.kind is UnitKind.TRIPLE:
        return {"kind": "triple", "subject": unit.subject,
                "predicate": unit.predicate, "object": unit.object}
    return {"kind": "kv", "attribute": unit.attribute, "value": unit.value}


def unit_from_record(rec: Mapping) -> DataUnit:
    if rec.get("kind") == "triple":
        return triple(rec["subject"], rec["predicate"], rec["object"])
    if rec.get("kind") == "kv":
        return kv(rec["attribute"], rec["value"])
    raise InvalidUnit(f"unknown unit kind {rec.get('kind')!r}")


def sample_to_record(sample: Sample) -> dict:
    rec: dict = {
        "id": sample.id,
        "units": [unit_to_record(u) for u in sample.units],
        "references": list(sample.references),
    }
    if sample.domain is not None:
        rec["domain"] = sample.domain
    if sample.name_unit is not None:
        rec["name_unit"] = unit_to_record(sample.name_unit)
    return rec


def sample_from_record(rec: Mapping) -> Sample:
    name_unit = rec.get("name_unit")
    return Sample(
        id=rec["id"],
        units=tuple(unit_from_record(u) for u in rec["units"]),
        references=tuple(rec.get("references", ())),
        domain=rec.get("domain"),
        name_unit=unit_from_record(name_unit) if name_unit else None,
    )


def dumps_record(rec: Mapping) -> str:
    return json.dumps(rec, sort_keys=True, ensure_ascii=False)


def write_samples(path: Path | str, samples: Iterable[Sample]) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(dumps_record(sample_to_record(sample)) + "\n")


def read_samples(path: Path | str) -> list[Sample]:
    samples = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                samples.append(sample_from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, InvalidUnit, InvalidSample) as exc:
                raise ParseError(str(exc), line=n) from exc
    return samples


def write_corpus(out_dir: Path | str, corpus: Corpus, extra_meta: Mapping | None = None) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_samples(out_dir / "train.jsonl", corpus.train)
    write_samples(out_dir / "test.jsonl", corpus.test)
    meta = {"dialect": corpus.dialect.value}
    if extra_meta:
        meta.update(extra_meta)
    (out_dir / "meta.json").write_text(
        json.dumps(meta, sort_keys=True, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def read_corpus(corpus_dir: Path | str) -> Corpus:
    corpus_dir = Path(corpus_dir)
    meta = json.loads((corpus_dir / "meta.json").read_text(encoding="utf-8"))
    return Corpus(
        dialect=Dialect(meta["dialect"]),
        train=tuple(read_samples(corpus_dir / "train.jsonl")),
        test=tuple(read_samples(corpus_dir / "test.jsonl")),
    )


def read_corpus_meta(corpus_dir: Path | str) -> dict:
    return json.loads((Path(corpus_dir) / "meta.json").read_text(encoding="utf-8"))


def write_artifact(out_dir: Path | str, artifact: SplitArtifact) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_samples(out_dir / f"{artifact.name}.jsonl", artifact.samples)
    meta = {"aspect": artifact.aspect.value, "name": artifact.name,
            "metadata": dict(artifact.metadata)}
    (out_dir / f"{artifact.name}.meta.json").write_text(
        json.dumps(meta, sort_keys=True, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def read_artifact(out_dir: Path | str, name: str) -> SplitArtifact:
    out_dir = Path(out_dir)
    meta = json.loads((out_dir / f"{name}.meta.json").read_text(encoding="utf-8"))
    return SplitArtifact(
        aspect=Aspect(meta["aspect"]),
        name=meta["name"],
        samples=tuple(read_samples(out_dir / f"{name}.jsonl")),
        metadata=meta.get("metadata", {}),
    )
