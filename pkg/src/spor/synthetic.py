"""Seeded synthetic corpora for tests, smoke runs, and invariant sweeps.

Vocabulary pools are chosen so that distinct tokens sit at Levenshtein
distance greater than 2 from each other and from the prompt scaffolding;
entity localization on synthetic references and echoed prompts is then exact.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

from .model import Corpus, DataUnit, Dialect, Sample, kv, triple

ADJECTIVES = (
    "amber", "bright", "crimson", "dusty", "emerald", "frosty", "golden",
    "hollow", "jagged", "lunar", "mossy", "noble", "orange", "purple",
    "quiet", "rustic", "silver", "velvet", "winding", "zigzag",
)
NOUNS = (
    "anchor", "beacon", "castle", "dragon", "engine", "falcon", "garden",
    "harbor", "island", "jungle", "kettle", "lantern", "meadow", "needle",
    "orchard", "pillar", "quarry", "ribbon", "summit", "tunnel",
)
PREDICATES = (
    "administers", "borders", "celebrates", "dominates", "educates",
    "finances", "governs", "hostsEvent", "includes", "joinsWith",
    "licenses", "manages", "navigates", "operates", "powersUp",
    "regulates", "supplies", "transports", "unitesWith", "validates",
)
# Tokens that appear in prompts and synthetic references around the entities.
SCAFFOLD_TOKENS = ("head", "relation", "tail", "translate", "from", "Triple",
                   "Text", "MR", "to", "the", "and", "has", "listed", "is")

KV_ATTRIBUTES = ("area", "brand", "comfort", "diet", "energy", "flavor")
KV_VALUES = {
    "area": ("arctic", "breezy", "coastal", "downtown"),
    "brand": ("copperline", "fernwood", "larkspur", "mistral"),
    "comfort": ("plush", "spartan", "standard"),
    "diet": ("herbal", "paleo", "vegan"),
    "energy": ("3 out of 5", "5 out of 5", "low tier"),
    "flavor": ("mellow", "smoky", "tangy"),
}
KV_NAMES = ("Blue Finch", "Green Gate", "Red Mill", "Stone Arch")


def entity_pool() -> list[str]:
    return [f"{a} {n}" for a in ADJECTIVES for n in NOUNS]


def _verbalize_triples(units: Sequence[DataUnit], order: Sequence[int]) -> str:
    parts = [f"{units[i].subject} {units[i].predicate} {units[i].object} ." for i in order]
    return " ".join(parts)


def synthetic_triple_corpus(seed: int, n_units: int = 60, n_composites: int = 40,
                            n_singletons: int | None = None, n_test: int = 15,
                            duplicate_rate: float = 0.25,
                            max_size: int = 4) -> Corpus:
    """Triple-style corpus with singleton coverage, overlapping composites and
    duplicates, shaped so that all four suite builders have material to work on."""
    rng = random.Random(seed)
    entities = entity_pool()
    rng.shuffle(entities)

    pool: list[DataUnit] = []
    seen = set()
    while len(pool) < n_units:
        subject = rng.choice(entities[: n_units // 2])
        obj = rng.choice(entities[n_units // 2: n_units + n_units // 2])
        unit = triple(subject, rng.choice(PREDICATES), obj)
        if unit.uid not in seen:
            seen.add(unit.uid)
            pool.append(unit)

    def disjoint_sample(size: int, from_pool: list[DataUnit]) -> list[DataUnit] | None:
        if size > len(from_pool):
            return None
        for _ in range(60):
            units = rng.sample(from_pool, size)
            tokens: list[str] = []
            for u in units:
                tokens.extend(u.subject.split())
                tokens.extend(u.object.split())
            if len(set(tokens)) == len(tokens):
                return units
        return None

    train: list[Sample] = []
    idx = 0

    def add(units: Sequence[DataUnit], domain: str) -> None:
        nonlocal idx
        order = list(range(len(units)))
        rng.shuffle(order)
        ref = _verbalize_triples(units, order)
        train.append(Sample(id=f"train-{idx:05d}", units=tuple(units),
                            references=(ref,), domain=domain))
        idx += 1

    composites: list[list[DataUnit]] = []
    for _ in range(n_composites):
        size = rng.randint(2, max_size)
        units = disjoint_sample(size, pool)
        if units is None:
            continue
        composites.append(units)
        add(units, domain=rng.choice(("north", "south", "east", "west")))
        if rng.random() < duplicate_rate:
            add(units, domain=rng.choice(("north", "south", "east", "west")))

    if n_singletons is None:
        covered_ids = {u.uid for c in composites for u in c}
        singles = [u for u in pool if u.uid in covered_ids]
    else:
        singles = pool[:n_singletons]
    for u in singles:
        add([u], domain=rng.choice(("north", "south", "east", "west")))

    trained = [u for u in pool if u.uid in {x.uid for s in train for x in s.units}]
    test: list[Sample] = []
    for t in range(n_test):
        size = rng.randint(2, min(max_size, max(2, len(trained))))
        units = disjoint_sample(size, trained)
        if units is None:
            continue
        order = list(range(len(units)))
        rng.shuffle(order)
        test.append(Sample(id=f"test-{t:05d}", units=tuple(units),
                           references=(_verbalize_triples(units, order),),
                           domain=rng.choice(("north", "south", "east", "west"))))
    return Corpus(dialect=Dialect.TRIPLE, train=tuple(train), test=tuple(test))


def synthetic_kv_corpus(seed: int, n_train: int = 60, n_test: int = 15) -> Corpus:
    rng = random.Random(seed)

    def build(prefix: str, count: int) -> list[Sample]:
        samples = []
        for i in range(count):
            attrs = rng.sample(KV_ATTRIBUTES, rng.randint(1, 4))
            units = [kv(a, rng.choice(KV_VALUES[a])) for a in attrs]
            name = rng.choice(KV_NAMES)
            order = list(range(len(units)))
            rng.shuffle(order)
            parts = [f"{name} is listed ."]
            parts += [f"it has {units[j].attribute} {units[j].value} ." for j in order]
            samples.append(Sample(id=f"{prefix}-{i:05d}", units=tuple(units),
                                  references=(" ".join(parts),),
                                  name_unit=kv("name", name)))
        return samples

    return Corpus(dialect=Dialect.KV, train=tuple(build("train", n_train)),
                  test=tuple(build("test", n_test)))


def copy_order_text(sample: Sample, dialect: Dialect,
                    order: Sequence[int] | None = None) -> str:
    """A faithful verbalization that mentions every unit in the presented
    order; the model stand-in used for order-invariance exactness checks."""
    units = list(sample.units)
    if order is not None:
        units = [units[i] for i in order]
    if dialect is Dialect.TRIPLE:
        return " ".join(f"{u.subject} {u.predicate} {u.object} ." for u in units)
    parts = []
    if sample.name_unit is not None:
        parts.append(f"{sample.name_unit.value} is listed .")
    parts += [f"it has {u.attribute} {u.value} ." for u in units]
    return " ".join(parts)


# --------------------------------------------------------------------------
# native source formats, for exercising the ingest adapters end to end


def write_triple_source_xml(path: Path | str, samples: Sequence[Sample]) -> None:
    lines = ["<benchmark>", "  <entries>"]
    for n, s in enumerate(samples, start=1):
        lines.append(f'    <entry category="{escape(s.domain or "misc")}" eid="Id{n}">')
        lines.append("      <modifiedtripleset>")
        for u in s.units:
            lines.append(f"        <mtriple>{escape(u.subject)} | {escape(u.predicate)}"
                         f" | {escape(u.object)}</mtriple>")
        lines.append("      </modifiedtripleset>")
        for ref in s.references:
            lines.append(f"      <lex>{escape(ref)}</lex>")
        lines.append("    </entry>")
    lines += ["  </entries>", "</benchmark>", ""]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def write_kv_source_csv(path: Path | str, samples: Sequence[Sample]) -> None:
    import csv

    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mr", "ref"])
        for s in samples:
            items = []
            if s.name_unit is not None:
                items.append(f"name[{s.name_unit.value}]")
            items += [f"{u.attribute}[{u.value}]" for u in s.units]
            mr = ", ".join(items)
            for ref in s.references:
                writer.writerow([mr, ref])
