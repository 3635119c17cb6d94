"""Match training set, permutation-pair inputs, and order-sensitivity scoring.

Two properties are checked per permutation pair: fidelity (the output realizes
exactly the input unit set) and proper ordering (Kendall correlation above zero
with at least one reference order). PBH counts pairs where both outputs hold a
property, POH where exactly one does. CWIO is the mean Kendall correlation of
output order with the presented input order.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .alignment import align_sample, extract_output_units
from .errors import MissingPrediction
from .metrics import kendall_tau
from .model import Aspect, Corpus, Dialect, Sample, SplitArtifact


@dataclass(frozen=True)
class PermutationPair:
    sample_id: str
    order_a: tuple[int, ...]
    order_b: tuple[int, ...]

    def __post_init__(self):
        n = len(self.order_a)
        if sorted(self.order_a) != list(range(n)) or sorted(self.order_b) != list(range(n)):
            raise ValueError(f"orders for {self.sample_id} are not permutations")
        if self.order_a == self.order_b:
            raise ValueError(f"orders for {self.sample_id} are identical")


@dataclass
class OrderReport:
    n_evaluated: int = 0
    fidelity_both: int = 0
    fidelity_one: int = 0
    fidelity_neither: int = 0
    ordering_both: int = 0
    ordering_one: int = 0
    ordering_neither: int = 0
    cwio: float | None = None
    cwio_evaluated: int = 0
    cwio_excluded: int = 0

    def _pct(self, count: int) -> float:
        return 100.0 * count / self.n_evaluated if self.n_evaluated else 0.0

    @property
    def fidelity_pbh(self) -> float:
        return self._pct(self.fidelity_both)

    @property
    def fidelity_poh(self) -> float:
        return self._pct(self.fidelity_one)

    @property
    def ordering_pbh(self) -> float:
        return self._pct(self.ordering_both)

    @property
    def ordering_poh(self) -> float:
        return self._pct(self.ordering_one)

    def to_json(self) -> dict:
        return {
            "n_evaluated": self.n_evaluated,
            "fidelity": {"both": self.fidelity_both, "one": self.fidelity_one,
                         "neither": self.fidelity_neither,
                         "pbh": self.fidelity_pbh, "poh": self.fidelity_poh},
            "ordering": {"both": self.ordering_both, "one": self.ordering_one,
                         "neither": self.ordering_neither,
                         "pbh": self.ordering_pbh, "poh": self.ordering_poh},
            "cwio": self.cwio,
            "cwio_evaluated": self.cwio_evaluated,
            "cwio_excluded": self.cwio_excluded,
        }


def reference_orders(sample: Sample, dialect: Dialect,
                     lexicon: Mapping | None = None) -> list[tuple[str, ...]]:
    """Unit orders induced by each reference whose order is determinable."""
    orders = []
    for ref in sample.references:
        outcome = align_sample(sample, ref, dialect, lexicon)
        if outcome.unit_order is not None:
            orders.append(outcome.unit_order)
    return orders


def first_determinable_reference_order(sample: Sample, dialect: Dialect,
                                       lexicon: Mapping | None = None
                                       ) -> tuple[str, ...] | None:
    for ref in sample.references:
        outcome = align_sample(sample, ref, dialect, lexicon)
        if outcome.unit_order is not None:
            return outcome.unit_order
    return None


def build_match_training(corpus: Corpus, lexicon: Mapping | None = None) -> SplitArtifact:
    """Reorder each training sample's units to their occurrence order in the
    first reference with a determinable order; undeterminable pairs keep their
    original order and are flagged in the metadata."""
    reordered = []
    flagged = []
    for sample in corpus.train:
        order = first_determinable_reference_order(sample, corpus.dialect, lexicon)
        if order is None:
            flagged.append(sample.id)
            reordered.append(sample)
            continue
        by_uid = {u.uid: u for u in sample.units}
        reordered.append(sample.with_units(by_uid[uid] for uid in order))
    return SplitArtifact(
        aspect=Aspect.ORDER_INVARIANCE,
        name="match",
        samples=tuple(reordered),
        metadata={"n_samples": len(reordered), "n_flagged": len(flagged),
                  "flagged": flagged},
    )


def filter_order_test(corpus: Corpus, lexicon: Mapping | None = None) -> list[Sample]:
    """Test samples usable for permutation pairs: at least two units and at
    least one determinable reference order."""
    kept = []
    for sample in corpus.test:
        if len(sample.units) < 2:
            continue
        if first_determinable_reference_order(sample, corpus.dialect, lexicon) is None:
            continue
        kept.append(sample)
    return kept


def generate_permutation_pairs(test: Sequence[Sample], seed: int) -> list[PermutationPair]:
    """Two distinct uniform unit orders per sample (rejection sampling on equality)."""
    rng = random.Random(seed)
    pairs = []
    for sample in test:
        n = len(sample.units)
        if n < 2:
            continue
        order_a = list(range(n))
        rng.shuffle(order_a)
        order_b = list(order_a)
        while order_b == order_a:
            rng.shuffle(order_b)
        pairs.append(PermutationPair(sample.id, tuple(order_a), tuple(order_b)))
    return pairs


def _ordering_holds(output_order: Sequence[str], present: frozenset[str],
                    ref_orders: Sequence[tuple[str, ...]]) -> bool:
    """Kendall > 0 against at least one reference, on the common unit set."""
    for ref in ref_orders:
        ref_common = [uid for uid in ref if uid in present]
        out_common = [uid for uid in output_order if uid in set(ref)]
        if len(ref_common) < 2 or len(out_common) != len(ref_common):
            continue
        if kendall_tau(out_common, ref_common) > 0:
            return True
    return False


def evaluate_order_invariance(pairs: Sequence[PermutationPair],
                              samples_by_id: Mapping[str, Sample],
                              predictions: Mapping[tuple[str, str], str],
                              dialect: Dialect,
                              lexicon: Mapping | None = None) -> OrderReport:
    """Score fidelity and proper-ordering PBH/POH over permutation pairs."""
    report = OrderReport()
    for pair in pairs:
        sample = samples_by_id[pair.sample_id]
        ref_orders = reference_orders(sample, dialect, lexicon)
        flags_fidelity = []
        flags_ordering = []
        for variant in ("a", "b"):
            key = (pair.sample_id, variant)
            if key not in predictions:
                raise MissingPrediction(pair.sample_id, variant)
            present, order = extract_output_units(sample, predictions[key], dialect, lexicon)
            flags_fidelity.append(present == sample.unit_id_set)
            flags_ordering.append(order is not None
                                  and _ordering_holds(order, present, ref_orders))
        report.n_evaluated += 1
        held = sum(flags_fidelity)
        if held == 2:
            report.fidelity_both += 1
        elif held == 1:
            report.fidelity_one += 1
        else:
            report.fidelity_neither += 1
        held = sum(flags_ordering)
        if held == 2:
            report.ordering_both += 1
        elif held == 1:
            report.ordering_one += 1
        else:
            report.ordering_neither += 1
    return report


def compute_cwio(samples: Sequence[Sample],
                 predictions: Mapping[tuple[str, str], str],
                 dialect: Dialect,
                 lexicon: Mapping | None = None,
                 variant: str = "orig") -> tuple[float | None, int, int]:
    """Mean Kendall correlation between output unit order and the presented
    input order; samples whose output order cannot be determined over at least
    two units are excluded and counted separately."""
    taus = []
    excluded = 0
    for sample in samples:
        key = (sample.id, variant)
        if key not in predictions:
            raise MissingPrediction(sample.id, variant)
        present, order = extract_output_units(sample, predictions[key], dialect, lexicon)
        if order is None or len(order) < 2:
            excluded += 1
            continue
        input_order = [uid for uid in sample.unit_ids if uid in present]
        taus.append(kendall_tau(order, input_order))
    if not taus:
        return None, 0, excluded
    return sum(taus) / len(taus), len(taus), excluded


def write_pairs(path: Path | str, pairs: Sequence[PermutationPair],
                samples_by_id: Mapping[str, Sample], dialect: Dialect) -> None:
    """Self-contained pair file: each record embeds the sample it permutes."""
    from .model import sample_to_record
    with Path(path).open("w", encoding="utf-8") as fh:
        for p in pairs:
            rec = {"dialect": dialect.value,
                   "order_a": list(p.order_a),
                   "order_b": list(p.order_b),
                   "sample": sample_to_record(samples_by_id[p.sample_id])}
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def read_pairs(path: Path | str) -> tuple[list[PermutationPair], dict[str, Sample], Dialect]:
    from .model import sample_from_record
    pairs: list[PermutationPair] = []
    samples: dict[str, Sample] = {}
    dialect = Dialect.TRIPLE
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            sample = sample_from_record(rec["sample"])
            samples[sample.id] = sample
            dialect = Dialect(rec["dialect"])
            pairs.append(PermutationPair(sample.id,
                                         tuple(rec["order_a"]), tuple(rec["order_b"])))
    return pairs, samples, dialect
