"""Word-overlap PARENT score for data-to-text outputs.

Combines entailed n-gram precision against references and the input table with
a recall blended geometrically between reference recall and table recall
(longest-common-subsequence per record). Only the word-overlap entailment
model is implemented.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .alignment import tokenize
from .errors import UndefinedScore
from .model import DataUnit


@dataclass(frozen=True)
class ParentParams:
    max_order: int = 4
    lambda_weight: float = 0.5


DEFAULT_PARENT_PARAMS = ParentParams()


def _tokens(text: str) -> list[str]:
    return [t.casefold() for t in tokenize(text)]


def table_records(units: Sequence[DataUnit]) -> list[list[str]]:
    """One token sequence per unit, in field order."""
    return [[tok for fld in unit.fields for tok in _tokens(fld)] for unit in units]


def _ngram_counts(tokens: Sequence[str], order: int) -> Counter:
    return Counter(tuple(tokens[i:i + order]) for i in range(len(tokens) - order + 1))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def _geometric_mean(values: Sequence[float]) -> float:
    if not values:
        return 0.0
    if any(v <= 0.0 for v in values):
        return 0.0
    product = 1.0
    for v in values:
        product *= v
    return product ** (1.0 / len(values))


def parent_score(prediction: str, references: Sequence[str], units: Sequence[DataUnit],
                 params: ParentParams = DEFAULT_PARENT_PARAMS) -> float:
    """Per-sample PARENT F-score in [0, 1].

    Multi-reference handling: precision treats the references as a pool (an
    n-gram is reference-supported up to its maximum count in any reference);
    reference recall is the best over references.
    """
    records = table_records(units)
    lexicon = {tok for rec in records for tok in rec}
    ref_token_lists = [_tokens(r) for r in references if r.strip()]
    if not ref_token_lists and not records:
        raise UndefinedScore("no references and no table to score against")
    pred_tokens = _tokens(prediction)
    if not pred_tokens:
        return 0.0

    def overlap(ngram: tuple[str, ...]) -> float:
        return sum(1 for t in ngram if t in lexicon) / len(ngram)

    max_order = min(params.max_order, len(pred_tokens))
    precisions = []
    for order in range(1, max_order + 1):
        pred_counts = _ngram_counts(pred_tokens, order)
        ref_counts_per = [_ngram_counts(toks, order) for toks in ref_token_lists]
        numer = 0.0
        denom = 0.0
        for ngram, count in pred_counts.items():
            denom += count
            in_ref = max((rc.get(ngram, 0) for rc in ref_counts_per), default=0)
            prob_ref = min(1.0, in_ref / count)
            numer += count * (prob_ref + (1.0 - prob_ref) * overlap(ngram))
        precisions.append(numer / denom if denom else 0.0)
    precision = _geometric_mean(precisions)

    recall_ref = 0.0
    for toks in ref_token_lists:
        per_order = []
        for order in range(1, min(params.max_order, len(toks)) + 1):
            ref_counts = _ngram_counts(toks, order)
            pred_counts = _ngram_counts(pred_tokens, order)
            numer = 0.0
            denom = 0.0
            for ngram, count in ref_counts.items():
                w = overlap(ngram)
                if w == 0.0:
                    continue
                denom += count * w
                numer += count * w * min(1.0, pred_counts.get(ngram, 0) / count)
            per_order.append(numer / denom if denom else 0.0)
        recall_ref = max(recall_ref, _geometric_mean(per_order))

    if records:
        recall_table = sum(_lcs_length(rec, pred_tokens) / len(rec)
                           for rec in records) / len(records)
    else:
        recall_table = 1.0
    if not ref_token_lists:
        recall_ref = 1.0  # table-only scoring, e.g. synthetic inputs

    lam = params.lambda_weight
    if recall_ref <= 0.0 or recall_table <= 0.0:
        recall = 0.0
    else:
        recall = (recall_ref ** lam) * (recall_table ** (1.0 - lam))

    if precision + recall <= 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)
