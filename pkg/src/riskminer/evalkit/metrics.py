"""Exact-match and token-F1 for extractive QA, with the standard normalization.

Normalization applies four rules in order: lowercase, strip punctuation,
drop the articles a/an/the, collapse whitespace. The rule set is versioned in
report output so numbers stay comparable across runs.
"""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

from ..errors import EmptyGold

NORMALIZATION_VERSION = "lower-nopunct-noarticles-wscollapse/1"

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")


def normalize_answer(text: str) -> str:
    text = text.lower()
    text = text.translate(_PUNCT_TABLE)
    text = _ARTICLE_RE.sub(" ", text)
    return " ".join(text.split())


def exact_match(prediction: str, gold_answers: Sequence[str]) -> bool:
    """True iff the normalized prediction equals any normalized gold answer."""
    if not gold_answers:
        raise EmptyGold("exact_match needs at least one gold answer")
    pred = normalize_answer(prediction)
    return any(pred == normalize_answer(g) for g in gold_answers)


def _f1_single(pred_tokens: list[str], gold_tokens: list[str]) -> float:
    if not pred_tokens and not gold_tokens:
        return 1.0
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def token_f1(prediction: str, gold_answers: Sequence[str]) -> float:
    """Token-multiset F1 between prediction and the best-matching gold answer."""
    if not gold_answers:
        raise EmptyGold("token_f1 needs at least one gold answer")
    pred_tokens = normalize_answer(prediction).split()
    return max(_f1_single(pred_tokens, normalize_answer(g).split()) for g in gold_answers)


@dataclass
class QaReport:
    em_percent: float
    f1_percent: float
    n: int
    normalization: str = NORMALIZATION_VERSION

    def to_json_dict(self) -> dict:
        return {
            "em_percent": self.em_percent,
            "f1_percent": self.f1_percent,
            "n": self.n,
            "normalization": self.normalization,
        }


def evaluate_qa(predictions: Mapping[str, str], gold_items: Sequence) -> QaReport:
    """Macro-averaged EM and F1 over gold items, as percentages at 2 decimals.

    `gold_items` are QAItems (anything with `.id` and `.answers[*].answer_text`).
    An item without a prediction scores an empty-string prediction.
    """
    if not gold_items:
        return QaReport(em_percent=0.0, f1_percent=0.0, n=0)
    em_total = 0.0
    f1_total = 0.0
    for item in gold_items:
        golds = [a.answer_text for a in item.answers]
        pred = predictions.get(item.id, "")
        em_total += 100.0 if exact_match(pred, golds) else 0.0
        f1_total += 100.0 * token_f1(pred, golds)
    n = len(gold_items)
    return QaReport(em_percent=round(em_total / n, 2), f1_percent=round(f1_total / n, 2), n=n)
