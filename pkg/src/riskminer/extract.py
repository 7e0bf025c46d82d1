"""Risk-factor span extraction: question rendering, QA backend contract, and
the two post-processing filters (max answer length, per-disease relative
confidence)."""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import requests

from .catalog import Disease
from .errors import (
    BackendFailure,
    EmptyDiseaseName,
    EmptySample,
    MixedDiseases,
    SchemaError,
)
from .harvest import Article
from .store import RecordSchema
from .triggers import squash, trigger_evidence

logger = logging.getLogger(__name__)

QUESTION_TEMPLATE = "What are the risk factors for {name}?"
_QUESTION_PREFIX = "What are the risk factors for "

DEFAULT_K = 5
DEFAULT_CONFIDENCE_COEFFICIENT = 0.6
DEFAULT_LENGTH_PERCENTILE = 0.95

# Sentences naming the questioned disease outrank otherwise-equal sentences.
DISEASE_NAME_BONUS = 0.5


@dataclass
class Question:
    disease_name: str
    text: str


def render_question(disease_name: str) -> Question:
    """Instantiate the question template verbatim; the name is not normalized."""
    if not disease_name.strip():
        raise EmptyDiseaseName("cannot render a question for an empty disease name")
    return Question(disease_name=disease_name,
                    text=QUESTION_TEMPLATE.format(name=disease_name))


def question_disease_name(question: str) -> str | None:
    """Inverse of render_question, for backends that need the name back."""
    if question.startswith(_QUESTION_PREFIX) and question.endswith("?"):
        return question[len(_QUESTION_PREFIX):-1]
    return None


@dataclass
class CandidateSpan:
    start_char: int
    end_char: int
    text: str
    score: float

    def check_against(self, context: str) -> None:
        if not 0 <= self.start_char < self.end_char <= len(context):
            raise SchemaError(
                f"span [{self.start_char}, {self.end_char}) outside context"
                f" of length {len(context)}"
            )
        actual = context[self.start_char:self.end_char]
        if actual != self.text:
            raise SchemaError(
                f"span [{self.start_char}, {self.end_char}) reads {actual!r}, not {self.text!r}"
            )
        if not 0.0 <= self.score <= 1.0:
            raise SchemaError(f"span score {self.score} outside [0, 1]")


@dataclass
class MaxAnswerLength:
    value: int
    percentile: float
    sample_size: int


def compute_max_answer_length(training_answers: Sequence[str],
                              percentile: float = DEFAULT_LENGTH_PERCENTILE) -> MaxAnswerLength:
    """Nearest-rank percentile of answer lengths in characters.

    Sort lengths ascending and take the 1-based index ceil(p * N); the result
    is always one of the observed lengths.
    """
    if not training_answers:
        raise EmptySample("no training answers to size the length limit from")
    if not 0 < percentile < 1:
        raise ValueError(f"percentile {percentile} outside (0, 1)")
    lengths = sorted(len(a) for a in training_answers)
    rank = math.ceil(percentile * len(lengths))
    return MaxAnswerLength(value=lengths[rank - 1], percentile=percentile,
                           sample_size=len(lengths))


def _overlaps(a: CandidateSpan, b: CandidateSpan) -> bool:
    return a.start_char < b.end_char and b.start_char < a.end_char


def select_spans(candidates: Sequence[CandidateSpan], max_len: MaxAnswerLength,
                 k: int) -> list[CandidateSpan]:
    """Apply the length cut, suppress overlapping spans, and keep the top k.

    Candidates longer than the limit are disregarded. Among overlapping
    survivors the higher score wins (ties: earlier start, then shorter span).
    Output is sorted by descending score and pairwise non-overlapping.
    """
    survivors = [c for c in candidates if len(c.text) <= max_len.value]
    survivors.sort(key=lambda c: (-c.score, c.start_char, c.end_char - c.start_char))
    kept: list[CandidateSpan] = []
    for candidate in survivors:
        if all(not _overlaps(candidate, other) for other in kept):
            kept.append(candidate)
    return kept[:k]


@dataclass
class RiskFactorRecord:
    disease_id: str
    pmid: str
    text: str
    start_char: int
    end_char: int
    score: float
    backend_id: str
    record_id: str = ""

    def __post_init__(self) -> None:
        if not self.record_id:
            self.record_id = f"{self.disease_id}:{self.pmid}:{self.start_char}-{self.end_char}"

    def check_against(self, context: str) -> None:
        CandidateSpan(self.start_char, self.end_char, self.text, self.score).check_against(context)

    def to_json_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "disease_id": self.disease_id,
            "pmid": self.pmid,
            "text": self.text,
            "start_char": self.start_char,
            "end_char": self.end_char,
            "score": self.score,
            "backend_id": self.backend_id,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "RiskFactorRecord":
        return cls(
            disease_id=data["disease_id"],
            pmid=data["pmid"],
            text=data["text"],
            start_char=int(data["start_char"]),
            end_char=int(data["end_char"]),
            score=float(data["score"]),
            backend_id=data["backend_id"],
            record_id=data.get("record_id", ""),
        )


RISK_FACTOR_SCHEMA = RecordSchema(
    "RiskFactorRecord", RiskFactorRecord.to_json_dict, RiskFactorRecord.from_json_dict)


class SpanExtractorBackend(Protocol):
    backend_id: str
    version: str
    concurrent_safe: bool

    def extract(self, context: str, question: str, k: int) -> list[CandidateSpan]: ...


_SENTENCE_END_RE = re.compile(r"[.!?]+(?=\s|$)")


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Offsets of sentences in `text`, whitespace-trimmed at both ends.

    Boundaries are terminal punctuation followed by whitespace, so decimals
    and inline abbreviations mostly survive. Good enough for a reference
    backend; real QA models bring their own segmentation.
    """
    spans: list[tuple[int, int]] = []
    cursor = 0
    for match in _SENTENCE_END_RE.finditer(text):
        spans.append((cursor, match.end()))
        cursor = match.end()
    if cursor < len(text):
        spans.append((cursor, len(text)))
    trimmed = []
    for start, end in spans:
        while start < end and text[start].isspace():
            start += 1
        while end > start and text[end - 1].isspace():
            end -= 1
        if start < end:
            trimmed.append((start, end))
    return trimmed


class HeuristicSpanExtractor:
    """Sentence-level reference backend using the shared trigger table.

    Sentences with no trigger at all are never candidates; among the rest,
    the trigger net weight plus a bonus for naming the questioned disease is
    squashed into a (0, 1) score.
    """

    backend_id = "heuristic"
    version = "1"
    concurrent_safe = True

    def extract(self, context: str, question: str, k: int) -> list[CandidateSpan]:
        disease_name = question_disease_name(question)
        name_lower = disease_name.lower() if disease_name else None
        candidates: list[CandidateSpan] = []
        for start, end in sentence_spans(context):
            sentence = context[start:end]
            net, fired = trigger_evidence(sentence)
            if not fired:
                continue
            if name_lower and name_lower in sentence.lower():
                net += DISEASE_NAME_BONUS
            candidates.append(CandidateSpan(start_char=start, end_char=end,
                                            text=sentence, score=squash(net)))
        candidates.sort(key=lambda c: (-c.score, c.start_char))
        return candidates[:k]


class HttpExtractor:
    """Client for an external QA server: POST /extract -> {"spans": [...]}."""

    concurrent_safe = False

    def __init__(self, endpoint: str, backend_id: str = "http", version: str = "remote",
                 timeout: float = 60.0):
        self.endpoint = endpoint.rstrip("/")
        self.backend_id = backend_id
        self.version = version
        self._timeout = timeout

    def extract(self, context: str, question: str, k: int) -> list[CandidateSpan]:
        try:
            resp = requests.post(f"{self.endpoint}/extract",
                                 json={"context": context, "question": question, "k": k},
                                 timeout=self._timeout)
            resp.raise_for_status()
            payload = resp.json()
            spans = [
                CandidateSpan(start_char=int(s["start"]), end_char=int(s["end"]),
                              text=context[int(s["start"]):int(s["end"])],
                              score=float(s["score"]))
                for s in payload["spans"]
            ]
        except (requests.RequestException, KeyError, TypeError, ValueError) as exc:
            raise BackendFailure(f"extractor backend {self.backend_id}: {exc}") from exc
        return spans


def extract_for_article(
    article: Article,
    disease: Disease,
    backend: SpanExtractorBackend,
    max_len: MaxAnswerLength,
    k: int = DEFAULT_K,
) -> list[RiskFactorRecord]:
    """Question -> backend spans -> post-filters -> tagged records.

    Backend output is contract-checked: any span that does not reproduce its
    context slice is a BackendFailure, not silently repaired. Zero records is
    a legal outcome.
    """
    question = render_question(disease.name)
    context = article.abstract_text
    try:
        candidates = backend.extract(context, question.text, k)
    except BackendFailure:
        raise
    except Exception as exc:
        raise BackendFailure(f"extractor backend {backend.backend_id} raised: {exc}") from exc
    for candidate in candidates:
        try:
            candidate.check_against(context)
        except SchemaError as exc:
            raise BackendFailure(
                f"extractor backend {backend.backend_id} violated the span contract"
                f" on pmid {article.pmid}: {exc}"
            ) from exc
    selected = select_spans(candidates, max_len, k)
    return [
        RiskFactorRecord(
            disease_id=disease.kegg_id,
            pmid=article.pmid,
            text=span.text,
            start_char=span.start_char,
            end_char=span.end_char,
            score=span.score,
            backend_id=backend.backend_id,
        )
        for span in selected
    ]


def confidence_filter(records: Sequence[RiskFactorRecord],
                      coefficient: float = DEFAULT_CONFIDENCE_COEFFICIENT) -> list[RiskFactorRecord]:
    """Keep records strictly above coefficient * (per-disease max score).

    The maximum is taken across all of the disease's records (all abstracts),
    not per abstract. Scores tying the threshold exactly are dropped; if every
    score is 0 nothing survives.
    """
    if not records:
        return []
    diseases = {r.disease_id for r in records}
    if len(diseases) > 1:
        raise MixedDiseases(f"confidence filter got records for {sorted(diseases)}")
    max_score = max(r.score for r in records)
    threshold = coefficient * max_score
    # coefficient < 1 puts the true threshold strictly below the maximum, so
    # top-scored records always survive; the explicit clause guards against
    # coefficient * max rounding up to max for tiny floats.
    return [r for r in records
            if r.score > threshold or (coefficient < 1.0 and r.score == max_score > 0)]
