"""Abstract screening: does this abstract report an actual risk-factor finding?

The classifier sits behind a pluggable backend contract so any fine-tuned
model can serve stage 2; the shipped heuristic backend is a deterministic
reference that needs no ML runtime.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import requests

from .errors import BackendFailure, LengthMismatch, NoAbstract, UnknownPmid
from .harvest import Article
from .store import RecordSchema
from .triggers import trigger_probability

logger = logging.getLogger(__name__)

POS = "POS"
NEG = "NEG"

DEFAULT_THRESHOLD = 0.5


class ClassifierBackend(Protocol):
    backend_id: str
    version: str
    concurrent_safe: bool

    def classify(self, title: str, abstract_text: str, mesh_terms: Sequence[str]) -> float: ...


@dataclass
class ScreenResult:
    pmid: str
    label: str
    probability: float
    backend_id: str

    def to_json_dict(self) -> dict:
        return {"pmid": self.pmid, "label": self.label,
                "probability": self.probability, "backend_id": self.backend_id}

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "ScreenResult":
        return cls(pmid=data["pmid"], label=data["label"],
                   probability=float(data["probability"]), backend_id=data["backend_id"])


SCREEN_RESULT_SCHEMA = RecordSchema(
    "ScreenResult", ScreenResult.to_json_dict, ScreenResult.from_json_dict)


class HeuristicClassifier:
    """Lexical-trigger reference backend; pure function of its inputs.

    Scores title + abstract with the shared trigger table. MeSH terms are
    accepted per the backend contract but not used.
    """

    backend_id = "heuristic"
    version = "1"
    concurrent_safe = True

    def classify(self, title: str, abstract_text: str, mesh_terms: Sequence[str]) -> float:
        text = f"{title} {abstract_text}".strip()
        return trigger_probability(text)


class HttpClassifier:
    """Client for an external inference server: POST /classify -> {"probability": p}."""

    concurrent_safe = False

    def __init__(self, endpoint: str, backend_id: str = "http", version: str = "remote",
                 timeout: float = 30.0):
        self.endpoint = endpoint.rstrip("/")
        self.backend_id = backend_id
        self.version = version
        self._timeout = timeout

    def classify(self, title: str, abstract_text: str, mesh_terms: Sequence[str]) -> float:
        try:
            resp = requests.post(f"{self.endpoint}/classify",
                                 json={"title": title, "abstract": abstract_text},
                                 timeout=self._timeout)
            resp.raise_for_status()
            probability = float(resp.json()["probability"])
        except (requests.RequestException, KeyError, TypeError, ValueError) as exc:
            raise BackendFailure(f"classifier backend {self.backend_id}: {exc}") from exc
        if not 0.0 <= probability <= 1.0:
            raise BackendFailure(
                f"classifier backend {self.backend_id}: probability {probability} outside [0, 1]"
            )
        return probability


def classify_article(article: Article, backend: ClassifierBackend,
                     threshold: float = DEFAULT_THRESHOLD) -> ScreenResult:
    """Classify one article. POS requires probability strictly above the
    threshold; ties go to NEG."""
    if article.no_abstract:
        raise NoAbstract(f"pmid {article.pmid} has no abstract")
    probability = backend.classify(article.title, article.abstract_text, article.mesh_terms)
    label = POS if probability > threshold else NEG
    return ScreenResult(pmid=article.pmid, label=label,
                        probability=probability, backend_id=backend.backend_id)


@dataclass
class ScreenStageOutput:
    results: list[ScreenResult] = field(default_factory=list)
    quarantined: list[tuple[str, str]] = field(default_factory=list)  # (pmid, reason)
    skipped_no_abstract: list[str] = field(default_factory=list)


def screen_articles(articles: Sequence[Article], backend: ClassifierBackend,
                    threshold: float = DEFAULT_THRESHOLD) -> ScreenStageOutput:
    """Classify a batch. Backend failures quarantine the article (UNSCREENED)
    and the run continues; fail-fast is impractical at corpus scale."""
    out = ScreenStageOutput()
    for article in articles:
        if article.no_abstract:
            out.skipped_no_abstract.append(article.pmid)
            continue
        try:
            out.results.append(classify_article(article, backend, threshold))
        except BackendFailure as exc:
            logger.warning("pmid %s quarantined: %s", article.pmid, exc)
            out.quarantined.append((article.pmid, str(exc)))
    return out


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass
class ClassificationReport:
    pos: ClassMetrics
    neg: ClassMetrics
    accuracy: float
    tp: int
    fp: int
    fn: int
    tn: int
    warnings: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "pos": vars(self.pos),
            "neg": vars(self.neg),
            "accuracy": self.accuracy,
            "confusion": {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn},
            "warnings": self.warnings,
        }


def _safe_ratio(num: int, den: int, what: str, warnings: list[str]) -> float:
    # Degenerate-class convention: zero denominator reports 0 with a warning,
    # keeping reports total.
    if den == 0:
        warnings.append(f"{what}: undefined (zero denominator), reported as 0")
        return 0.0
    return num / den


def classification_report(results: Sequence[ScreenResult],
                          gold: Mapping[str, str]) -> ClassificationReport:
    """Confusion-matrix metrics against gold labels keyed by pmid, 4 decimals."""
    if len(results) != len(gold):
        raise LengthMismatch(f"{len(results)} results vs {len(gold)} gold labels")
    tp = fp = fn = tn = 0
    for result in results:
        if result.pmid not in gold:
            raise UnknownPmid(f"no gold label for pmid {result.pmid}")
        gold_label = gold[result.pmid]
        if result.label == POS and gold_label == POS:
            tp += 1
        elif result.label == POS and gold_label == NEG:
            fp += 1
        elif result.label == NEG and gold_label == POS:
            fn += 1
        else:
            tn += 1

    warnings: list[str] = []
    pos_p = _safe_ratio(tp, tp + fp, "POS precision", warnings)
    pos_r = _safe_ratio(tp, tp + fn, "POS recall", warnings)
    neg_p = _safe_ratio(tn, tn + fn, "NEG precision", warnings)
    neg_r = _safe_ratio(tn, tn + fp, "NEG recall", warnings)
    pos_f1 = 2 * pos_p * pos_r / (pos_p + pos_r) if pos_p + pos_r else 0.0
    neg_f1 = 2 * neg_p * neg_r / (neg_p + neg_r) if neg_p + neg_r else 0.0
    if pos_p + pos_r == 0:
        warnings.append("POS f1: undefined, reported as 0")
    if neg_p + neg_r == 0:
        warnings.append("NEG f1: undefined, reported as 0")
    total = tp + fp + fn + tn
    accuracy = _safe_ratio(tp + tn, total, "accuracy", warnings)

    return ClassificationReport(
        pos=ClassMetrics(round(pos_p, 4), round(pos_r, 4), round(pos_f1, 4)),
        neg=ClassMetrics(round(neg_p, 4), round(neg_r, 4), round(neg_f1, 4)),
        accuracy=round(accuracy, 4),
        tp=tp, fp=fp, fn=fn, tn=tn,
        warnings=warnings,
    )
