"""QA seed-dataset model and its canonical JSON file format.

Each item is one (context, question, answer spans) triple. Span offsets are
character offsets into the context and are verified on every load and save;
offset drift is rejected, never repaired.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import SchemaError, SpanMismatch
from ..store import RecordSchema

logger = logging.getLogger(__name__)

DATASET_VERSION = "1.0"
QUESTION_TEMPLATE = "What are the risk factors for {name}?"

_KNOWN_TOP_KEYS = {"version", "items"}
_REQUIRED_ITEM_KEYS = {"id", "disease_id", "pmid", "context", "question", "answers"}


@dataclass
class AnswerSpan:
    span_start: int
    answer_text: str

    @property
    def span_end(self) -> int:
        return self.span_start + len(self.answer_text)

    def check_against(self, context: str, item_id: str = "?") -> None:
        if self.span_start < 0 or self.span_end > len(context):
            raise SpanMismatch(f"item {item_id}: span [{self.span_start}, {self.span_end})"
                               f" outside context of length {len(context)}")
        actual = context[self.span_start:self.span_end]
        if actual != self.answer_text:
            raise SpanMismatch(
                f"item {item_id}: span_start {self.span_start} yields {actual!r},"
                f" not {self.answer_text!r}"
            )


@dataclass
class QAItem:
    id: str
    disease_id: str
    pmid: str
    context: str
    question: str
    answers: list[AnswerSpan]
    subgroup_only: bool = False

    def validate(self) -> None:
        if not self.answers:
            raise SchemaError(f"item {self.id}: needs at least one answer span")
        if not (self.question.startswith("What are the risk factors for ")
                and self.question.endswith("?")):
            raise SchemaError(f"item {self.id}: question does not follow the template")
        for answer in self.answers:
            answer.check_against(self.context, self.id)

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "disease_id": self.disease_id,
            "pmid": self.pmid,
            "context": self.context,
            "question": self.question,
            "answers": [{"span_start": a.span_start, "text": a.answer_text}
                        for a in self.answers],
            "subgroup_only": self.subgroup_only,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "QAItem":
        missing = _REQUIRED_ITEM_KEYS - set(data)
        if missing:
            raise SchemaError(f"QA item missing keys: {sorted(missing)}")
        answers = []
        for raw in data["answers"]:
            if "span_start" not in raw or "text" not in raw:
                raise SchemaError(f"item {data['id']}: answer needs span_start and text")
            answers.append(AnswerSpan(span_start=int(raw["span_start"]),
                                      answer_text=raw["text"]))
        item = cls(
            id=str(data["id"]),
            disease_id=data["disease_id"],
            pmid=str(data["pmid"]),
            context=data["context"],
            question=data["question"],
            answers=answers,
            subgroup_only=bool(data.get("subgroup_only", False)),
        )
        item.validate()
        return item


QA_ITEM_SCHEMA = RecordSchema("QAItem", QAItem.to_json_dict, QAItem.from_json_dict)


def save_qa_dataset(items: Sequence[QAItem], path: str | Path) -> Path:
    """Write the canonical dataset file. Items are validated before writing."""
    for item in items:
        item.validate()
    payload = {"version": DATASET_VERSION,
               "items": [item.to_json_dict() for item in items]}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    return path


def load_qa_dataset(path: str | Path) -> list[QAItem]:
    """Parse and validate a dataset file; every span must reproduce its text.

    Unknown top-level keys are tolerated with a warning for forward
    compatibility; broken spans raise SpanMismatch naming the item.
    """
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "items" not in payload:
        raise SchemaError(f"{path}: expected an object with an 'items' list")
    unknown = set(payload) - _KNOWN_TOP_KEYS
    if unknown:
        logger.warning("%s: ignoring unknown top-level keys %s", path, sorted(unknown))
    return [QAItem.from_json_dict(raw) for raw in payload["items"]]


def render_question_text(disease_name: str) -> str:
    return QUESTION_TEMPLATE.format(name=disease_name)
