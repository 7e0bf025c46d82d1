"""HTTP annotation service: serve abstracts, collect span annotations and
evaluation marks, export the canonical datasets.

Task sourcing: screen_label tasks cover every corpus article with an abstract;
span_annotation tasks cover positively screened articles when screen results
exist (falling back to the whole corpus otherwise); eval_mark tasks cover
extracted risk-factor records. Submissions persist through the single-writer
record store, so a restarted service resumes from disk.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

from fastapi import Depends, FastAPI, HTTPException, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse
from pydantic import BaseModel

from .catalog import DiseaseCatalog, load_catalog_dir
from .errors import (
    InvalidMark,
    RiskMinerError,
    SchemaError,
    SignificanceOnNonValid,
    SpanMismatch,
    TaskAlreadyDone,
    UnknownTask,
)
from .evalkit.dataset import QA_ITEM_SCHEMA, AnswerSpan, QAItem, render_question_text, save_qa_dataset
from .evalkit.marks import EVAL_MARK_SCHEMA, EvalMark
from .extract import RISK_FACTOR_SCHEMA
from .harvest import CorpusStore
from .screen import POS, SCREEN_RESULT_SCHEMA
from .store import append_records, dataclass_schema, read_records, utc_now_iso

TASK_KINDS = ("span_annotation", "screen_label", "eval_mark")
DEFAULT_LEASE_SECONDS = 30 * 60

OPEN = "open"
DONE = "done"
SKIPPED = "skipped"


@dataclass
class AnnotationTask:
    task_id: str
    kind: str
    disease_id: str
    pmid: str
    payload: dict
    status: str = OPEN
    leased_until: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "kind": self.kind,
            "disease_id": self.disease_id,
            "pmid": self.pmid,
            "payload": self.payload,
            "status": self.status,
        }


@dataclass
class TaskEvent:
    task_id: str
    event: str  # done | skipped
    timestamp: str = ""


TASK_EVENT_SCHEMA = dataclass_schema("TaskEvent", TaskEvent)


class AnnotationService:
    """In-memory task queue over an on-disk corpus, with persisted submissions."""

    def __init__(
        self,
        root: str | Path,
        catalog: DiseaseCatalog | None = None,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        clock: Callable[[], float] = time.time,
    ):
        self.root = Path(root)
        if catalog is None:
            catalog = load_catalog_dir(self.root / "cache" / "kegg",
                                       self._default_families_file())
        self.catalog = catalog
        self.lease_seconds = lease_seconds
        self._clock = clock
        self._lock = threading.Lock()
        self.annotations_dir = self.root / "annotations"
        self.tasks: dict[str, AnnotationTask] = {}
        self.qa_items: list[QAItem] = []
        self.marks: list[EvalMark] = []
        self._build_tasks()
        self._restore_state()

    def _default_families_file(self) -> Path | None:
        candidate = self.root / "families.tsv"
        return candidate if candidate.exists() else None

    # -- task construction ----------------------------------------------

    def _build_tasks(self) -> None:
        corpus = CorpusStore(self.root)
        articles = {a.pmid: a for a in corpus.iter_articles()}
        pos_pairs = self._positive_pairs(articles)

        for disease_id in sorted(self.catalog.entries):
            disease = self.catalog.entries[disease_id]
            for pmid in sorted((p for p, a in articles.items()
                                if disease_id in a.retrieved_for and not a.no_abstract),
                               key=int):
                article = articles[pmid]
                payload = {
                    "title": article.title,
                    "context": article.abstract_text,
                    "disease_name": disease.name,
                    "disease_description": disease.description,
                }
                self._add_task("screen_label", disease_id, pmid, payload)
                if pos_pairs is None or (disease_id, pmid) in pos_pairs:
                    self._add_task("span_annotation", disease_id, pmid, payload)

        for record_path in sorted((self.root / "extracted").glob("*/*.jsonl")):
            for record in read_records(record_path, RISK_FACTOR_SCHEMA):
                article = articles.get(record.pmid)
                disease = self.catalog.get(record.disease_id)
                if article is None or disease is None:
                    continue
                payload = {
                    "title": article.title,
                    "context": article.abstract_text,
                    "disease_name": disease.name,
                    "disease_description": disease.description,
                    "record_id": record.record_id,
                    "record_text": record.text,
                    "start_char": record.start_char,
                    "end_char": record.end_char,
                    "score": record.score,
                }
                task_id = f"eval_mark:{record.record_id}"
                if task_id not in self.tasks:
                    self.tasks[task_id] = AnnotationTask(
                        task_id=task_id, kind="eval_mark",
                        disease_id=record.disease_id, pmid=record.pmid, payload=payload)

    def _positive_pairs(self, articles: Mapping) -> set[tuple[str, str]] | None:
        """(disease_id, pmid) pairs screened POS, or None when no screen results exist."""
        screen_dirs = sorted((self.root / "screen").glob("*/results.jsonl"))
        if not screen_dirs:
            return None
        pairs: set[tuple[str, str]] = set()
        for results_path in screen_dirs:
            for result in read_records(results_path, SCREEN_RESULT_SCHEMA):
                if result.label != POS:
                    continue
                article = articles.get(result.pmid)
                if article is None:
                    continue
                for disease_id in article.retrieved_for:
                    pairs.add((disease_id, result.pmid))
        return pairs

    def _add_task(self, kind: str, disease_id: str, pmid: str, payload: dict) -> None:
        task_id = f"{kind}:{disease_id}:{pmid}"
        if task_id not in self.tasks:
            self.tasks[task_id] = AnnotationTask(task_id=task_id, kind=kind,
                                                 disease_id=disease_id, pmid=pmid,
                                                 payload=payload)

    # -- state restore ----------------------------------------------------

    def _restore_state(self) -> None:
        qa_path = self.annotations_dir / "qa_items.jsonl"
        if qa_path.exists():
            self.qa_items = read_records(qa_path, QA_ITEM_SCHEMA)
        marks_path = self.annotations_dir / "marks.jsonl"
        if marks_path.exists():
            self.marks = read_records(marks_path, EVAL_MARK_SCHEMA)
        events_path = self.annotations_dir / "task_events.jsonl"
        if events_path.exists():
            for event in read_records(events_path, TASK_EVENT_SCHEMA):
                task = self.tasks.get(event.task_id)
                if task is not None:
                    task.status = DONE if event.event == DONE else SKIPPED

    # -- queue operations --------------------------------------------------

    def _is_available(self, task: AnnotationTask, now: float) -> bool:
        return task.status == OPEN and task.leased_until <= now

    def next_task(self, kind: str, disease_id: str | None = None) -> AnnotationTask | None:
        """Lease the next open task: pmid ascending within disease, diseases in
        id order. Expired leases reopen automatically."""
        if kind not in TASK_KINDS:
            raise SchemaError(f"unknown task kind {kind!r}")
        with self._lock:
            now = self._clock()
            candidates = [
                t for t in self.tasks.values()
                if t.kind == kind and self._is_available(t, now)
                and (disease_id is None or t.disease_id == disease_id)
            ]
            if not candidates:
                return None
            task = min(candidates, key=lambda t: (t.disease_id, int(t.pmid)))
            task.leased_until = now + self.lease_seconds
            return task

    def _get_open(self, task_id: str) -> AnnotationTask:
        task = self.tasks.get(task_id)
        if task is None:
            raise UnknownTask(f"no task {task_id}")
        if task.status != OPEN:
            raise TaskAlreadyDone(f"task {task_id} is {task.status}")
        return task

    def task_counts(self) -> dict[str, int]:
        now = self._clock()
        counts = {"open": 0, "leased": 0, "done": 0, "skipped": 0}
        for task in self.tasks.values():
            if task.status == OPEN:
                counts["leased" if task.leased_until > now else "open"] += 1
            else:
                counts[task.status] += 1
        counts["total"] = len(self.tasks)
        return counts

    def open_task_counts(self, disease_id: str) -> dict[str, int]:
        now = self._clock()
        counts = {kind: 0 for kind in TASK_KINDS}
        for task in self.tasks.values():
            if task.disease_id == disease_id and self._is_available(task, now):
                counts[task.kind] += 1
        return counts

    # -- submissions -------------------------------------------------------

    def submit_span(self, task_id: str, span_start: int, answer_text: str,
                    subgroup_only: bool = False, annotator_id: str = "anonymous") -> QAItem:
        """Record one risk-factor span for a span task.

        The span must reproduce the context slice exactly. The task stays open:
        one abstract can hold several valid risks, each its own QA item.
        """
        with self._lock:
            task = self._get_open(task_id)
            if task.kind != "span_annotation":
                raise SchemaError(f"task {task_id} is a {task.kind} task, not span_annotation")
            context = task.payload["context"]
            span = AnswerSpan(span_start=span_start, answer_text=answer_text)
            span.check_against(context, item_id=task_id)
            seq = 1 + sum(1 for item in self.qa_items
                          if item.disease_id == task.disease_id and item.pmid == task.pmid)
            item = QAItem(
                id=f"{task.disease_id}:{task.pmid}:{seq}",
                disease_id=task.disease_id,
                pmid=task.pmid,
                context=context,
                question=render_question_text(task.payload["disease_name"]),
                answers=[span],
                subgroup_only=subgroup_only,
            )
            item.validate()
            append_records(self.annotations_dir / "qa_items.jsonl", [item], QA_ITEM_SCHEMA)
            self.qa_items.append(item)
            return item

    def submit_mark(self, task_id: str, mark: int, highly_significant: bool = False,
                    annotator_id: str = "anonymous") -> EvalMark:
        """Record a 1/2/3 evaluation mark for an extracted record; completes the task."""
        with self._lock:
            task = self._get_open(task_id)
            if task.kind != "eval_mark":
                raise SchemaError(f"task {task_id} is a {task.kind} task, not eval_mark")
            if mark not in (1, 2, 3):
                raise InvalidMark(f"mark must be 1, 2 or 3, got {mark!r}")
            if highly_significant and mark != 1:
                raise SignificanceOnNonValid("highly_significant requires mark 1")
            eval_mark = EvalMark(
                record_ref=task.payload["record_id"],
                mark=mark,
                highly_significant=highly_significant,
                annotator_id=annotator_id,
                timestamp=utc_now_iso(),
            )
            eval_mark.validate()
            append_records(self.annotations_dir / "marks.jsonl", [eval_mark], EVAL_MARK_SCHEMA)
            self.marks.append(eval_mark)
            self._finish(task, DONE)
            return eval_mark

    def complete_task(self, task_id: str) -> None:
        with self._lock:
            self._finish(self._get_open(task_id), DONE)

    def skip_task(self, task_id: str) -> None:
        with self._lock:
            self._finish(self._get_open(task_id), SKIPPED)

    def _finish(self, task: AnnotationTask, status: str) -> None:
        task.status = status
        task.leased_until = 0.0
        append_records(self.annotations_dir / "task_events.jsonl",
                       [TaskEvent(task_id=task.task_id, event=status,
                                  timestamp=utc_now_iso())],
                       TASK_EVENT_SCHEMA)

    # -- exports -------------------------------------------------------------

    def export_qa(self) -> Path:
        """Write the canonical QA dataset; repeatable and byte-stable.

        Every item is re-validated against its context on the way out.
        """
        path = self.annotations_dir / "export" / "qa_dataset.json"
        items = sorted(self.qa_items, key=lambda i: i.id)
        return save_qa_dataset(items, path)

    def export_marks(self) -> Path:
        path = self.annotations_dir / "export" / "marks.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        ordered = sorted(self.marks,
                         key=lambda m: (m.record_ref, m.timestamp, m.annotator_id, m.mark))
        lines = [EVAL_MARK_SCHEMA.dumps(m) for m in ordered]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return path


def read_tokens_file(path: str | Path) -> dict[str, str]:
    """`token<TAB>annotator_id` lines; '#' comments allowed."""
    tokens: dict[str, str] = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        token, _, annotator = line.partition("\t")
        if not annotator:
            raise SchemaError(f"tokens file {path}: bad row {raw!r}")
        tokens[token.strip()] = annotator.strip()
    return tokens


class SpanSubmission(BaseModel):
    span_start: int
    answer_text: str
    subgroup_only: bool = False


class MarkSubmission(BaseModel):
    mark: int
    highly_significant: bool = False


def create_app(service: AnnotationService, tokens: Mapping[str, str] | None = None) -> FastAPI:
    """Assemble the FastAPI app over an AnnotationService.

    With a tokens map the API requires `Authorization: Bearer <token>`;
    without one every caller is the anonymous annotator.
    """
    app = FastAPI(title="risk-factor annotation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    def annotator(request: Request) -> str:
        if tokens is None:
            return "anonymous"
        header = request.headers.get("authorization", "")
        if not header.lower().startswith("bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        token = header[7:].strip()
        if token not in tokens:
            raise HTTPException(status_code=401, detail="unknown token")
        return tokens[token]

    def http_error(exc: RiskMinerError) -> HTTPException:
        if isinstance(exc, UnknownTask):
            return HTTPException(status_code=404, detail=str(exc))
        if isinstance(exc, TaskAlreadyDone):
            return HTTPException(status_code=409, detail=str(exc))
        return HTTPException(status_code=422, detail=str(exc))

    @app.get("/diseases")
    def diseases(_: str = Depends(annotator)):
        out = []
        for kegg_id in sorted(service.catalog.entries):
            disease = service.catalog.entries[kegg_id]
            out.append({
                "kegg_id": kegg_id,
                "name": disease.name,
                "family": service.catalog.family_of(kegg_id),
                "open_tasks": service.open_task_counts(kegg_id),
            })
        return out

    @app.get("/tasks/next")
    def tasks_next(kind: str, disease: str | None = None, _: str = Depends(annotator)):
        try:
            task = service.next_task(kind, disease_id=disease)
        except RiskMinerError as exc:
            raise http_error(exc) from exc
        if task is None:
            return Response(status_code=204)
        return task.to_json_dict()

    @app.get("/tasks/counts")
    def tasks_counts(_: str = Depends(annotator)):
        return service.task_counts()

    @app.post("/tasks/{task_id}/spans")
    def submit_span(task_id: str, body: SpanSubmission, who: str = Depends(annotator)):
        try:
            item = service.submit_span(task_id, body.span_start, body.answer_text,
                                       body.subgroup_only, annotator_id=who)
        except RiskMinerError as exc:
            raise http_error(exc) from exc
        return item.to_json_dict()

    @app.post("/tasks/{task_id}/mark")
    def submit_mark(task_id: str, body: MarkSubmission, who: str = Depends(annotator)):
        try:
            mark = service.submit_mark(task_id, body.mark, body.highly_significant,
                                       annotator_id=who)
        except RiskMinerError as exc:
            raise http_error(exc) from exc
        return mark.to_json_dict()

    @app.post("/tasks/{task_id}/complete")
    def complete(task_id: str, _: str = Depends(annotator)):
        try:
            service.complete_task(task_id)
        except RiskMinerError as exc:
            raise http_error(exc) from exc
        return {"task_id": task_id, "status": DONE}

    @app.post("/tasks/{task_id}/skip")
    def skip(task_id: str, _: str = Depends(annotator)):
        try:
            service.skip_task(task_id)
        except RiskMinerError as exc:
            raise http_error(exc) from exc
        return {"task_id": task_id, "status": SKIPPED}

    @app.get("/export/qa")
    def export_qa(_: str = Depends(annotator)):
        path = service.export_qa()
        return FileResponse(path, media_type="application/json",
                            filename="qa_dataset.json")

    @app.get("/export/marks")
    def export_marks(_: str = Depends(annotator)):
        path = service.export_marks()
        return FileResponse(path, media_type="application/x-ndjson",
                            filename="marks.jsonl")

    return app
