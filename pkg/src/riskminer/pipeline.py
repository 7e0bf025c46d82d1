"""Pipeline driver: harvest -> screen -> extract -> confidence filter.

Stage outputs are deterministic functions of (config, fixtures): record files
are rewritten from scratch each stage run, JSON is written with sorted keys,
and iteration orders are pinned, so two runs over identical inputs produce
identical output trees (timestamps aside).
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .catalog import Disease, DiseaseCatalog, load_catalog_dir
from .config import PipelineConfig
from .errors import BackendFailure, ConfigError, RiskMinerError, StageFailure
from .evalkit.dataset import load_qa_dataset
from .extract import (
    RISK_FACTOR_SCHEMA,
    HeuristicSpanExtractor,
    HttpExtractor,
    MaxAnswerLength,
    RiskFactorRecord,
    SpanExtractorBackend,
    compute_max_answer_length,
    confidence_filter,
    extract_for_article,
)
from .harvest import Article, CorpusStore, EntrezClient, harvest_disease
from .screen import (
    POS,
    SCREEN_RESULT_SCHEMA,
    ClassifierBackend,
    HeuristicClassifier,
    HttpClassifier,
    ScreenResult,
    screen_articles,
)
from .store import (
    RunManifest,
    append_records,
    read_manifest,
    read_records,
    utc_now_iso,
    write_json,
    write_manifest,
)
from .transport import RateLimiter, RecordedTransport, RequestsTransport, Transport

logger = logging.getLogger(__name__)

NCBI_API_KEY_ENV = "NCBI_API_KEY"


def stage_run_id(stage: str, config_hash: str) -> str:
    return f"{stage}-{config_hash[:12]}"


def select_diseases(catalog: DiseaseCatalog, selection: Sequence[str]) -> list[Disease]:
    if list(selection) == ["all"]:
        return [catalog.entries[k] for k in sorted(catalog.entries)]
    missing = [d for d in selection if d not in catalog]
    if missing:
        raise ConfigError(f"selected diseases not in catalog: {', '.join(missing)}")
    return [catalog.entries[d] for d in sorted(set(selection))]


def build_transport(config: PipelineConfig) -> Transport:
    if config.recorded_dir is not None:
        return RecordedTransport(config.recorded_dir)
    api_key = os.environ.get(NCBI_API_KEY_ENV) or None
    limit = config.rate_limit_keyed if api_key else config.rate_limit_keyless
    return RequestsTransport(rate_limiter=RateLimiter(limit))


def make_classifier(config: PipelineConfig) -> ClassifierBackend:
    if config.screen_backend == "http":
        return HttpClassifier(config.screen_endpoint)
    return HeuristicClassifier()


def make_extractor(config: PipelineConfig) -> SpanExtractorBackend:
    if config.extract_backend == "http":
        return HttpExtractor(config.extract_endpoint)
    return HeuristicSpanExtractor()


def resolve_max_answer_length(config: PipelineConfig) -> MaxAnswerLength:
    if config.max_answer_length is not None:
        return MaxAnswerLength(value=config.max_answer_length,
                               percentile=config.length_percentile, sample_size=0)
    if config.seed_dataset is None:
        raise ConfigError("extract stage needs max_answer_length or a seed_dataset"
                          " to derive it from")
    items = load_qa_dataset(config.seed_dataset)
    answers = [answer.answer_text for item in items for answer in item.answers]
    return compute_max_answer_length(answers, percentile=config.length_percentile)


@dataclass
class PipelineRun:
    config_hash: str
    manifests: list[RunManifest]

    @property
    def stages_executed(self) -> list[str]:
        return [m.stage for m in self.manifests]


def _fresh(path: Path) -> Path:
    """Stage outputs are rewritten, not appended across runs."""
    if path.exists():
        path.unlink()
    sidecar = path.with_name(path.name + ".sha256")
    if sidecar.exists():
        sidecar.unlink()
    return path


def run_harvest_stage(config: PipelineConfig, diseases: Sequence[Disease],
                      transport: Transport) -> RunManifest:
    corpus = CorpusStore(config.output_root)
    client = EntrezClient(transport, api_key=os.environ.get(NCBI_API_KEY_ENV) or None,
                          fetch_workers=config.fetch_workers)
    started = utc_now_iso()
    total_hits = 0
    fetched = 0
    for disease in diseases:
        manifest = harvest_disease(disease, corpus, client,
                                   page_size=config.page_size, offline=config.offline)
        total_hits += manifest.total_hits
        fetched += manifest.fetched
    return RunManifest(
        run_id=stage_run_id("harvest", config.config_hash()),
        stage="harvest",
        config_hash=config.config_hash(),
        input_refs=[str(config.catalog_cache_dir)],
        output_refs=["corpus/articles", "corpus/manifests"],
        started_at=started,
        finished_at=utc_now_iso(),
        counters={"diseases": len(diseases), "total_hits": total_hits, "fetched": fetched},
    )


def _corpus_articles_for(corpus: CorpusStore, disease_ids: set[str]) -> list[Article]:
    articles = [a for a in corpus.iter_articles()
                if set(a.retrieved_for) & disease_ids]
    articles.sort(key=lambda a: int(a.pmid))
    return articles


def run_screen_stage(config: PipelineConfig, diseases: Sequence[Disease]) -> RunManifest:
    corpus = CorpusStore(config.output_root)
    backend = make_classifier(config)
    articles = _corpus_articles_for(corpus, {d.kegg_id for d in diseases})
    started = utc_now_iso()
    output = screen_articles(articles, backend, threshold=config.screen_threshold)

    out_dir = config.output_root / "screen" / backend.backend_id
    results_path = _fresh(out_dir / "results.jsonl")
    append_records(results_path, output.results, SCREEN_RESULT_SCHEMA)
    quarantine_path = _fresh(out_dir / "quarantine.jsonl")
    if output.quarantined:
        write_json(quarantine_path,
                   [{"pmid": pmid, "error": reason} for pmid, reason in output.quarantined])

    pos = sum(1 for r in output.results if r.label == POS)
    return RunManifest(
        run_id=stage_run_id("screen", config.config_hash()),
        stage="screen",
        config_hash=config.config_hash(),
        input_refs=["corpus/articles"],
        output_refs=[str(results_path.relative_to(config.output_root))],
        started_at=started,
        finished_at=utc_now_iso(),
        counters={
            "screened": len(output.results),
            "pos": pos,
            "neg": len(output.results) - pos,
            "quarantined": len(output.quarantined),
            "skipped_no_abstract": len(output.skipped_no_abstract),
        },
    )


def run_extract_stage(config: PipelineConfig, diseases: Sequence[Disease]) -> RunManifest:
    corpus = CorpusStore(config.output_root)
    backend = make_extractor(config)
    classifier_id = make_classifier(config).backend_id
    max_len = resolve_max_answer_length(config)
    started = utc_now_iso()

    results_path = config.output_root / "screen" / classifier_id / "results.jsonl"
    screen_results: list[ScreenResult] = read_records(results_path, SCREEN_RESULT_SCHEMA)
    pos_pmids = {r.pmid for r in screen_results if r.label == POS}

    out_dir = config.output_root / "extracted" / backend.backend_id
    out_dir.mkdir(parents=True, exist_ok=True)
    summary: dict[str, dict[str, int]] = {}
    quarantined: list[dict[str, str]] = []
    total_kept = 0
    for disease in diseases:
        articles = [a for a in _corpus_articles_for(corpus, {disease.kegg_id})
                    if a.pmid in pos_pmids and not a.no_abstract]
        records: list[RiskFactorRecord] = []
        for article in articles:
            try:
                records.extend(extract_for_article(article, disease, backend, max_len,
                                                   k=config.k))
            except BackendFailure as exc:
                logger.warning("extraction quarantined pmid %s for %s: %s",
                               article.pmid, disease.kegg_id, exc)
                quarantined.append({"pmid": article.pmid, "disease_id": disease.kegg_id,
                                    "error": str(exc)})
        kept = confidence_filter(records, coefficient=config.confidence_coefficient)
        path = _fresh(out_dir / f"{disease.kegg_id}.jsonl")
        append_records(path, kept, RISK_FACTOR_SCHEMA)
        summary[disease.kegg_id] = {
            "articles_pos": len(articles),
            "records_extracted": len(records),
            "records_kept": len(kept),
        }
        total_kept += len(kept)

    write_json(out_dir / "summary.json", {
        "backend_id": backend.backend_id,
        "max_answer_length": max_len.value,
        "length_percentile": max_len.percentile,
        "confidence_coefficient": config.confidence_coefficient,
        "filter_order": "length-then-confidence",
        "diseases": summary,
        "total_records": total_kept,
    })
    if quarantined:
        write_json(out_dir / "quarantine.json", quarantined)

    return RunManifest(
        run_id=stage_run_id("extract", config.config_hash()),
        stage="extract",
        config_hash=config.config_hash(),
        input_refs=[str(results_path.relative_to(config.output_root)), "corpus/articles"],
        output_refs=[str(out_dir.relative_to(config.output_root))],
        started_at=started,
        finished_at=utc_now_iso(),
        counters={
            "diseases": len(diseases),
            "records_kept": total_kept,
            "quarantined": len(quarantined),
        },
    )


def run_pipeline(config: PipelineConfig, transport: Transport | None = None,
                 resume: bool = False, only: Sequence[str] | None = None) -> PipelineRun:
    """Execute the three pipeline stages for the configured disease selection.

    With `resume`, stages whose manifest already matches the current config
    hash are skipped; `only` restricts the run to a subset of stages (their
    relative order is fixed regardless). The first fatal stage error surfaces
    as StageFailure carrying the manifests of the completed stages.
    """
    config.validate()
    catalog = load_catalog_dir(config.catalog_cache_dir, config.families_file)
    diseases = select_diseases(catalog, config.diseases)
    config_hash = config.config_hash()
    config.output_root.mkdir(parents=True, exist_ok=True)

    stages = (
        ("harvest", lambda: run_harvest_stage(
            config, diseases, transport if transport is not None else build_transport(config))),
        ("screen", lambda: run_screen_stage(config, diseases)),
        ("extract", lambda: run_extract_stage(config, diseases)),
    )

    manifests: list[RunManifest] = []
    for stage, runner in stages:
        if only is not None and stage not in only:
            continue
        run_id = stage_run_id(stage, config_hash)
        if resume:
            existing = read_manifest(config.output_root, run_id)
            if existing is not None and existing.config_hash == config_hash:
                logger.info("resume: skipping stage %s (manifest %s matches)", stage, run_id)
                continue
        try:
            manifest = runner()
        except RiskMinerError as exc:
            raise StageFailure(stage, exc, completed=manifests) from exc
        write_manifest(config.output_root, manifest)
        manifests.append(manifest)
    return PipelineRun(config_hash=config_hash, manifests=manifests)


def load_extracted_records(root: Path, backend_id: str) -> dict[str, list[RiskFactorRecord]]:
    """Read back every per-disease record file under extracted/<backend_id>/."""
    out: dict[str, list[RiskFactorRecord]] = {}
    base = root / "extracted" / backend_id
    if not base.exists():
        return out
    for path in sorted(base.glob("*.jsonl")):
        out[path.stem] = read_records(path, RISK_FACTOR_SCHEMA)
    return out
