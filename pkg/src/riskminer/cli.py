"""Command-line surface: catalog management, the three pipeline stages,
evaluation, splitting, exports, and the annotation server.

Exit codes: 0 success, 2 configuration error, 3 stage failure.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from pathlib import Path

import click

from . import catalog as catalog_mod
from .config import PipelineConfig, load_config
from .errors import ConfigError, RiskMinerError
from .evalkit.dataset import load_qa_dataset, save_qa_dataset
from .evalkit.marks import EVAL_MARK_SCHEMA, aggregate_marks, record_disease_index
from .evalkit.metrics import evaluate_qa
from .evalkit.split import disease_disjoint_split
from .extract import RISK_FACTOR_SCHEMA
from .pipeline import run_pipeline
from .screen import SCREEN_RESULT_SCHEMA, classification_report
from .store import read_records, write_json
from .transport import RateLimiter, RequestsTransport

EXIT_CONFIG = 2
EXIT_STAGE = 3


def handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(EXIT_CONFIG)
        except RiskMinerError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_STAGE)
    return wrapper


@click.group()
@click.option("--verbose", is_flag=True, help="Debug-level logging.")
def main(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )


# -- catalog ------------------------------------------------------------------

@main.group()
def catalog():
    """Manage the disease catalog cache."""


@catalog.command("sync")
@click.option("--cache-dir", type=click.Path(path_type=Path), required=True)
@click.option("--ids", default=None, help="Comma-separated KEGG ids; default: full list.")
@click.option("--refresh", is_flag=True, help="Re-download records already cached.")
@handle_errors
def catalog_sync(cache_dir: Path, ids: str | None, refresh: bool):
    """Download KEGG disease records into the cache directory."""
    transport = RequestsTransport(rate_limiter=RateLimiter(3))
    id_list = [d.strip() for d in ids.split(",") if d.strip()] if ids else None
    fetched = catalog_mod.sync_catalog_cache(transport, cache_dir, disease_ids=id_list,
                                             refresh=refresh)
    click.echo(f"fetched {fetched} records into {cache_dir}")


@catalog.command("show")
@click.option("--cache-dir", type=click.Path(path_type=Path), required=True)
@click.option("--families", type=click.Path(path_type=Path), default=None)
@click.option("--as-json", is_flag=True, help="Dump the parsed catalog as JSON.")
@handle_errors
def catalog_show(cache_dir: Path, families: Path | None, as_json: bool):
    """Summarize (or dump) the cached disease catalog."""
    cat = catalog_mod.load_catalog_dir(cache_dir, families)
    if as_json:
        click.echo(json.dumps(
            {k: cat.entries[k].to_json_dict() for k in sorted(cat.entries)},
            indent=2, sort_keys=True))
        return
    click.echo(f"{len(cat)} diseases")
    with_family = sum(1 for k in cat.entries if cat.family_of(k))
    click.echo(f"{with_family} with family labels")
    if cat.name_collisions:
        click.echo(f"{len(cat.name_collisions)} ambiguous names")
    if cat.unknown_family_ids:
        click.echo(f"{len(cat.unknown_family_ids)} sidecar ids not in catalog")


# -- pipeline stages ---------------------------------------------------------

def _stage_command(stage: str, help_text: str):
    @main.command(stage, help=help_text)
    @click.option("--config", "config_path", type=click.Path(path_type=Path), required=True)
    @click.option("--disease", default=None,
                  help="Override the configured disease selection (id or 'all').")
    @click.option("--page-size", type=int, default=None)
    @click.option("--offline", is_flag=True, default=None)
    @click.option("--resume", is_flag=True)
    @handle_errors
    def command(config_path: Path, disease: str | None, page_size: int | None,
                offline: bool | None, resume: bool):
        config = _load_with_overrides(config_path, disease, page_size, offline)
        run = run_pipeline(config, resume=resume, only=(stage,))
        _echo_run(run)
    return command


def _load_with_overrides(config_path: Path, disease: str | None,
                         page_size: int | None, offline: bool | None) -> PipelineConfig:
    config = load_config(config_path)
    if disease:
        config.diseases = [d.strip() for d in disease.split(",") if d.strip()]
    if page_size is not None:
        config.page_size = page_size
    if offline:
        config.offline = True
    config.validate()
    return config


def _echo_run(run) -> None:
    if not run.manifests:
        click.echo("0 stages executed")
    for manifest in run.manifests:
        counters = ", ".join(f"{k}={v}" for k, v in sorted(manifest.counters.items()))
        click.echo(f"{manifest.stage}: {counters}")


_stage_command("harvest", "Retrieve abstracts from PubMed for the selected diseases.")
_stage_command("screen", "Classify harvested abstracts for risk-factor findings.")
_stage_command("extract", "Extract risk-factor spans from positively screened abstracts.")


@main.command("run")
@click.option("--config", "config_path", type=click.Path(path_type=Path), required=True)
@click.option("--resume", is_flag=True,
              help="Skip stages whose manifest matches the current config.")
@handle_errors
def run_cmd(config_path: Path, resume: bool):
    """Run harvest, screen and extract back to back."""
    config = load_config(config_path)
    run = run_pipeline(config, resume=resume)
    _echo_run(run)


# -- evaluation ----------------------------------------------------------------

@main.group()
def evaluate():
    """Automatic metrics and human-mark aggregation."""


@evaluate.command("qa")
@click.option("--predictions", type=click.Path(path_type=Path), required=True,
              help="JSON object: item id -> predicted answer text.")
@click.option("--gold", type=click.Path(path_type=Path), required=True,
              help="Canonical QA dataset file.")
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Where to write the report (default: metrics/qa_report.json).")
@handle_errors
def evaluate_qa_cmd(predictions: Path, gold: Path, out: Path | None):
    """Exact-match and token-F1 of predictions against a gold dataset."""
    preds = json.loads(predictions.read_text(encoding="utf-8"))
    items = load_qa_dataset(gold)
    report = evaluate_qa(preds, items)
    out = out or Path("metrics/qa_report.json")
    write_json(out, report.to_json_dict())
    click.echo(f"EM {report.em_percent:.2f}  F1 {report.f1_percent:.2f}  (n={report.n})")
    click.echo(f"wrote {out}")


@evaluate.command("classifier")
@click.option("--results", type=click.Path(path_type=Path), required=True,
              help="Screen results JSONL.")
@click.option("--gold", type=click.Path(path_type=Path), required=True,
              help="JSON object: pmid -> POS|NEG.")
@click.option("--out", type=click.Path(path_type=Path), default=None)
@handle_errors
def evaluate_classifier_cmd(results: Path, gold: Path, out: Path | None):
    """Per-class precision/recall/F1 and accuracy of screen results."""
    screen_results = read_records(results, SCREEN_RESULT_SCHEMA)
    gold_labels = json.loads(gold.read_text(encoding="utf-8"))
    report = classification_report(screen_results, gold_labels)
    out = out or Path("metrics/classifier_report.json")
    write_json(out, report.to_json_dict())
    click.echo(f"accuracy {report.accuracy:.4f}  POS F1 {report.pos.f1:.4f}"
               f"  NEG F1 {report.neg.f1:.4f}")
    for warning in report.warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(f"wrote {out}")


@evaluate.command("marks")
@click.option("--marks", "marks_path", type=click.Path(path_type=Path), required=True)
@click.option("--records", "record_paths", type=click.Path(path_type=Path),
              multiple=True, required=True, help="Extracted-record JSONL (repeatable).")
@click.option("--families", type=click.Path(path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@handle_errors
def evaluate_marks_cmd(marks_path: Path, record_paths: tuple[Path, ...],
                       families: Path, out: Path | None):
    """Aggregate human evaluation marks into the per-family table."""
    marks = read_records(marks_path, EVAL_MARK_SCHEMA)
    records = []
    for path in record_paths:
        records.extend(read_records(path, RISK_FACTOR_SCHEMA))
    family_map = catalog_mod.read_families_tsv(families)
    table = aggregate_marks(marks, record_disease_index(records), family_map)
    out = out or Path("metrics/family_table.tsv")
    table.write_tsv(out)
    m1, m2, m3, total = table.grand_totals
    click.echo(f"totals: mark1={m1} mark2={m2} mark3={m3} total={total}")
    click.echo(f"wrote {out}")


# -- dataset utilities -----------------------------------------------------------

@main.command("split")
@click.option("--dataset", type=click.Path(path_type=Path), required=True)
@click.option("--ratio", type=float, default=0.8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--train-out", type=click.Path(path_type=Path), required=True)
@click.option("--test-out", type=click.Path(path_type=Path), required=True)
@handle_errors
def split_cmd(dataset: Path, ratio: float, seed: int, train_out: Path, test_out: Path):
    """Disease-disjoint train/test split of a QA dataset."""
    items = load_qa_dataset(dataset)
    result = disease_disjoint_split(items, ratio, seed)
    save_qa_dataset(result.train, train_out)
    save_qa_dataset(result.test, test_out)
    click.echo(f"train {len(result.train)} items / {len(result.train_diseases)} diseases;"
               f" test {len(result.test)} items / {len(result.test_diseases)} diseases;"
               f" train fraction {result.achieved_fraction:.4f}")
    if result.deviation_warning:
        click.echo("warning: achieved fraction deviates from the requested ratio", err=True)


@main.group()
def export():
    """Export annotation-service datasets to their canonical files."""


def _annotation_service(corpus: Path, catalog_dir: Path | None, families: Path | None):
    from .service import AnnotationService
    cat = None
    if catalog_dir is not None:
        cat = catalog_mod.load_catalog_dir(catalog_dir, families)
    return AnnotationService(corpus, catalog=cat)


def _export_command(kind: str):
    @export.command(kind)
    @click.option("--corpus", type=click.Path(path_type=Path), required=True,
                  help="Pipeline output root the service ran over.")
    @click.option("--catalog-dir", type=click.Path(path_type=Path), default=None,
                  help="KEGG cache dir (default: <corpus>/cache/kegg).")
    @click.option("--families", type=click.Path(path_type=Path), default=None)
    @click.option("--out", type=click.Path(path_type=Path), default=None)
    @handle_errors
    def command(corpus: Path, catalog_dir: Path | None, families: Path | None,
                out: Path | None):
        service = _annotation_service(corpus, catalog_dir, families)
        path = service.export_qa() if kind == "qa" else service.export_marks()
        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_bytes(path.read_bytes())
            path = out
        click.echo(f"wrote {path}")
    return command


_export_command("qa")
_export_command("marks")


# -- annotation server -------------------------------------------------------------

@main.command("serve")
@click.option("--corpus", type=click.Path(path_type=Path), required=True,
              help="Pipeline output root (corpus/, screen/, extracted/).")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--tokens", type=click.Path(path_type=Path), default=None,
              help="token<TAB>annotator_id file; omit for anonymous access.")
@click.option("--catalog-dir", type=click.Path(path_type=Path), default=None,
              help="KEGG cache dir (default: <corpus>/cache/kegg).")
@click.option("--families", type=click.Path(path_type=Path), default=None,
              help="Families sidecar (default: <corpus>/families.tsv if present).")
@handle_errors
def serve(corpus: Path, port: int, host: str, tokens: Path | None,
          catalog_dir: Path | None, families: Path | None):
    """Start the annotation HTTP service."""
    import uvicorn

    from .service import create_app, read_tokens_file

    service = _annotation_service(corpus, catalog_dir, families)
    token_map = read_tokens_file(tokens) if tokens else None
    app = create_app(service, tokens=token_map)
    counts = service.task_counts()
    click.echo(f"serving {counts['total']} tasks on {host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
