"""Shared fixtures: repo paths, a recorded-transport builder, a fake clock."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]
GOLDEN = REPO / "tests" / "fixtures" / "golden"
DATA = REPO / "data"


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN


@pytest.fixture
def data_dir() -> Path:
    return DATA


class FakeClock:
    """Deterministic clock; sleep() advances time instead of waiting."""

    def __init__(self, start: float = 1000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.now += seconds

    def advance(self, seconds: float) -> None:
        self.now += seconds


@pytest.fixture
def fake_clock() -> FakeClock:
    return FakeClock()


def write_recorded(dir_path: Path, routes: list[dict]) -> Path:
    """Materialize a RecordedTransport fixture dir from in-memory routes.

    Each route: {"url":..., "params":..., "body_text":..., [status]}.
    """
    dir_path.mkdir(parents=True, exist_ok=True)
    manifest = []
    for index, route in enumerate(routes):
        body_name = f"body_{index:03d}.xml"
        (dir_path / body_name).write_text(route["body_text"], encoding="utf-8")
        entry = {"url": route["url"], "params": route["params"], "body": body_name}
        if "status" in route:
            entry["status"] = route["status"]
        if "headers" in route:
            entry["headers"] = route["headers"]
        manifest.append(entry)
    (dir_path / "routes.json").write_text(json.dumps({"routes": manifest}), encoding="utf-8")
    return dir_path


def esearch_body(count: int, ids: list[str]) -> str:
    id_block = "".join(f"<Id>{i}</Id>" for i in ids)
    return (f'<?xml version="1.0"?><eSearchResult><Count>{count}</Count>'
            f"<IdList>{id_block}</IdList></eSearchResult>")


def efetch_body(records: list[dict]) -> str:
    """records: {"pmid":..., "title":..., "sections": [(label, text)] | None}."""
    parts = []
    for rec in records:
        abstract = ""
        if rec.get("sections") is not None:
            texts = "".join(
                (f'<AbstractText Label="{label}">{text}</AbstractText>'
                 if label else f"<AbstractText>{text}</AbstractText>")
                for label, text in rec["sections"])
            abstract = f"<Abstract>{texts}</Abstract>"
        pmid_el = f"<PMID>{rec['pmid']}</PMID>" if rec.get("pmid") else ""
        mesh = "".join(
            f"<MeshHeading><DescriptorName>{t}</DescriptorName></MeshHeading>"
            for t in rec.get("mesh", []))
        parts.append(
            "<PubmedArticle><MedlineCitation>"
            f"{pmid_el}"
            "<Article>"
            f"<ArticleTitle>{rec.get('title', '')}</ArticleTitle>{abstract}"
            "</Article>"
            f"<MeshHeadingList>{mesh}</MeshHeadingList>"
            "</MedlineCitation></PubmedArticle>")
    return ('<?xml version="1.0"?><PubmedArticleSet>' + "".join(parts)
            + "</PubmedArticleSet>")
