"""PubMed harvesting: query construction, Entrez paging, abstract parsing, corpus cache.

One query per disease primary name. Retrieval is abstracts-only: PubMed serves
abstracts freely and they carry the findings this pipeline needs.
"""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .catalog import Disease
from .errors import EmptyDiseaseName, MalformedResponse, OfflineCacheMiss, SchemaError
from .store import read_json, utc_now_iso, write_json
from .transport import Transport, get_with_retries

logger = logging.getLogger(__name__)

ESEARCH_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi"
EFETCH_URL = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/efetch.fcgi"

# NCBI usage policy: 3 req/s without an API key, 10 with one.
RATE_LIMIT_KEYLESS = 3
RATE_LIMIT_KEYED = 10

FETCH_BATCH_SIZE = 200
DEFAULT_PAGE_SIZE = 500
MAX_PAGE_SIZE = 10_000

QUERY_TEMPLATE = (
    '"{name}"[Title/Abstract] AND ("risk factor"[Title/Abstract]'
    ' OR "risk factors"[Title/Abstract] OR "risk factors"[MeSH Terms])'
)


@dataclass
class PubMedQuery:
    disease_name: str
    rendered: str


def build_query(disease_name: str) -> PubMedQuery:
    """Render the retrieval query for one disease name.

    The name plus both singular and plural "risk factor" phrases, matched over
    title/abstract and MeSH terms. Double quotes would break the phrase syntax
    and are stripped with a warning.
    """
    name = disease_name.strip()
    if not name:
        raise EmptyDiseaseName("disease name is empty")
    if '"' in name:
        logger.warning("stripping double quotes from disease name %r", name)
        name = name.replace('"', "").strip()
        if not name:
            raise EmptyDiseaseName("disease name is empty after stripping quotes")
    return PubMedQuery(disease_name=name, rendered=QUERY_TEMPLATE.format(name=name))


@dataclass
class Article:
    pmid: str
    title: str = ""
    abstract_text: str = ""
    mesh_terms: list[str] = field(default_factory=list)
    pub_year: int | None = None
    retrieved_for: list[str] = field(default_factory=list)
    no_abstract: bool = False

    def validate(self) -> None:
        if not self.pmid or not self.pmid.isdigit():
            raise SchemaError(f"bad pmid {self.pmid!r}: must be non-empty digits")
        if not self.abstract_text and not self.no_abstract:
            raise SchemaError(f"pmid {self.pmid}: empty abstract without no_abstract flag")

    def to_json_dict(self) -> dict:
        return {
            "pmid": self.pmid,
            "title": self.title,
            "abstract_text": self.abstract_text,
            "mesh_terms": self.mesh_terms,
            "pub_year": self.pub_year,
            "retrieved_for": self.retrieved_for,
            "no_abstract": self.no_abstract,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Article":
        article = cls(
            pmid=data["pmid"],
            title=data.get("title", ""),
            abstract_text=data.get("abstract_text", ""),
            mesh_terms=list(data.get("mesh_terms", [])),
            pub_year=data.get("pub_year"),
            retrieved_for=list(data.get("retrieved_for", [])),
            no_abstract=bool(data.get("no_abstract", False)),
        )
        article.validate()
        return article


@dataclass
class HarvestManifest:
    disease_id: str
    query: str
    total_hits: int
    fetched: int
    timestamp: str
    cache_paths: list[str] = field(default_factory=list)
    failed_pmids: list[str] = field(default_factory=list)

    def validate(self) -> None:
        if self.fetched > self.total_hits:
            raise SchemaError(
                f"{self.disease_id}: fetched {self.fetched} exceeds total_hits {self.total_hits}"
            )

    def to_json_dict(self) -> dict:
        return {
            "disease_id": self.disease_id,
            "query": self.query,
            "total_hits": self.total_hits,
            "fetched": self.fetched,
            "timestamp": self.timestamp,
            "cache_paths": self.cache_paths,
            "failed_pmids": self.failed_pmids,
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "HarvestManifest":
        manifest = cls(
            disease_id=data["disease_id"],
            query=data["query"],
            total_hits=data["total_hits"],
            fetched=data["fetched"],
            timestamp=data["timestamp"],
            cache_paths=list(data.get("cache_paths", [])),
            failed_pmids=list(data.get("failed_pmids", [])),
        )
        manifest.validate()
        return manifest


class EntrezClient:
    """Entrez E-utilities client: esearch for pmids, efetch for records."""

    def __init__(self, transport: Transport, api_key: str | None = None,
                 fetch_workers: int = 4):
        self._transport = transport
        self._api_key = api_key
        self._fetch_workers = max(1, fetch_workers)

    def _get(self, url: str, params: dict[str, str]) -> bytes:
        if self._api_key:
            params = {**params, "api_key": self._api_key}
        return get_with_retries(self._transport, url, params).body

    def search_ids(self, query: PubMedQuery, page_size: int = DEFAULT_PAGE_SIZE) -> list[str]:
        """All pmids matching the query, in PubMed's order, deduplicated.

        Pages through results with `retstart` until the reported count is
        covered (or the server stops returning ids).
        """
        if not 1 <= page_size <= MAX_PAGE_SIZE:
            raise ValueError(f"page_size {page_size} outside [1, {MAX_PAGE_SIZE}]")
        pmids: list[str] = []
        seen: set[str] = set()
        retstart = 0
        while True:
            body = self._get(ESEARCH_URL, {
                "db": "pubmed",
                "term": query.rendered,
                "retmode": "xml",
                "retmax": str(page_size),
                "retstart": str(retstart),
            })
            count, page = _parse_esearch(body)
            for pmid in page:
                if pmid not in seen:
                    seen.add(pmid)
                    pmids.append(pmid)
            retstart += page_size
            if retstart >= count or not page:
                return pmids

    def fetch_articles(self, pmids: Sequence[str]) -> tuple[list[Article], list[str]]:
        """Fetch article records in batches of at most FETCH_BATCH_SIZE.

        Returns (articles, failed_pmids): articles in input pmid order for the
        records that parsed, failed_pmids for requested ids the server did not
        return a parseable record for.
        """
        if not pmids:
            raise ValueError("fetch_articles needs at least one pmid")
        batches = [list(pmids[i:i + FETCH_BATCH_SIZE])
                   for i in range(0, len(pmids), FETCH_BATCH_SIZE)]

        def fetch_batch(batch: list[str]) -> list[Article]:
            body = self._get(EFETCH_URL, {
                "db": "pubmed",
                "retmode": "xml",
                "id": ",".join(batch),
            })
            return _parse_efetch(body)

        if len(batches) == 1:
            parsed_lists = [fetch_batch(batches[0])]
        else:
            with ThreadPoolExecutor(max_workers=self._fetch_workers) as pool:
                parsed_lists = list(pool.map(fetch_batch, batches))

        by_pmid = {a.pmid: a for batch in parsed_lists for a in batch}
        articles = [by_pmid[p] for p in pmids if p in by_pmid]
        failed = [p for p in pmids if p not in by_pmid]
        return articles, failed


def _parse_esearch(body: bytes) -> tuple[int, list[str]]:
    try:
        root = ET.fromstring(body)
    except ET.ParseError as exc:
        raise MalformedResponse(f"esearch response is not XML: {exc}") from exc
    count_el = root.find("Count")
    if count_el is None or count_el.text is None:
        raise MalformedResponse("esearch response has no Count")
    try:
        count = int(count_el.text)
    except ValueError as exc:
        raise MalformedResponse(f"esearch Count is not an integer: {count_el.text!r}") from exc
    ids = [el.text for el in root.findall("IdList/Id") if el.text]
    return count, ids


def _parse_efetch(body: bytes) -> list[Article]:
    try:
        root = ET.fromstring(body)
    except ET.ParseError as exc:
        raise MalformedResponse(f"efetch response is not XML: {exc}") from exc
    articles = []
    for node in root.findall(".//PubmedArticle"):
        article = _parse_pubmed_article(node)
        if article is not None:
            articles.append(article)
    return articles


def _parse_pubmed_article(node: ET.Element) -> Article | None:
    pmid_el = node.find(".//MedlineCitation/PMID")
    pmid = (pmid_el.text or "").strip() if pmid_el is not None else ""
    if not pmid or not pmid.isdigit():
        return None

    title_el = node.find(".//Article/ArticleTitle")
    title = "".join(title_el.itertext()).strip() if title_el is not None else ""

    # AbstractText sections concatenate in document order, keeping their
    # labels ("OBJECTIVE:", "RESULTS:") as part of the text.
    parts = []
    for abstract_el in node.findall(".//Article/Abstract/AbstractText"):
        text = "".join(abstract_el.itertext()).strip()
        label = abstract_el.get("Label", "").strip()
        if label:
            parts.append(f"{label}: {text}")
        elif text:
            parts.append(text)
    abstract_text = " ".join(parts)

    mesh_terms = []
    for mesh_el in node.findall(".//MeshHeading/DescriptorName"):
        if mesh_el.text:
            mesh_terms.append(mesh_el.text.strip())

    pub_year = None
    year_el = node.find(".//Article/Journal/JournalIssue/PubDate/Year")
    if year_el is not None and year_el.text and year_el.text.strip().isdigit():
        pub_year = int(year_el.text.strip())
    else:
        medline_el = node.find(".//Article/Journal/JournalIssue/PubDate/MedlineDate")
        if medline_el is not None and medline_el.text:
            head = medline_el.text.strip()[:4]
            if head.isdigit():
                pub_year = int(head)

    return Article(
        pmid=pmid,
        title=title,
        abstract_text=abstract_text,
        mesh_terms=mesh_terms,
        pub_year=pub_year,
        no_abstract=not abstract_text,
    )


class CorpusStore:
    """Disk layout for harvested articles: one JSON per pmid plus per-disease manifests.

    Articles are deduplicated across diseases; `retrieved_for` accumulates the
    disease ids each pmid was retrieved under.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.articles_dir = self.root / "corpus" / "articles"
        self.manifests_dir = self.root / "corpus" / "manifests"

    def article_path(self, pmid: str) -> Path:
        return self.articles_dir / f"{pmid}.json"

    def manifest_file(self, disease_id: str) -> Path:
        return self.manifests_dir / f"{disease_id}.json"

    def save_article(self, article: Article, disease_id: str) -> Path:
        article.validate()
        path = self.article_path(article.pmid)
        if path.exists():
            stored = Article.from_json_dict(read_json(path))
            if disease_id not in stored.retrieved_for:
                stored.retrieved_for.append(disease_id)
                write_json(path, stored.to_json_dict())
            return path
        record = Article.from_json_dict({**article.to_json_dict(), "retrieved_for": [disease_id]})
        write_json(path, record.to_json_dict())
        return path

    def load_article(self, pmid: str) -> Article:
        return Article.from_json_dict(read_json(self.article_path(pmid)))

    def iter_articles(self) -> list[Article]:
        if not self.articles_dir.exists():
            return []
        return [Article.from_json_dict(read_json(p))
                for p in sorted(self.articles_dir.glob("*.json"))]

    def load_manifest(self, disease_id: str) -> HarvestManifest | None:
        path = self.manifest_file(disease_id)
        if not path.exists():
            return None
        return HarvestManifest.from_json_dict(read_json(path))

    def save_manifest(self, manifest: HarvestManifest) -> Path:
        manifest.validate()
        path = self.manifest_file(manifest.disease_id)
        write_json(path, manifest.to_json_dict())
        return path


def harvest_disease(
    disease: Disease,
    corpus: CorpusStore,
    client: EntrezClient,
    page_size: int = DEFAULT_PAGE_SIZE,
    offline: bool = False,
) -> HarvestManifest:
    """Run query -> search -> fetch -> persist for one disease.

    A warm cache (manifest for the same query with all article files present)
    short-circuits to zero network requests and returns the stored manifest
    with a fresh timestamp. Offline mode with a cold cache is an explicit
    error naming the disease.
    """
    query = build_query(disease.name)
    cached = corpus.load_manifest(disease.kegg_id)
    if cached is not None and cached.query == query.rendered:
        paths = [corpus.root / p for p in cached.cache_paths]
        if all(p.exists() for p in paths):
            cached.timestamp = utc_now_iso()
            corpus.save_manifest(cached)
            return cached
    if offline:
        raise OfflineCacheMiss(
            f"offline harvest requested but cache is cold for {disease.kegg_id} ({disease.name})"
        )

    pmids = client.search_ids(query, page_size=page_size)
    articles: list[Article] = []
    failed: list[str] = []
    if pmids:
        articles, failed = client.fetch_articles(pmids)

    cache_paths = []
    for article in articles:
        path = corpus.save_article(article, disease.kegg_id)
        cache_paths.append(str(path.relative_to(corpus.root)))

    manifest = HarvestManifest(
        disease_id=disease.kegg_id,
        query=query.rendered,
        total_hits=len(pmids),
        fetched=len(articles),
        timestamp=utc_now_iso(),
        cache_paths=cache_paths,
        failed_pmids=failed,
    )
    corpus.save_manifest(manifest)
    return manifest
