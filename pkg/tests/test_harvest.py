from __future__ import annotations

import pytest

from riskminer.catalog import Disease
from riskminer.errors import EmptyDiseaseName, MalformedResponse, OfflineCacheMiss
from riskminer.harvest import (
    EFETCH_URL,
    ESEARCH_URL,
    Article,
    CorpusStore,
    EntrezClient,
    build_query,
    harvest_disease,
)
from riskminer.transport import RecordedTransport

from .conftest import efetch_body, esearch_body, write_recorded

EXPECTED_TEMPLATE = ('"{name}"[Title/Abstract] AND ("risk factor"[Title/Abstract]'
                     ' OR "risk factors"[Title/Abstract] OR "risk factors"[MeSH Terms])')


def test_build_query_template():
    query = build_query("cystic fibrosis")
    assert query.rendered == EXPECTED_TEMPLATE.format(name="cystic fibrosis")
    assert query.rendered.count("cystic fibrosis") == 1
    assert '"risk factor"' in query.rendered and '"risk factors"' in query.rendered


def test_build_query_trims():
    assert build_query("  Melanoma  ").rendered == EXPECTED_TEMPLATE.format(name="Melanoma")


def test_build_query_empty():
    with pytest.raises(EmptyDiseaseName):
        build_query("")


def test_build_query_strips_quotes():
    query = build_query('fake "quoted" disease')
    assert '"fake quoted disease"[Title/Abstract]' in query.rendered


def _search_route(term: str, retstart: int, retmax: int, body: str) -> dict:
    return {
        "url": ESEARCH_URL,
        "params": {"db": "pubmed", "term": term, "retmode": "xml",
                   "retmax": str(retmax), "retstart": str(retstart)},
        "body_text": body,
    }


def test_search_ids_pages_in_order(tmp_path):
    query = build_query("pagedosis")
    fixture = write_recorded(tmp_path, [
        _search_route(query.rendered, 0, 3, esearch_body(5, ["11", "12", "13"])),
        _search_route(query.rendered, 3, 3, esearch_body(5, ["14", "15"])),
    ])
    client = EntrezClient(RecordedTransport(fixture))
    assert client.search_ids(query, page_size=3) == ["11", "12", "13", "14", "15"]


def test_search_ids_dedupes_across_pages(tmp_path):
    query = build_query("dupopathy")
    fixture = write_recorded(tmp_path, [
        _search_route(query.rendered, 0, 2, esearch_body(4, ["21", "22"])),
        _search_route(query.rendered, 2, 2, esearch_body(4, ["22", "23"])),
    ])
    client = EntrezClient(RecordedTransport(fixture))
    assert client.search_ids(query, page_size=2) == ["21", "22", "23"]


def test_search_ids_zero_hits(tmp_path):
    query = build_query("nullopathy")
    fixture = write_recorded(tmp_path, [
        _search_route(query.rendered, 0, 20, esearch_body(0, [])),
    ])
    client = EntrezClient(RecordedTransport(fixture))
    assert client.search_ids(query, page_size=20) == []


def test_search_ids_non_xml_body(tmp_path):
    query = build_query("brokenosis")
    fixture = write_recorded(tmp_path, [
        _search_route(query.rendered, 0, 20, "this is not xml at all"),
    ])
    client = EntrezClient(RecordedTransport(fixture))
    with pytest.raises(MalformedResponse):
        client.search_ids(query, page_size=20)


def test_search_ids_page_size_bounds(tmp_path):
    client = EntrezClient(RecordedTransport(write_recorded(tmp_path, [])))
    with pytest.raises(ValueError):
        client.search_ids(build_query("x"), page_size=0)
    with pytest.raises(ValueError):
        client.search_ids(build_query("x"), page_size=10_001)


def _fetch_route(pmids: list[str], body: str) -> dict:
    return {
        "url": EFETCH_URL,
        "params": {"db": "pubmed", "retmode": "xml", "id": ",".join(pmids)},
        "body_text": body,
    }


def test_fetch_articles_labeled_sections(tmp_path):
    body = efetch_body([{
        "pmid": "123",
        "title": "A title.",
        "sections": [("OBJECTIVE", "To test parsing."), ("RESULTS", "It parsed.")],
        "mesh": ["Humans"],
    }])
    fixture = write_recorded(tmp_path, [_fetch_route(["123"], body)])
    client = EntrezClient(RecordedTransport(fixture))
    articles, failed = client.fetch_articles(["123"])
    assert failed == []
    assert articles[0].abstract_text == "OBJECTIVE: To test parsing. RESULTS: It parsed."
    assert articles[0].mesh_terms == ["Humans"]


def test_fetch_articles_no_abstract_flagged(tmp_path):
    body = efetch_body([{"pmid": "124", "title": "No abstract here.", "sections": None}])
    fixture = write_recorded(tmp_path, [_fetch_route(["124"], body)])
    client = EntrezClient(RecordedTransport(fixture))
    articles, _ = client.fetch_articles(["124"])
    assert articles[0].no_abstract is True
    assert articles[0].abstract_text == ""


def test_fetch_articles_partial_batch(tmp_path):
    body = efetch_body([
        {"pmid": "1", "title": "ok", "sections": [("", "text one")]},
        {"pmid": "", "title": "malformed record", "sections": [("", "no pmid")]},
        {"pmid": "3", "title": "ok", "sections": [("", "text three")]},
    ])
    fixture = write_recorded(tmp_path, [_fetch_route(["1", "2", "3"], body)])
    client = EntrezClient(RecordedTransport(fixture))
    articles, failed = client.fetch_articles(["1", "2", "3"])
    assert [a.pmid for a in articles] == ["1", "3"]
    assert failed == ["2"]


def test_fetch_articles_order_preserving(tmp_path):
    body = efetch_body([
        {"pmid": "3", "title": "t3", "sections": [("", "x")]},
        {"pmid": "1", "title": "t1", "sections": [("", "x")]},
        {"pmid": "2", "title": "t2", "sections": [("", "x")]},
    ])
    fixture = write_recorded(tmp_path, [_fetch_route(["1", "2", "3"], body)])
    client = EntrezClient(RecordedTransport(fixture))
    articles, _ = client.fetch_articles(["1", "2", "3"])
    assert [a.pmid for a in articles] == ["1", "2", "3"]


def _harvest_fixture(tmp_path, disease_name: str, pmids: list[str]):
    query = build_query(disease_name)
    routes = [
        _search_route(query.rendered, 0, 10, esearch_body(len(pmids), pmids)),
        _fetch_route(pmids, efetch_body(
            [{"pmid": p, "title": f"title {p}", "sections": [("", f"abstract {p}")]}
             for p in pmids])),
    ]
    return write_recorded(tmp_path / "recorded", routes)


def test_harvest_cold_run_manifest(tmp_path):
    pmids = ["31", "32", "33", "34", "35"]
    fixture = _harvest_fixture(tmp_path, "Testitis", pmids)
    disease = Disease(kegg_id="H99901", name="Testitis")
    corpus = CorpusStore(tmp_path / "out")
    client = EntrezClient(RecordedTransport(fixture))
    manifest = harvest_disease(disease, corpus, client, page_size=10)
    assert manifest.total_hits == 5
    assert manifest.fetched == 5
    assert len(manifest.cache_paths) == 5
    for pmid in pmids:
        assert corpus.load_article(pmid).retrieved_for == ["H99901"]


def test_harvest_warm_rerun_zero_requests(tmp_path):
    pmids = ["31", "32", "33"]
    fixture = _harvest_fixture(tmp_path, "Testitis", pmids)
    disease = Disease(kegg_id="H99901", name="Testitis")
    corpus = CorpusStore(tmp_path / "out")
    transport = RecordedTransport(fixture)
    first = harvest_disease(disease, corpus, EntrezClient(transport), page_size=10)
    cold_requests = transport.request_count
    second = harvest_disease(disease, corpus, EntrezClient(transport), page_size=10)
    assert transport.request_count == cold_requests
    assert second.to_json_dict() | {"timestamp": ""} == first.to_json_dict() | {"timestamp": ""}


def test_harvest_shared_pmid_accumulates_retrieved_for(tmp_path):
    fixture_a = _harvest_fixture(tmp_path / "a", "Alphaitis", ["77"])
    fixture_b = _harvest_fixture(tmp_path / "b", "Betaitis", ["77"])
    corpus = CorpusStore(tmp_path / "out")
    harvest_disease(Disease(kegg_id="H00001", name="Alphaitis"), corpus,
                    EntrezClient(RecordedTransport(fixture_a)), page_size=10)
    harvest_disease(Disease(kegg_id="H00002", name="Betaitis"), corpus,
                    EntrezClient(RecordedTransport(fixture_b)), page_size=10)
    assert corpus.load_article("77").retrieved_for == ["H00001", "H00002"]
    assert len(list((tmp_path / "out" / "corpus" / "articles").glob("*.json"))) == 1


def test_harvest_offline_cold_cache(tmp_path):
    disease = Disease(kegg_id="H99901", name="Testitis")
    corpus = CorpusStore(tmp_path / "out")
    client = EntrezClient(RecordedTransport(write_recorded(tmp_path / "r", [])))
    with pytest.raises(OfflineCacheMiss, match="H99901"):
        harvest_disease(disease, corpus, client, offline=True)


def test_article_validation():
    from riskminer.errors import SchemaError
    with pytest.raises(SchemaError):
        Article(pmid="12a", abstract_text="x").validate()
    with pytest.raises(SchemaError):
        Article(pmid="12", abstract_text="").validate()  # empty without flag
    Article(pmid="12", abstract_text="", no_abstract=True).validate()
