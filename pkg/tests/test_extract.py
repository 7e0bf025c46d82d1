from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from riskminer.catalog import Disease
from riskminer.errors import (
    BackendFailure,
    EmptyDiseaseName,
    EmptySample,
    MixedDiseases,
)
from riskminer.extract import (
    CandidateSpan,
    HeuristicSpanExtractor,
    MaxAnswerLength,
    RiskFactorRecord,
    compute_max_answer_length,
    confidence_filter,
    extract_for_article,
    render_question,
    select_spans,
    sentence_spans,
)
from riskminer.harvest import Article

DIABETES_ABSTRACT = (
    "OBJECTIVE: To examine the association between smoking, alcohol consumption, and the "
    "incidence of non-insulin dependent diabetes mellitus in men of middle years and older. "
    "RESULTS: During 230,769 person years of follow up 509 men were newly diagnosed with "
    "diabetes. CONCLUSIONS: Cigarette smoking may be an independent, modifiable risk factor "
    "for non-insulin dependent diabetes mellitus."
)


def test_render_question_simple():
    q = render_question("melanoma")
    assert q.text == "What are the risk factors for melanoma?"


def test_render_question_verbatim_name():
    name = "B-cell acute lymphoblastic leukemia"
    q = render_question(name)
    assert q.text == f"What are the risk factors for {name}?"


def test_render_question_empty():
    with pytest.raises(EmptyDiseaseName):
        render_question("")


# --- max answer length ---------------------------------------------------------


def test_percentile_constant_sample():
    assert compute_max_answer_length(["abcde"] * 7).value == 5


def test_percentile_1_to_100():
    answers = ["x" * n for n in range(1, 101)]
    result = compute_max_answer_length(answers)
    assert result.value == 95
    assert result.sample_size == 100


def test_percentile_ten_multiples_of_ten():
    answers = ["x" * n for n in range(10, 101, 10)]
    assert compute_max_answer_length(answers).value == 100  # ceil(9.5) -> rank 10


def test_percentile_empty_sample():
    with pytest.raises(EmptySample):
        compute_max_answer_length([])


def test_percentile_value_is_observed():
    rng = random.Random(7)
    for _ in range(50):
        lengths = [rng.randint(1, 400) for _ in range(rng.randint(1, 60))]
        answers = ["y" * n for n in lengths]
        assert compute_max_answer_length(answers).value in lengths


# --- span selection ------------------------------------------------------------


def _span(start: int, end: int, score: float, context: str) -> CandidateSpan:
    return CandidateSpan(start_char=start, end_char=end, text=context[start:end], score=score)


def test_select_spans_drops_over_length():
    context = "z" * 500
    candidate = _span(0, 400, 0.9, context)
    assert select_spans([candidate], MaxAnswerLength(120, 0.95, 10), k=5) == []


def test_select_spans_overlap_keeps_higher_score():
    context = "a" * 60
    kept = select_spans([_span(10, 30, 0.9, context), _span(20, 40, 0.7, context)],
                        MaxAnswerLength(100, 0.95, 10), k=5)
    assert [(s.start_char, s.end_char) for s in kept] == [(10, 30)]


def test_select_spans_empty():
    assert select_spans([], MaxAnswerLength(100, 0.95, 10), k=5) == []


def test_select_spans_tie_break_earlier_then_shorter():
    context = "b" * 100
    spans = [_span(20, 40, 0.8, context), _span(10, 30, 0.8, context), _span(10, 25, 0.8, context)]
    kept = select_spans(spans, MaxAnswerLength(100, 0.95, 10), k=5)
    # same score: earlier start wins, then shorter span; overlaps suppressed
    assert (kept[0].start_char, kept[0].end_char) == (10, 25)


def test_select_spans_output_disjoint_and_bounded():
    rng = random.Random(3)
    context = "c" * 200
    for _ in range(100):
        candidates = []
        for _ in range(rng.randint(0, 15)):
            start = rng.randint(0, 180)
            end = rng.randint(start + 1, min(start + 60, 200))
            candidates.append(_span(start, end, rng.random(), context))
        max_len = MaxAnswerLength(rng.randint(5, 60), 0.95, 10)
        kept = select_spans(candidates, max_len, k=rng.randint(1, 6))
        for span in kept:
            assert len(span.text) <= max_len.value
        for i, a in enumerate(kept):
            for b in kept[i + 1:]:
                assert a.end_char <= b.start_char or b.end_char <= a.start_char


# --- heuristic extractor ---------------------------------------------------------


def test_extractor_single_trigger_sentence():
    extractor = HeuristicSpanExtractor()
    context = "Obesity is a risk factor for gout."
    spans = extractor.extract(context, "What are the risk factors for gout?", k=5)
    assert len(spans) == 1
    assert spans[0].text == context
    assert spans[0].score > 0.5


def test_extractor_no_triggers():
    extractor = HeuristicSpanExtractor()
    spans = extractor.extract("We describe a new surgical instrument.",
                              "What are the risk factors for gout?", k=5)
    assert spans == []


def test_extractor_disease_name_bonus_ranks_first():
    extractor = HeuristicSpanExtractor()
    context = ("Smoking is a risk factor for stroke. "
               "Obesity is a risk factor for gout in adults.")
    spans = extractor.extract(context, "What are the risk factors for gout?", k=5)
    assert len(spans) == 2
    assert "gout" in spans[0].text
    assert spans[0].score > spans[1].score


def test_sentence_spans_slice_invariant():
    for start, end in sentence_spans(DIABETES_ABSTRACT):
        sentence = DIABETES_ABSTRACT[start:end]
        assert sentence == sentence.strip()
        assert sentence


# --- end-to-end extraction -------------------------------------------------------


def _diabetes_article() -> Article:
    return Article(pmid="100", title="", abstract_text=DIABETES_ABSTRACT)


def _disease(name="Diabetes in men", kegg_id="H00409") -> Disease:
    return Disease(kegg_id=kegg_id, name=name)


def test_extract_for_article_diabetes_conclusion():
    records = extract_for_article(_diabetes_article(), _disease(),
                                  HeuristicSpanExtractor(),
                                  MaxAnswerLength(400, 0.95, 10), k=5)
    assert any("Cigarette smoking may be an independent, modifiable risk factor" in r.text
               for r in records)
    for record in records:
        record.check_against(DIABETES_ABSTRACT)


def test_extract_for_article_no_triggers_empty():
    article = Article(pmid="101", title="",
                      abstract_text="A purely descriptive workflow audit across sites.")
    records = extract_for_article(article, _disease(), HeuristicSpanExtractor(),
                                  MaxAnswerLength(400, 0.95, 10), k=5)
    assert records == []


class BrokenSpanBackend:
    backend_id = "broken"
    version = "1"
    concurrent_safe = True

    def extract(self, context, question, k):
        return [CandidateSpan(start_char=0, end_char=5, text="WRONG", score=0.5)]


def test_backend_slice_violation_is_backend_failure():
    with pytest.raises(BackendFailure, match="span contract"):
        extract_for_article(_diabetes_article(), _disease(), BrokenSpanBackend(),
                            MaxAnswerLength(400, 0.95, 10), k=5)


# --- confidence filter -------------------------------------------------------------


def _record(score: float, disease_id="H00001", index=0) -> RiskFactorRecord:
    text = f"factor {index}"
    return RiskFactorRecord(disease_id=disease_id, pmid=str(1000 + index), text=text,
                            start_char=0, end_char=len(text), score=score,
                            backend_id="test")


def test_confidence_filter_singleton_kept():
    records = [_record(0.3)]
    assert confidence_filter(records) == records


def test_confidence_filter_strict_threshold_example():
    records = [_record(0.90, index=0), _record(0.60, index=1), _record(0.50, index=2)]
    kept = confidence_filter(records)
    assert [r.score for r in kept] == [0.90, 0.60]


def test_confidence_filter_all_equal_kept():
    records = [_record(0.42, index=i) for i in range(4)]
    assert confidence_filter(records) == records


def test_confidence_filter_all_zero_drops_everything():
    records = [_record(0.0, index=i) for i in range(3)]
    assert confidence_filter(records) == []


def test_confidence_filter_mixed_diseases():
    with pytest.raises(MixedDiseases):
        confidence_filter([_record(0.5, disease_id="H00001"),
                           _record(0.5, disease_id="H00002", index=1)])


@given(st.lists(st.one_of(st.just(0.0),
                          st.floats(min_value=1e-6, max_value=1.0, allow_nan=False)),
                min_size=1, max_size=20),
       st.sampled_from([0.25, 0.5, 2.0, 4.0, 1024.0]))
def test_confidence_filter_scale_invariance(scores, scale):
    # power-of-two scales keep float comparisons exact for normal floats
    records = [_record(s, index=i) for i, s in enumerate(scores)]
    scaled = [_record(s * scale, index=i) for i, s in enumerate(scores)]
    kept = {r.pmid for r in confidence_filter(records)}
    kept_scaled = {r.pmid for r in confidence_filter(scaled)}
    assert kept == kept_scaled


@given(st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=1,
                max_size=20))
def test_confidence_filter_top_record_kept_when_positive(scores):
    records = [_record(s, index=i) for i, s in enumerate(scores)]
    kept = confidence_filter(records)
    if max(scores) > 0:
        top = max(records, key=lambda r: r.score)
        assert top in kept
    else:
        assert kept == []


@given(st.lists(st.floats(min_value=0.0, max_value=1.0, allow_nan=False), min_size=1,
                max_size=20),
       st.floats(min_value=0.05, max_value=0.6))
def test_confidence_filter_coefficient_monotone(scores, lower):
    records = [_record(s, index=i) for i, s in enumerate(scores)]
    kept_default = {r.pmid for r in confidence_filter(records, coefficient=0.6)}
    kept_lower = {r.pmid for r in confidence_filter(records, coefficient=lower)}
    assert kept_default <= kept_lower
