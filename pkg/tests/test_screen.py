from __future__ import annotations

import math
import random

import pytest

from riskminer.errors import LengthMismatch, NoAbstract, UnknownPmid
from riskminer.harvest import Article
from riskminer.screen import (
    NEG,
    POS,
    HeuristicClassifier,
    ScreenResult,
    classification_report,
    classify_article,
    screen_articles,
)

CML_EXCERPT = (
    "RESULTS: Previous diagnoses of dyspepsia, gastritis or peptic ulcers, as well as "
    "previous proton pump inhibitor (PPI) medication, were all associated with a "
    "significantly increased risk of CML (RRs, 1.5-2.0; P = 0.0005-0.05). Meanwhile, "
    "neither inflammatory bowel disease nor intake of NSAIDs were associated with CML, "
    "indicating that it is not gastrointestinal ulcer or inflammation per se that "
    "influences risk."
)

RCC_EXCERPT = (
    "RESULTS: A total of 888 incident RCCs and 356 RCC deaths were identified. In models "
    "including adjustment for body mass index and energy intake, there was no higher risk "
    "of incident RCC associated with consumption of juices (HR per 100 g/day increment = "
    "1.03; 95% CI, 0.97-1.09), total soft drinks (HR = 1.01; 95% CI, 0.98-1.05). "
    "CONCLUSIONS: Consumption of juices or soft drinks was not associated with RCC "
    "incidence or mortality after adjusting for obesity."
)


def _article(text: str, pmid: str = "1", title: str = "") -> Article:
    return Article(pmid=pmid, title=title, abstract_text=text,
                   no_abstract=not (title or text))


def test_cml_excerpt_screens_positive():
    result = classify_article(_article(CML_EXCERPT), HeuristicClassifier())
    assert result.label == POS
    # "associated with a significantly increased risk" + "increased risk of"
    assert result.probability == pytest.approx(1 / (1 + math.exp(-2.0)))


def test_rcc_excerpt_screens_negative():
    result = classify_article(_article(RCC_EXCERPT), HeuristicClassifier())
    assert result.label == NEG
    assert result.probability < 0.5


def test_no_trigger_abstract_is_negative_below_half():
    text = "We describe surgical workflow improvements in a single-center series."
    result = classify_article(_article(text), HeuristicClassifier())
    assert result.label == NEG
    assert result.probability < 0.5


def test_no_abstract_raises():
    article = Article(pmid="9", abstract_text="", no_abstract=True)
    with pytest.raises(NoAbstract):
        classify_article(article, HeuristicClassifier())


def test_empty_text_is_exact_baseline_tie_to_neg():
    backend = HeuristicClassifier()
    assert backend.classify("", "", []) == 0.5
    result = classify_article(_article("", title="x"), HeuristicClassifier())
    # zero-evidence title-only text sits below or at the threshold, never POS
    assert result.label == NEG


def test_net_weight_hand_evaluation():
    # 2 positive hits (weight 1.0 each) and 1 negative hit (weight 2.0):
    # net 0.0, squashed to exactly 0.5, NEG by tie-break.
    text = ("There was an increased risk of stroke and an increased risk of death, "
            "while treatment was not associated with either outcome.")
    backend = HeuristicClassifier()
    assert backend.classify("", text, []) == pytest.approx(0.5)
    assert classify_article(_article(text), backend).label == NEG


def test_heuristic_is_pure():
    backend = HeuristicClassifier()
    values = {backend.classify("t", CML_EXCERPT, []) for _ in range(5)}
    assert len(values) == 1


def test_threshold_monotonicity():
    article = _article(CML_EXCERPT)
    backend = HeuristicClassifier()
    labels = [classify_article(article, backend, threshold=t).label
              for t in (0.1, 0.5, 0.87, 0.89, 0.99)]
    # once NEG at some threshold, higher thresholds stay NEG
    first_neg = labels.index(NEG) if NEG in labels else len(labels)
    assert all(label == NEG for label in labels[first_neg:])


class ExplodingBackend:
    backend_id = "exploding"
    version = "1"
    concurrent_safe = True

    def classify(self, title, abstract_text, mesh_terms):
        from riskminer.errors import BackendFailure
        raise BackendFailure("boom")


def test_backend_failure_quarantines_and_continues():
    articles = [_article(CML_EXCERPT, pmid="1"), _article(CML_EXCERPT, pmid="2")]
    output = screen_articles(articles, ExplodingBackend())
    assert output.results == []
    assert [pmid for pmid, _ in output.quarantined] == ["1", "2"]


# --- classification report ----------------------------------------------------


def _results_and_gold(tp: int, fn: int, fp: int, tn: int):
    results, gold = [], {}
    pmid = 0
    for pred, actual, count in ((POS, POS, tp), (NEG, POS, fn), (POS, NEG, fp), (NEG, NEG, tn)):
        for _ in range(count):
            pmid += 1
            results.append(ScreenResult(pmid=str(pmid), label=pred,
                                        probability=0.9 if pred == POS else 0.1,
                                        backend_id="test"))
            gold[str(pmid)] = actual
    return results, gold


def test_report_perfect_predictions():
    results, gold = _results_and_gold(tp=6, fn=0, fp=0, tn=4)
    report = classification_report(results, gold)
    assert (report.pos.precision, report.pos.recall, report.pos.f1) == (1.0, 1.0, 1.0)
    assert (report.neg.precision, report.neg.recall, report.neg.f1) == (1.0, 1.0, 1.0)
    assert report.accuracy == 1.0
    assert report.warnings == []


def test_report_pinned_confusion_matrix():
    # TP=16 FN=1 FP=2 TN=18 over 37 items.
    results, gold = _results_and_gold(tp=16, fn=1, fp=2, tn=18)
    report = classification_report(results, gold)
    assert report.pos.precision == 0.8889
    assert report.pos.recall == 0.9412
    assert report.pos.f1 == 0.9143
    assert report.neg.precision == 0.9474
    assert report.neg.recall == 0.9000
    assert report.accuracy == 0.9189


def test_report_degenerate_class():
    results, gold = _results_and_gold(tp=0, fn=0, fp=5, tn=0)  # all predicted POS, gold NEG
    report = classification_report(results, gold)
    assert report.pos.precision == 0.0
    assert report.neg.recall == 0.0
    assert report.warnings  # degenerate classes flagged


def test_report_length_mismatch_and_unknown_pmid():
    results, gold = _results_and_gold(tp=2, fn=0, fp=0, tn=1)
    with pytest.raises(LengthMismatch):
        classification_report(results[:-1], gold)
    bad_gold = dict(gold)
    bad_gold["999"] = bad_gold.pop(results[0].pmid)
    with pytest.raises(UnknownPmid):
        classification_report(results, bad_gold)


def _brute_force_report(pairs: list[tuple[str, str]]):
    # independent recount used as the oracle
    tp = sum(1 for p, g in pairs if p == POS and g == POS)
    fp = sum(1 for p, g in pairs if p == POS and g == NEG)
    fn = sum(1 for p, g in pairs if p == NEG and g == POS)
    tn = sum(1 for p, g in pairs if p == NEG and g == NEG)
    def prf(tp_, fp_, fn_):
        precision = tp_ / (tp_ + fp_) if tp_ + fp_ else 0.0
        recall = tp_ / (tp_ + fn_) if tp_ + fn_ else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return precision, recall, f1
    pos = prf(tp, fp, fn)
    neg = prf(tn, fn, fp)
    accuracy = (tp + tn) / len(pairs) if pairs else 0.0
    return pos, neg, accuracy, (tp, fp, fn, tn)


def test_report_matches_brute_force_recount():
    rng = random.Random(42)
    for _ in range(200):
        n = rng.randint(1, 40)
        pairs = [(rng.choice((POS, NEG)), rng.choice((POS, NEG))) for _ in range(n)]
        results = [ScreenResult(pmid=str(i), label=p, probability=0.5, backend_id="t")
                   for i, (p, _) in enumerate(pairs)]
        gold = {str(i): g for i, (_, g) in enumerate(pairs)}
        report = classification_report(results, gold)
        pos, neg, accuracy, confusion = _brute_force_report(pairs)
        assert (report.tp, report.fp, report.fn, report.tn) == confusion
        assert report.pos.precision == round(pos[0], 4)
        assert report.pos.recall == round(pos[1], 4)
        assert report.pos.f1 == round(pos[2], 4)
        assert report.neg.precision == round(neg[0], 4)
        assert report.neg.recall == round(neg[1], 4)
        assert report.neg.f1 == round(neg[2], 4)
        assert report.accuracy == round(accuracy, 4)
