from __future__ import annotations

import random
from itertools import combinations

import pytest

from riskminer.errors import TooFewDiseases
from riskminer.evalkit.dataset import AnswerSpan, QAItem
from riskminer.evalkit.split import disease_disjoint_split


def _items_for(counts: dict[str, int]) -> list[QAItem]:
    items = []
    n = 0
    for disease_id, count in counts.items():
        for _ in range(count):
            n += 1
            answer = "smoking"
            context = f"Case {n}: smoking was flagged."
            items.append(QAItem(
                id=f"q{n}", disease_id=disease_id, pmid=str(n), context=context,
                question="What are the risk factors for x?",
                answers=[AnswerSpan(span_start=context.index(answer), answer_text=answer)],
            ))
    return items


def brute_force_best_fraction(counts: list[int], ratio: float) -> float:
    """Independent oracle: enumerate proper non-empty disease subsets."""
    total = sum(counts)
    best = None
    indices = range(len(counts))
    for size in range(1, len(counts)):
        for subset in combinations(indices, size):
            fraction = sum(counts[i] for i in subset) / total
            if best is None or abs(fraction - ratio) < abs(best - ratio):
                best = fraction
    return best


def test_split_exact_fraction_example():
    counts = {"d1": 40, "d2": 30, "d3": 20, "d4": 5, "d5": 5}
    result = disease_disjoint_split(_items_for(counts), ratio=0.8, seed=0)
    assert result.achieved_fraction == pytest.approx(0.8)
    assert not result.deviation_warning
    assert set(result.train_diseases).isdisjoint(result.test_diseases)


def test_split_two_equal_diseases_warns():
    counts = {"d1": 10, "d2": 10}
    result = disease_disjoint_split(_items_for(counts), ratio=0.8, seed=0)
    assert result.achieved_fraction == pytest.approx(0.5)
    assert result.deviation_warning


def test_split_single_disease_rejected():
    with pytest.raises(TooFewDiseases):
        disease_disjoint_split(_items_for({"d1": 10}), ratio=0.8)


def test_split_bad_ratio():
    with pytest.raises(ValueError):
        disease_disjoint_split(_items_for({"d1": 1, "d2": 1}), ratio=1.0)


def test_split_disjoint_and_optimal_random_instances():
    rng = random.Random(11)
    for _ in range(150):
        n_diseases = rng.randint(2, 10)
        counts = {f"d{i}": rng.randint(1, 50) for i in range(n_diseases)}
        ratio = rng.uniform(0.1, 0.9)
        items = _items_for(counts)
        result = disease_disjoint_split(items, ratio=ratio, seed=0)
        train_set = set(result.train_diseases)
        test_set = set(result.test_diseases)
        assert train_set.isdisjoint(test_set)
        assert train_set | test_set == set(counts)
        assert {i.disease_id for i in result.train} <= train_set
        assert {i.disease_id for i in result.test} <= test_set
        assert len(result.train) + len(result.test) == len(items)
        best = brute_force_best_fraction(list(counts.values()), ratio)
        assert abs(result.achieved_fraction - ratio) == pytest.approx(abs(best - ratio))


def test_split_greedy_beyond_exhaustive_limit():
    rng = random.Random(5)
    counts = {f"d{i:02d}": rng.randint(1, 30) for i in range(25)}
    result = disease_disjoint_split(_items_for(counts), ratio=0.8, seed=42)
    assert set(result.train_diseases).isdisjoint(result.test_diseases)
    assert result.train and result.test
    # greedy packing should land near the target at this scale
    assert abs(result.achieved_fraction - 0.8) < 0.1


def test_split_deterministic_for_seed():
    counts = {f"d{i}": (i % 5) + 1 for i in range(8)}
    a = disease_disjoint_split(_items_for(counts), ratio=0.7, seed=3)
    b = disease_disjoint_split(_items_for(counts), ratio=0.7, seed=3)
    assert a.train_diseases == b.train_diseases
