"""Disease-disjoint train/test splitting.

Whole diseases go to one side, so the test set probes generalization to
unseen diseases. At seed-dataset scale the assignment search is exhaustive
for exactness; larger catalogs fall back to seeded greedy bin packing.
"""

from __future__ import annotations

import logging
import random
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from ..errors import TooFewDiseases
from .dataset import QAItem

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 20

# Warn when the best achievable train fraction is off target by more than this.
DEVIATION_WARN = 0.05


@dataclass
class SplitResult:
    train: list[QAItem]
    test: list[QAItem]
    train_diseases: list[str]
    test_diseases: list[str]
    achieved_fraction: float
    deviation_warning: bool


def disease_disjoint_split(items: Sequence[QAItem], ratio: float, seed: int = 0) -> SplitResult:
    """Partition items so no disease appears on both sides.

    The train-item fraction lands as close as possible to `ratio`: exhaustive
    subset search up to EXHAUSTIVE_LIMIT diseases, seeded largest-first greedy
    beyond. Both sides are always non-empty.
    """
    if not 0 < ratio < 1:
        raise ValueError(f"ratio {ratio} outside (0, 1)")
    counts = Counter(item.disease_id for item in items)
    if len(counts) < 2:
        raise TooFewDiseases(f"split needs >= 2 diseases, got {len(counts)}")
    diseases = sorted(counts)
    sizes = [counts[d] for d in diseases]
    total = sum(sizes)

    if len(diseases) <= EXHAUSTIVE_LIMIT:
        train_set = _best_subset_exhaustive(diseases, sizes, total, ratio)
    else:
        train_set = _greedy_split(diseases, sizes, total, ratio, seed)

    train = [item for item in items if item.disease_id in train_set]
    test = [item for item in items if item.disease_id not in train_set]
    fraction = len(train) / total
    warned = abs(fraction - ratio) > DEVIATION_WARN
    if warned:
        logger.warning(
            "split deviates from target: achieved train fraction %.4f vs requested %.4f",
            fraction, ratio,
        )
    return SplitResult(
        train=train,
        test=test,
        train_diseases=sorted(train_set),
        test_diseases=sorted(set(diseases) - train_set),
        achieved_fraction=fraction,
        deviation_warning=warned,
    )


def _best_subset_exhaustive(diseases: list[str], sizes: list[int], total: int,
                            ratio: float) -> set[str]:
    n = len(diseases)
    # subset_sums[m] built incrementally from m with its lowest bit cleared.
    subset_sums = [0] * (1 << n)
    for mask in range(1, 1 << n):
        low = (mask & -mask).bit_length() - 1
        subset_sums[mask] = subset_sums[mask & (mask - 1)] + sizes[low]
    best_mask = None
    best_dev = None
    full = (1 << n) - 1
    for mask in range(1, full):  # proper non-empty subsets: both sides stay non-empty
        dev = abs(subset_sums[mask] / total - ratio)
        if best_dev is None or dev < best_dev:
            best_dev = dev
            best_mask = mask
    assert best_mask is not None
    return {diseases[i] for i in range(n) if best_mask >> i & 1}


def _greedy_split(diseases: list[str], sizes: list[int], total: int,
                  ratio: float, seed: int) -> set[str]:
    order = list(range(len(diseases)))
    random.Random(seed).shuffle(order)
    order.sort(key=lambda i: -sizes[i])  # stable sort keeps the shuffled tie order
    target = ratio * total
    train: set[str] = set()
    train_sum = 0
    for i in order:
        if abs(train_sum + sizes[i] - target) <= abs(train_sum - target):
            train.add(diseases[i])
            train_sum += sizes[i]
    if not train:
        train.add(diseases[order[0]])
    if len(train) == len(diseases):
        smallest = min(order, key=lambda i: sizes[i])
        train.discard(diseases[smallest])
    return train
