"""Lexical trigger table shared by the heuristic screen and extract backends.

The heuristics are deterministic reference backends: they let the whole
pipeline run and be tested without any ML runtime. Scores are a weighted
count of trigger phrases squashed through a logistic, so they live in (0, 1)
like a classifier probability.
"""

from __future__ import annotations

import math

# Phrases that signal a reported risk-factor finding. Counted as plain
# substrings, case-insensitively unless listed in CASE_SENSITIVE_TRIGGERS.
POSITIVE_TRIGGERS: tuple[str, ...] = (
    "risk factor for",
    "risk factors for",
    "increased risk of",
    "associated with a significantly increased risk",
    "odds ratio",
    "OR,",
    "95% CI",
)

# Phrases that signal an explicitly negative finding.
NEGATIVE_TRIGGERS: tuple[str, ...] = (
    "not associated with",
    "no higher risk",
)

# "OR," must keep its case: lowercase "or," is everyday prose, uppercase is
# the odds-ratio abbreviation. "95% CI" likewise never appears lowercased.
CASE_SENSITIVE_TRIGGERS: frozenset[str] = frozenset({"OR,", "95% CI"})

POSITIVE_WEIGHT = 1.0
# Negations outweigh affirmations: abstracts reporting a null result still
# carry statistical boilerplate ("95% CI"), which must not flip them positive.
NEGATIVE_WEIGHT = 2.0

# A non-empty text in which no trigger fires at all is weak evidence against
# a risk-factor finding; empty text stays at the 0.5 baseline.
NO_EVIDENCE_PENALTY = 0.25


def count_trigger(text: str, text_lower: str, trigger: str) -> int:
    if trigger in CASE_SENSITIVE_TRIGGERS:
        return text.count(trigger)
    return text_lower.count(trigger.lower())


def trigger_evidence(text: str) -> tuple[float, bool]:
    """Weighted trigger count and whether any trigger fired at all.

    Trigger occurrences are counted independently per phrase, so overlapping
    phrases ("increased risk of" inside a longer trigger) each contribute.
    """
    text_lower = text.lower()
    net = 0.0
    fired = False
    for trigger in POSITIVE_TRIGGERS:
        n = count_trigger(text, text_lower, trigger)
        if n:
            fired = True
            net += POSITIVE_WEIGHT * n
    for trigger in NEGATIVE_TRIGGERS:
        n = count_trigger(text, text_lower, trigger)
        if n:
            fired = True
            net -= NEGATIVE_WEIGHT * n
    return net, fired


def trigger_net_weight(text: str) -> float:
    """Net trigger weight with the no-evidence penalty folded in."""
    net, fired = trigger_evidence(text)
    if not fired and text.strip():
        return -NO_EVIDENCE_PENALTY
    return net


def squash(x: float) -> float:
    """Logistic squash onto (0, 1); squash(0) == 0.5."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def trigger_probability(text: str) -> float:
    return squash(trigger_net_weight(text))
